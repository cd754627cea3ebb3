#include "painpipe/models.hpp"

#include <algorithm>
#include <cmath>

#include "painpipe/error.hpp"

namespace painpipe::models {

using nn::Layer;

Architecture parse_architecture(const std::string& name) {
    if (name == "vgg16") return Architecture::vgg16;
    if (name == "resnet18") return Architecture::resnet18;
    if (name == "resnet34") return Architecture::resnet34;
    if (name == "reduced_test_net") return Architecture::reduced_test_net;
    throw ValidationError("unknown model '" + name + "' (expected vgg16, resnet18, resnet34 or reduced_test_net)");
}

std::string to_string(Architecture arch) {
    switch (arch) {
        case Architecture::vgg16: return "vgg16";
        case Architecture::resnet18: return "resnet18";
        case Architecture::resnet34: return "resnet34";
        case Architecture::reduced_test_net: return "reduced_test_net";
    }
    return "?";
}

void ModelSpec::validate() const {
    if (n_classes < 2) throw ValidationError("model.n_classes must be >= 2");
    if (!(width_multiplier > 0.0 && width_multiplier <= 1.0)) {
        throw ValidationError("model.width_multiplier must lie in (0, 1]");
    }
    if (input_size < 32) throw ValidationError("model.input_size must be >= 32 (five stride-2 reductions)");
}

nlohmann::json to_json(const ModelSpec& spec) {
    return {{"name", to_string(spec.name)},
            {"n_classes", spec.n_classes},
            {"input_size", spec.input_size},
            {"width_multiplier", spec.width_multiplier}};
}

ModelSpec spec_from_json(const nlohmann::json& j) {
    ModelSpec spec;
    spec.name = parse_architecture(j.at("name").get<std::string>());
    spec.n_classes = j.at("n_classes").get<int>();
    spec.input_size = j.at("input_size").get<int>();
    spec.width_multiplier = j.at("width_multiplier").get<double>();
    spec.validate();
    return spec;
}

std::vector<int> stage_blocks(Architecture arch) {
    switch (arch) {
        case Architecture::resnet18: return {2, 2, 2, 2};
        case Architecture::resnet34: return {3, 4, 6, 3};
        case Architecture::reduced_test_net: return {1, 1, 1, 1};
        case Architecture::vgg16: return {};
    }
    return {};
}

int scaled_width(int base, double multiplier) {
    return std::max(1, static_cast<int>(std::lround(base * multiplier)));
}

namespace {

template <typename T>
std::vector<std::unique_ptr<Layer<T>>> vgg16_layers(const ModelSpec& spec) {
    std::vector<std::unique_ptr<Layer<T>>> layers;
    static constexpr int kConvs[] = {2, 2, 3, 3, 3};
    static constexpr int kWidths[] = {64, 128, 256, 512, 512};
    int channels = 3;
    int index = 0;
    int side = spec.input_size;
    for (int stage = 0; stage < 5; ++stage) {
        const int width = scaled_width(kWidths[stage], spec.width_multiplier);
        for (int i = 0; i < kConvs[stage]; ++i) {
            layers.push_back(std::make_unique<nn::Conv2d<T>>("features." + std::to_string(index), channels, width, 3,
                                                             1, 1, true));
            layers.push_back(std::make_unique<nn::ReLU<T>>());
            index += 2;
            channels = width;
        }
        layers.push_back(std::make_unique<nn::MaxPool2d<T>>(2, 2, 0));
        ++index;
        side /= 2;
    }
    layers.push_back(std::make_unique<nn::Flatten<T>>());
    const int hidden = scaled_width(4096, spec.width_multiplier);
    const int features = channels * side * side;
    layers.push_back(std::make_unique<nn::Linear<T>>("classifier.0", features, hidden));
    layers.push_back(std::make_unique<nn::ReLU<T>>());
    layers.push_back(std::make_unique<nn::Linear<T>>("classifier.3", hidden, hidden));
    layers.push_back(std::make_unique<nn::ReLU<T>>());
    layers.push_back(std::make_unique<nn::Linear<T>>("classifier.6", hidden, spec.n_classes));
    return layers;
}

template <typename T>
std::vector<std::unique_ptr<Layer<T>>> resnet_layers(const ModelSpec& spec) {
    std::vector<std::unique_ptr<Layer<T>>> layers;
    const int stem = scaled_width(64, spec.width_multiplier);
    layers.push_back(std::make_unique<nn::Conv2d<T>>("conv1", 3, stem, 7, 2, 3, false));
    layers.push_back(std::make_unique<nn::BatchNorm2d<T>>("bn1", stem));
    layers.push_back(std::make_unique<nn::ReLU<T>>());
    layers.push_back(std::make_unique<nn::MaxPool2d<T>>(3, 2, 1));
    static constexpr int kWidths[] = {64, 128, 256, 512};
    const auto blocks = stage_blocks(spec.name);
    int channels = stem;
    for (std::size_t stage = 0; stage < blocks.size(); ++stage) {
        const int width = scaled_width(kWidths[stage], spec.width_multiplier);
        for (int b = 0; b < blocks[stage]; ++b) {
            const int stride = (stage > 0 && b == 0) ? 2 : 1;
            layers.push_back(std::make_unique<nn::BasicBlock<T>>(
                "layer" + std::to_string(stage + 1) + "." + std::to_string(b), channels, width, stride));
            channels = width;
        }
    }
    layers.push_back(std::make_unique<nn::GlobalAvgPool<T>>());
    layers.push_back(std::make_unique<nn::Linear<T>>("fc", channels, spec.n_classes));
    return layers;
}

template <typename T>
nn::Network<T> assemble(const ModelSpec& spec) {
    spec.validate();
    auto layers = spec.name == Architecture::vgg16 ? vgg16_layers<T>(spec) : resnet_layers<T>(spec);
    return nn::Network<T>(nn::Shape{1, 3, spec.input_size, spec.input_size}, std::move(layers));
}

}  // namespace

template <typename T>
Model<T> build(const ModelSpec& spec, std::uint64_t seed) {
    Model<T> model{spec, seed, assemble<T>(spec)};
    model.net.init(seed);
    return model;
}

template <typename T>
nn::Tensor<T> softmax(const nn::Tensor<T>& logits) {
    nn::Tensor<T> out(logits.shape);
    const std::size_t classes = logits.shape.per_sample();
    for (int n = 0; n < logits.shape.n; ++n) {
        const T* z = logits.sample(n);
        T* p = out.sample(n);
        const double peak = *std::max_element(z, z + classes);
        double total = 0.0;
        std::vector<double> e(classes);
        for (std::size_t c = 0; c < classes; ++c) {
            e[c] = std::exp(static_cast<double>(z[c]) - peak);
            total += e[c];
        }
        for (std::size_t c = 0; c < classes; ++c) p[c] = static_cast<T>(e[c] / total);
    }
    return out;
}

template <typename T>
nn::Tensor<T> forward(Model<T>& model, const nn::Tensor<T>& batch) {
    return softmax(model.net.forward(batch, nn::Mode::eval));
}

template <typename T>
std::vector<int> argmax_rows(const nn::Tensor<T>& rows) {
    std::vector<int> out;
    const std::size_t classes = rows.shape.per_sample();
    for (int n = 0; n < rows.shape.n; ++n) {
        const T* r = rows.sample(n);
        out.push_back(static_cast<int>(std::max_element(r, r + classes) - r));
    }
    return out;
}

CostReport cost_report(const ModelSpec& spec) {
    const auto net = assemble<float>(spec);
    return CostReport{count_parameters(net), count_flops(net, spec.input_size)};
}

template Model<float> build<float>(const ModelSpec&, std::uint64_t);
template Model<double> build<double>(const ModelSpec&, std::uint64_t);
template nn::Tensor<float> softmax<float>(const nn::Tensor<float>&);
template nn::Tensor<double> softmax<double>(const nn::Tensor<double>&);
template nn::Tensor<float> forward<float>(Model<float>&, const nn::Tensor<float>&);
template nn::Tensor<double> forward<double>(Model<double>&, const nn::Tensor<double>&);
template std::vector<int> argmax_rows<float>(const nn::Tensor<float>&);
template std::vector<int> argmax_rows<double>(const nn::Tensor<double>&);

}  // namespace painpipe::models
