#pragma once

// Architecture builders for VGG-16, ResNet-18/34 and a reduced residual
// network for desk-scale training, with a softmax classification head and
// parameter/FLOP accounting.

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "painpipe/nn/network.hpp"

namespace painpipe::models {

enum class Architecture { vgg16, resnet18, resnet34, reduced_test_net };

Architecture parse_architecture(const std::string& name);
std::string to_string(Architecture arch);

struct ModelSpec {
    Architecture name = Architecture::vgg16;
    int n_classes = 17;
    int input_size = 224;
    /// Scales every channel and hidden width; 1 reproduces the published networks.
    double width_multiplier = 1.0;

    void validate() const;
    bool operator==(const ModelSpec&) const = default;
};

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

/// Residual blocks per stage: (2,2,2,2) for ResNet-18, (3,4,6,3) for
/// ResNet-34, (1,1,1,1) for the reduced network. Empty for VGG-16.
std::vector<int> stage_blocks(Architecture arch);

/// Width after applying the multiplier (at least 1).
int scaled_width(int base, double multiplier);

template <typename T>
struct Model {
    ModelSpec spec;
    std::uint64_t seed = 0;
    nn::Network<T> net;
};

/// Builds the network and initializes it deterministically from `seed`.
/// The final linear layer emits spec.n_classes logits.
template <typename T = float>
Model<T> build(const ModelSpec& spec, std::uint64_t seed);

/// Row-wise numerically stable softmax over (n, classes, 1, 1) logits.
template <typename T>
nn::Tensor<T> softmax(const nn::Tensor<T>& logits);

/// Class probabilities for a batch (n, 3, S, S), evaluated in inference mode.
template <typename T>
nn::Tensor<T> forward(Model<T>& model, const nn::Tensor<T>& batch);

/// Index of the largest entry of each row (first one on ties).
template <typename T>
std::vector<int> argmax_rows(const nn::Tensor<T>& rows);

struct CostReport {
    std::int64_t parameter_count = 0;
    std::int64_t flop_count = 0;  // one multiply-accumulate = one FLOP
};

/// Number of trainable scalars (batch-norm running statistics excluded).
template <typename T>
std::int64_t count_parameters(const nn::Network<T>& net) {
    return net.parameter_count();
}

/// Convolution and fully connected multiply-accumulates for one image;
/// activations, pooling and batch norm are not counted.
template <typename T>
std::int64_t count_flops(const nn::Network<T>& net, int input_size) {
    return net.macs(input_size);
}

CostReport cost_report(const ModelSpec& spec);

}  // namespace painpipe::models
