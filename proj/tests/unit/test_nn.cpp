#include <doctest.h>

#include <random>

#include "painpipe/nn/network.hpp"
#include "painpipe/training.hpp"

using namespace painpipe;
using namespace painpipe::nn;

namespace {

using Layers = std::vector<std::unique_ptr<Layer<double>>>;

Tensor<double> random_input(Shape s, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Tensor<double> t(s);
    for (auto& v : t.data) v = g(rng);
    return t;
}

double check(Layers layers, Shape in, int classes, std::uint64_t seed) {
    Network<double> net(Shape{1, in.c, in.h, in.w}, std::move(layers));
    net.init(seed);
    const auto x = random_input(in, seed + 1);
    std::vector<int> targets;
    for (int i = 0; i < in.n; ++i) targets.push_back(i % classes);
    const std::vector<double> weights(static_cast<std::size_t>(classes), 1.0);
    return training::gradient_check(net, x, targets, weights).max_relative_error;
}

}  // namespace

TEST_CASE("convolution gradients") {
    Layers l;
    l.push_back(std::make_unique<Conv2d<double>>("c", 2, 3, 3, 2, 1, true));
    l.push_back(std::make_unique<Flatten<double>>());
    l.push_back(std::make_unique<Linear<double>>("fc", 3 * 3 * 3, 4));
    CHECK(check(std::move(l), Shape{2, 2, 5, 5}, 4, 1) < 1e-6);
}

TEST_CASE("pointwise convolution gradients") {
    Layers l;
    l.push_back(std::make_unique<Conv2d<double>>("c", 3, 2, 1, 1, 0, false));
    l.push_back(std::make_unique<GlobalAvgPool<double>>());
    l.push_back(std::make_unique<Linear<double>>("fc", 2, 3));
    CHECK(check(std::move(l), Shape{3, 3, 4, 4}, 3, 2) < 1e-6);
}

TEST_CASE("batch norm gradients in training mode") {
    Layers l;
    l.push_back(std::make_unique<Conv2d<double>>("c", 2, 3, 3, 1, 1, false));
    l.push_back(std::make_unique<BatchNorm2d<double>>("bn", 3));
    l.push_back(std::make_unique<ReLU<double>>());
    l.push_back(std::make_unique<GlobalAvgPool<double>>());
    l.push_back(std::make_unique<Linear<double>>("fc", 3, 3));
    CHECK(check(std::move(l), Shape{4, 2, 4, 4}, 3, 3) < 1e-5);
}

TEST_CASE("max pooling gradients") {
    Layers l;
    l.push_back(std::make_unique<MaxPool2d<double>>(3, 2, 1));
    l.push_back(std::make_unique<Flatten<double>>());
    l.push_back(std::make_unique<Linear<double>>("fc", 2 * 3 * 3, 3));
    CHECK(check(std::move(l), Shape{2, 2, 6, 6}, 3, 4) < 1e-6);
}

TEST_CASE("residual block gradients, identity and projection") {
    Layers l;
    l.push_back(std::make_unique<BasicBlock<double>>("b1", 2, 2, 1));
    l.push_back(std::make_unique<BasicBlock<double>>("b2", 2, 4, 2));
    l.push_back(std::make_unique<GlobalAvgPool<double>>());
    l.push_back(std::make_unique<Linear<double>>("fc", 4, 3));
    CHECK(check(std::move(l), Shape{3, 2, 6, 6}, 3, 5) < 1e-5);
}

TEST_CASE("batch norm running statistics drive evaluation mode") {
    BatchNorm2d<double> bn("bn", 1);
    std::mt19937_64 rng(0);
    bn.init(rng);
    Tensor<double> x(Shape{2, 1, 1, 2});
    x.data = {1, 2, 3, 4};  // mean 2.5, biased var 1.25, unbiased 5/3
    bn.forward(x, Mode::train);
    std::vector<Parameter<double>*> ps;
    bn.collect(ps);
    REQUIRE(ps.size() == 4);
    CHECK(ps[2]->value[0] == doctest::Approx(0.25));
    CHECK(ps[3]->value[0] == doctest::Approx(0.9 + 0.1 * 5.0 / 3.0));
    CHECK_FALSE(ps[2]->trainable);
    const auto y = bn.forward(x, Mode::eval);
    CHECK(y.data[0] == doctest::Approx((1 - 0.25) / std::sqrt(0.9 + 0.5 / 3.0 + 1e-5)));
}

TEST_CASE("parameter names are qualified") {
    BasicBlock<float> block("layer2.0", 4, 8, 2);
    std::vector<Parameter<float>*> ps;
    block.collect(ps);
    std::vector<std::string> names;
    for (auto* p : ps) names.push_back(p->name);
    CHECK(names.front() == "layer2.0.conv1.weight");
    CHECK(std::find(names.begin(), names.end(), "layer2.0.downsample.0.weight") != names.end());
    CHECK(std::find(names.begin(), names.end(), "layer2.0.bn2.running_var") != names.end());
}
