#pragma once

// Layers with explicit forward/backward passes. Each layer caches what its
// backward pass needs during a forward call; backward accumulates parameter
// gradients and returns the gradient with respect to the layer input.

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "painpipe/nn/tensor.hpp"

namespace painpipe::nn {

template <typename T>
class Layer {
public:
    virtual ~Layer() = default;

    virtual std::string kind() const = 0;
    virtual Shape output_shape(const Shape& in) const = 0;
    virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
    virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;

    /// Appends owned parameters and buffers. Names are fully qualified at
    /// construction ("layer1.0.conv1.weight").
    virtual void collect(std::vector<Parameter<T>*>& out) { (void)out; }
    /// Multiply-accumulate count for one sample of shape `in`.
    virtual std::int64_t macs(const Shape& in) const {
        (void)in;
        return 0;
    }
    virtual void init(std::mt19937_64& rng) { (void)rng; }
};

template <typename T>
class Conv2d final : public Layer<T> {
public:
    Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int padding, bool bias);

    std::string kind() const override { return "conv2d"; }
    Shape output_shape(const Shape& in) const override;
    Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;
    void collect(std::vector<Parameter<T>*>& out) override;
    std::int64_t macs(const Shape& in) const override;
    /// He-normal weights with fan-in scaling, zero bias.
    void init(std::mt19937_64& rng) override;

    int in_channels() const { return in_; }
    int out_channels() const { return out_; }
    int kernel() const { return k_; }
    int stride() const { return stride_; }
    Parameter<T>& weight() { return weight_; }
    Parameter<T>* bias() { return bias_ ? &*bias_ : nullptr; }

private:
    bool pointwise() const { return k_ == 1 && stride_ == 1 && pad_ == 0; }
    void im2col(const T* x, const Shape& in, T* col) const;
    void col2im(const T* col, const Shape& in, T* dx) const;

    std::string name_;
    int in_, out_, k_, stride_, pad_;
    Parameter<T> weight_;  // out x in x k x k
    std::optional<Parameter<T>> bias_;
    Tensor<T> input_;
    std::vector<T> col_;
};

template <typename T>
class BatchNorm2d final : public Layer<T> {
public:
    BatchNorm2d(std::string name, int channels, double momentum = 0.1, double eps = 1e-5);

    std::string kind() const override { return "batchnorm2d"; }
    Shape output_shape(const Shape& in) const override { return in; }
    Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;
    void collect(std::vector<Parameter<T>*>& out) override;
    void init(std::mt19937_64& rng) override;

    Parameter<T>& gamma() { return gamma_; }
    Parameter<T>& beta() { return beta_; }

private:
    std::string name_;
    int channels_;
    double momentum_, eps_;
    Parameter<T> gamma_, beta_, running_mean_, running_var_;
    Mode cached_mode_ = Mode::eval;
    Tensor<T> xhat_;
    std::vector<double> inv_std_;
};

template <typename T>
class ReLU final : public Layer<T> {
public:
    std::string kind() const override { return "relu"; }
    Shape output_shape(const Shape& in) const override { return in; }
    Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;

private:
    Tensor<T> output_;
};

template <typename T>
class MaxPool2d final : public Layer<T> {
public:
    MaxPool2d(int kernel, int stride, int padding);

    std::string kind() const override { return "maxpool2d"; }
    Shape output_shape(const Shape& in) const override;
    Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;

private:
    int k_, stride_, pad_;
    Shape in_shape_;
    std::vector<std::size_t> argmax_;
};

/// Mean over H x W, output (n, c, 1, 1).
template <typename T>
class GlobalAvgPool final : public Layer<T> {
public:
    std::string kind() const override { return "global_avg_pool"; }
    Shape output_shape(const Shape& in) const override { return {in.n, in.c, 1, 1}; }
    Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;

private:
    Shape in_shape_;
};

template <typename T>
class Flatten final : public Layer<T> {
public:
    std::string kind() const override { return "flatten"; }
    Shape output_shape(const Shape& in) const override { return {in.n, in.c * in.h * in.w, 1, 1}; }
    Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;

private:
    Shape in_shape_;
};

/// y = x W^T + b with W of shape (out, in).
template <typename T>
class Linear final : public Layer<T> {
public:
    Linear(std::string name, int in_features, int out_features);

    std::string kind() const override { return "linear"; }
    Shape output_shape(const Shape& in) const override { return {in.n, out_, 1, 1}; }
    Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;
    void collect(std::vector<Parameter<T>*>& out) override;
    std::int64_t macs(const Shape& in) const override;
    /// U(-1/sqrt(in), 1/sqrt(in)) for weights and bias.
    void init(std::mt19937_64& rng) override;

    int in_features() const { return in_; }
    int out_features() const { return out_; }
    Parameter<T>& weight() { return weight_; }
    Parameter<T>& bias() { return bias_; }

private:
    std::string name_;
    int in_, out_;
    Parameter<T> weight_, bias_;
    Tensor<T> input_;
};

/// Two 3x3 conv + batch-norm stages added to a shortcut, then ReLU. The
/// shortcut is the identity unless the stride or channel count changes, in
/// which case it is a 1x1 strided projection followed by batch norm.
template <typename T>
class BasicBlock final : public Layer<T> {
public:
    BasicBlock(std::string name, int in_channels, int out_channels, int stride);

    std::string kind() const override { return "basic_block"; }
    Shape output_shape(const Shape& in) const override;
    Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;
    void collect(std::vector<Parameter<T>*>& out) override;
    std::int64_t macs(const Shape& in) const override;
    void init(std::mt19937_64& rng) override;

    bool has_projection() const { return down_conv_.has_value(); }
    int out_channels() const { return conv2_.out_channels(); }
    const std::string& name() const { return name_; }
    /// Zeroes every weight on the residual branch so the block reduces to
    /// ReLU(shortcut(x)).
    void zero_residual_branch();

private:
    std::string name_;
    Conv2d<T> conv1_;
    BatchNorm2d<T> bn1_;
    ReLU<T> relu1_;
    Conv2d<T> conv2_;
    BatchNorm2d<T> bn2_;
    std::optional<Conv2d<T>> down_conv_;
    std::optional<BatchNorm2d<T>> down_bn_;
    Tensor<T> output_;
};

}  // namespace painpipe::nn
