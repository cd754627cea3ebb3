#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "painpipe/nn/layers.hpp"
#include "painpipe/nn/tensor.hpp"

namespace painpipe::nn {

/// Ordered stack of layers ending in a logits-producing layer, plus the
/// parameter store those layers own.
template <typename T>
class Network {
public:
    /// `input` is the per-sample (c, h, w) geometry; its n is ignored.
    Network(Shape input, std::vector<std::unique_ptr<Layer<T>>> layers);

    Network(Network&&) noexcept = default;
    Network& operator=(Network&&) noexcept = default;

    /// Logits of shape (n, classes, 1, 1). Throws ShapeError when the batch
    /// geometry differs from the network input.
    Tensor<T> forward(const Tensor<T>& batch, Mode mode);
    Tensor<T> backward(const Tensor<T>& grad_logits);

    void init(std::uint64_t seed);
    void zero_grad();

    /// Learnable tensors followed by buffers, in layer order.
    std::vector<Parameter<T>*> state();
    std::vector<Parameter<T>*> trainable();

    std::int64_t parameter_count() const;
    std::int64_t macs(int input_size) const;

    Shape input_shape() const { return input_; }
    int output_size() const;
    std::size_t layer_count() const { return layers_.size(); }
    Layer<T>& layer(std::size_t i) { return *layers_[i]; }
    const Layer<T>& layer(std::size_t i) const { return *layers_[i]; }

    /// Copies of every state tensor, used to restore the best epoch.
    std::vector<std::vector<T>> snapshot();
    void restore(const std::vector<std::vector<T>>& snapshot);

private:
    Shape input_;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
};

}  // namespace painpipe::nn
