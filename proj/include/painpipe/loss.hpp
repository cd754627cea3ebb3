#pragma once

#include <span>

#include "painpipe/dataset.hpp"
#include "painpipe/nn/tensor.hpp"

namespace painpipe::training {

template <typename T>
struct LossResult {
    double loss = 0.0;
    double weight_sum = 0.0;  // sum of applied class weights
    nn::Tensor<T> grad;       // d loss / d logits
};

/// Weighted mean cross-entropy over (n, C, 1, 1) logits:
///   sum_i w[y_i] * -log softmax(z_i)[y_i] / sum_i w[y_i]
/// Throws ValidationError on non-finite logits, targets outside [0, C), a
/// weight table narrower than C, or a zero total weight.
template <typename T>
LossResult<T> weighted_cross_entropy(const nn::Tensor<T>& logits, std::span<const int> targets,
                                     std::span<const double> class_weights);

template <typename T>
LossResult<T> weighted_cross_entropy(const nn::Tensor<T>& logits, std::span<const int> targets,
                                     const dataset::ClassWeightTable& weights) {
    return weighted_cross_entropy<T>(logits, targets, std::span<const double>(weights.weights));
}

}  // namespace painpipe::training
