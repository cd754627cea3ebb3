#include "painpipe/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "painpipe/error.hpp"

namespace painpipe::training {

template <typename T>
LossResult<T> weighted_cross_entropy(const nn::Tensor<T>& logits, std::span<const int> targets,
                                     std::span<const double> class_weights) {
    const int n = logits.shape.n;
    const auto classes = static_cast<int>(logits.shape.per_sample());
    if (static_cast<std::size_t>(n) != targets.size()) {
        throw ValidationError("loss: " + std::to_string(targets.size()) + " targets for " + std::to_string(n) +
                              " logit rows");
    }
    if (class_weights.size() < static_cast<std::size_t>(classes)) {
        throw ValidationError("loss: weight table covers " + std::to_string(class_weights.size()) + " of " +
                              std::to_string(classes) + " classes");
    }
    for (T v : logits.data) {
        if (!std::isfinite(static_cast<double>(v))) throw ValidationError("loss: non-finite logit");
    }

    LossResult<T> out;
    out.grad = nn::Tensor<T>(logits.shape);
    std::vector<double> p(static_cast<std::size_t>(classes));
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const int y = targets[static_cast<std::size_t>(i)];
        if (y < 0 || y >= classes) throw ValidationError("loss: target " + std::to_string(y) + " outside [0, C)");
        out.weight_sum += class_weights[static_cast<std::size_t>(y)];
    }
    if (!(out.weight_sum > 0.0)) throw ValidationError("loss: applied class weights sum to zero");

    for (int i = 0; i < n; ++i) {
        const T* z = logits.sample(i);
        const int y = targets[static_cast<std::size_t>(i)];
        const double w = class_weights[static_cast<std::size_t>(y)];
        const double peak = static_cast<double>(*std::max_element(z, z + classes));
        double sum = 0.0;
        for (int c = 0; c < classes; ++c) {
            p[static_cast<std::size_t>(c)] = std::exp(static_cast<double>(z[c]) - peak);
            sum += p[static_cast<std::size_t>(c)];
        }
        const double log_sum = std::log(sum) + peak;
        total += w * (log_sum - static_cast<double>(z[y]));
        T* g = out.grad.sample(i);
        const double scale = w / out.weight_sum;
        for (int c = 0; c < classes; ++c) {
            const double prob = p[static_cast<std::size_t>(c)] / sum;
            g[c] = static_cast<T>(scale * (prob - (c == y ? 1.0 : 0.0)));
        }
    }
    out.loss = total / out.weight_sum;
    return out;
}

template LossResult<float> weighted_cross_entropy<float>(const nn::Tensor<float>&, std::span<const int>,
                                                         std::span<const double>);
template LossResult<double> weighted_cross_entropy<double>(const nn::Tensor<double>&, std::span<const int>,
                                                           std::span<const double>);

}  // namespace painpipe::training
