#include "painpipe/metrics.hpp"

#include <cstdlib>
#include <string>

#include "painpipe/error.hpp"

namespace painpipe::evaluation {

Metrics compute_metrics(std::span<const int> predictions, std::span<const int> targets,
                        const dataset::ClassWeightTable* class_weights) {
    if (predictions.size() != targets.size()) {
        throw ValidationError("prediction/target length mismatch: " + std::to_string(predictions.size()) + " vs " +
                              std::to_string(targets.size()));
    }
    if (targets.empty()) throw ValidationError("cannot compute metrics over zero samples");
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    double hits = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double w = class_weights ? class_weights->weight(targets[i]) : 1.0;
        const double d = static_cast<double>(predictions[i]) - targets[i];
        abs_sum += w * std::abs(d);
        sq_sum += w * d * d;
        hits += predictions[i] == targets[i] ? w : 0.0;
        total += w;
    }
    if (!(total > 0.0)) throw ValidationError("class weights of the evaluated targets sum to zero");
    return Metrics{abs_sum / total, sq_sum / total, 100.0 * hits / total};
}

std::vector<ClassScores> per_class_scores(std::span<const int> predictions, std::span<const int> targets,
                                          int n_classes) {
    if (predictions.size() != targets.size()) throw ValidationError("prediction/target length mismatch");
    std::vector<std::size_t> tp(static_cast<std::size_t>(n_classes), 0);
    std::vector<std::size_t> predicted(tp.size(), 0);
    std::vector<std::size_t> actual(tp.size(), 0);
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const auto p = static_cast<std::size_t>(predictions[i]);
        const auto t = static_cast<std::size_t>(targets[i]);
        if (p >= tp.size() || t >= tp.size()) throw ValidationError("class index outside [0, n_classes)");
        ++predicted[p];
        ++actual[t];
        if (p == t) ++tp[t];
    }
    std::vector<ClassScores> out;
    for (std::size_t c = 0; c < tp.size(); ++c) {
        ClassScores s;
        s.class_index = static_cast<int>(c);
        s.support = actual[c];
        s.precision = predicted[c] ? static_cast<double>(tp[c]) / predicted[c] : 0.0;
        s.recall = actual[c] ? static_cast<double>(tp[c]) / actual[c] : 0.0;
        s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
        out.push_back(s);
    }
    return out;
}

}  // namespace painpipe::evaluation
