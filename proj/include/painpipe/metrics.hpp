#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "painpipe/dataset.hpp"

namespace painpipe::evaluation {

struct Metrics {
    double mae = 0.0;       // PSPI class units
    double mse = 0.0;       // squared class units
    double accuracy = 0.0;  // percent
};

/// MAE, MSE and accuracy over class indices. With `class_weights`, every
/// sample counts with the weight of its true class and the sums are divided
/// by the total applied weight. Throws ValidationError on empty or unequal inputs.
Metrics compute_metrics(std::span<const int> predictions, std::span<const int> targets,
                        const dataset::ClassWeightTable* class_weights = nullptr);

struct ClassScores {
    int class_index = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;  // true frames of the class
};

/// One entry per class in [0, n_classes); undefined ratios are reported as 0.
std::vector<ClassScores> per_class_scores(std::span<const int> predictions, std::span<const int> targets,
                                          int n_classes);

}  // namespace painpipe::evaluation
