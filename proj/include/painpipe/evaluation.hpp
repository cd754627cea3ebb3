#pragma once

// Subject-wise k-fold protocol: train per fold, score the best checkpoint on
// the fold's test subjects, and average the per-fold metrics.

#include <cstddef>
#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "painpipe/dataset.hpp"
#include "painpipe/error.hpp"
#include "painpipe/metrics.hpp"
#include "painpipe/training.hpp"

namespace painpipe::evaluation {

struct FoldMetrics {
    int fold_id = 0;
    double mae = 0.0;
    double mse = 0.0;
    double accuracy = 0.0;
    std::size_t n_test_frames = 0;
    std::vector<std::string> test_subjects;
    std::vector<ClassScores> per_class;  // precision / recall / F1, optional

    bool operator==(const FoldMetrics& o) const;
};

struct MetricsReport {
    std::string model_name;
    int n_classes = 0;
    std::vector<FoldMetrics> per_fold;
    Metrics aggregate;  // unweighted mean over folds

    /// Sets `aggregate` to the arithmetic mean of the fold values.
    void recompute_aggregate();
    /// Throws ValidationError when a metric leaves its range or the
    /// aggregate disagrees with the fold values.
    void validate() const;
    bool operator==(const MetricsReport& o) const;
};

inline constexpr const char* kAggregation = "unweighted_mean_over_folds";

nlohmann::json to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);

/// Produces test-set predictions for one fold.
class FoldRunner {
public:
    virtual ~FoldRunner() = default;
    virtual std::string model_name() const = 0;
    /// Predictions aligned with `test_records` (positions in `data`).
    virtual std::vector<int> run(const dataset::DatasetIndex& data, const dataset::FoldSplit& split, int fold_id,
                                 std::span<const std::size_t> test_records) = 0;
};

/// Trains a network per fold and predicts with its best checkpoint.
class TrainingRunner : public FoldRunner {
public:
    TrainingRunner(const preprocess::SampleBank& samples, models::ModelSpec spec, training::TrainingConfig config,
                   training::EpochLogger log = {}, std::filesystem::path checkpoint_dir = {});

    std::string model_name() const override;
    std::vector<int> run(const dataset::DatasetIndex& data, const dataset::FoldSplit& split, int fold_id,
                         std::span<const std::size_t> test_records) override;

    /// Checkpoints of completed folds, in fold order.
    const std::vector<training::Checkpoint>& checkpoints() const { return checkpoints_; }

private:
    const preprocess::SampleBank& samples_;
    models::ModelSpec spec_;
    training::TrainingConfig config_;
    training::EpochLogger log_;
    std::filesystem::path checkpoint_dir_;
    std::vector<training::Checkpoint> checkpoints_;
};

/// Returns the true labels.
class OracleRunner : public FoldRunner {
public:
    std::string model_name() const override { return "oracle"; }
    std::vector<int> run(const dataset::DatasetIndex& data, const dataset::FoldSplit& split, int fold_id,
                         std::span<const std::size_t> test_records) override;
};

/// Predicts the most frequent class of the fold's training partition
/// (lowest index on ties).
class MajorityClassRunner : public FoldRunner {
public:
    std::string model_name() const override { return "majority_class"; }
    std::vector<int> run(const dataset::DatasetIndex& data, const dataset::FoldSplit& split, int fold_id,
                         std::span<const std::size_t> test_records) override;
};

/// Raised when a fold fails; the message is prefixed with the fold id.
class FoldError : public Error {
public:
    FoldError(int fold_id, const std::string& what);
    int fold_id() const { return fold_id_; }

private:
    int fold_id_;
};

/// Runs every fold of `plan` in order. Test frames are exactly the frames of
/// the fold's test subjects; a fold whose test set overlaps its train or
/// validation subjects is rejected before running.
MetricsReport run_cross_validation(const dataset::DatasetIndex& data, const dataset::FoldPlan& plan,
                                   FoldRunner& runner);

/// Convenience overload that trains `spec` with `config` on every fold.
MetricsReport run_cross_validation(const dataset::DatasetIndex& data, const preprocess::SampleBank& samples,
                                   const dataset::FoldPlan& plan, const models::ModelSpec& spec,
                                   const training::TrainingConfig& config, const training::EpochLogger& log = {});

}  // namespace painpipe::evaluation
