#pragma once

// Single-fold training: weighted cross-entropy, Adam, early stopping on
// validation MAE and restoration of the best epoch.

#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "painpipe/checkpoint.hpp"
#include "painpipe/dataset.hpp"
#include "painpipe/loss.hpp"
#include "painpipe/models.hpp"
#include "painpipe/samples.hpp"

namespace painpipe::training {

enum class Optimizer { adam };
enum class LossWeighting { eq2_weights, uniform };

Optimizer parse_optimizer(const std::string& name);
std::string to_string(Optimizer optimizer);
LossWeighting parse_loss_weighting(const std::string& name);
std::string to_string(LossWeighting weighting);

struct TrainingConfig {
    Optimizer optimizer = Optimizer::adam;
    double learning_rate = 0.001;
    int max_epochs = 100;
    int batch_size = 256;
    int early_stop_patience = 20;
    std::uint64_t seed = 0;
    LossWeighting loss_weighting = LossWeighting::eq2_weights;
    /// Optional rebalancing of the training partition before each run.
    std::optional<dataset::ResampleStrategy> resample;

    /// Throws ValidationError naming the offending field.
    void validate() const;
};

nlohmann::json to_json(const TrainingConfig& config);
TrainingConfig training_config_from_json(const nlohmann::json& j);

/// Adam with bias-corrected moments; betas (0.9, 0.999), eps 1e-8.
template <typename T>
class Adam {
public:
    explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step(const std::vector<nn::Parameter<T>*>& params);
    long steps() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

/// Patience counter on a minimized metric. An epoch improves only when its
/// value is strictly below the best so far; the first epoch always does.
class EarlyStopping {
public:
    explicit EarlyStopping(int patience);

    /// Returns true when `value` is a new best.
    bool observe(int epoch, double value);
    bool should_stop() const { return since_best_ >= patience_; }
    int best_epoch() const { return best_epoch_; }
    double best_value() const { return best_; }

private:
    int patience_;
    int best_epoch_ = 0;
    int since_best_ = 0;
    double best_ = 0.0;
};

struct EpochLoopResult {
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    int stop_epoch = 0;
    bool early_stopped = false;
    bool diverged = false;
};

/// Drives epochs 1..max_epochs through `step`, which trains one epoch and
/// returns its record. `on_best` runs right after an epoch that improved the
/// validation MAE. A non-finite train loss ends the loop with that epoch left
/// out of the history; divergence in the first epoch throws.
EpochLoopResult run_epoch_loop(int max_epochs, int patience, const std::function<EpochRecord(int)>& step,
                               const std::function<void(int)>& on_best = {});

using EpochLogger = std::function<void(int fold_id, const EpochRecord& record)>;

/// One JSON object per epoch: fold, epoch, train_loss, val_mae, val_mse, val_acc.
std::string epoch_log_line(int fold_id, const EpochRecord& record);

struct TrainResult {
    Checkpoint checkpoint;
    models::Model<float> model;  // parameters of the best epoch
};

/// Trains on split.train and early-stops on split.val. Class weights come
/// from the training partition only. Seeds for initialization, shuffling and
/// augmentation derive from config.seed and fold_id.
TrainResult train_fold(const dataset::DatasetIndex& data, const preprocess::SampleBank& samples,
                       const dataset::FoldSplit& split, int fold_id, const models::ModelSpec& spec,
                       const TrainingConfig& config, const EpochLogger& log = {});

/// Inference-mode class predictions for the given record positions.
std::vector<int> predict(nn::Network<float>& net, const preprocess::SampleBank& samples,
                         std::span<const std::size_t> records, int batch_size);

/// NCHW batch of prepared frames, optionally mirrored per frame.
nn::Tensor<float> make_batch(const preprocess::SampleBank& samples, std::span<const std::size_t> records,
                             const std::vector<bool>& flips = {});

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    double analytic_norm = 0.0;  // L2 norm of the full analytic gradient
};

/// Central differences of the weighted cross-entropy against backprop, in
/// training mode. Relative error is |a - n| / max(|a|, |n|, 1e-6). `samples`
/// scalars are drawn across all trainable tensors (0 checks every scalar).
GradientCheckResult gradient_check(nn::Network<double>& net, const nn::Tensor<double>& batch,
                                   std::span<const int> targets, std::span<const double> class_weights,
                                   std::size_t samples = 0, std::uint64_t seed = 0, double h = 1e-5);

}  // namespace painpipe::training
