#include "painpipe/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "painpipe/error.hpp"
#include "painpipe/metrics.hpp"
#include "painpipe/seed.hpp"

namespace painpipe::training {

Optimizer parse_optimizer(const std::string& name) {
    if (name == "adam") return Optimizer::adam;
    throw ValidationError("training.optimizer: unknown optimizer '" + name + "' (expected adam)");
}

std::string to_string(Optimizer) { return "adam"; }

LossWeighting parse_loss_weighting(const std::string& name) {
    if (name == "eq2_weights") return LossWeighting::eq2_weights;
    if (name == "uniform") return LossWeighting::uniform;
    throw ValidationError("training.loss_weighting: unknown value '" + name + "' (expected eq2_weights or uniform)");
}

std::string to_string(LossWeighting weighting) {
    return weighting == LossWeighting::uniform ? "uniform" : "eq2_weights";
}

void TrainingConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ValidationError("training.learning_rate must be > 0");
    }
    if (max_epochs < 1) throw ValidationError("training.max_epochs must be >= 1");
    if (batch_size < 1) throw ValidationError("training.batch_size must be >= 1");
    if (early_stop_patience < 1) throw ValidationError("training.early_stop_patience must be >= 1");
    if (early_stop_patience > max_epochs) {
        throw ValidationError("training.early_stop_patience must not exceed training.max_epochs");
    }
}

nlohmann::json to_json(const TrainingConfig& c) {
    return {{"optimizer", to_string(c.optimizer)},
            {"learning_rate", c.learning_rate},
            {"max_epochs", c.max_epochs},
            {"batch_size", c.batch_size},
            {"early_stop_patience", c.early_stop_patience},
            {"seed", c.seed},
            {"loss_weighting", to_string(c.loss_weighting)},
            {"resample", c.resample ? dataset::to_string(*c.resample) : "none"}};
}

TrainingConfig training_config_from_json(const nlohmann::json& j) {
    TrainingConfig c;
    c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    c.learning_rate = j.at("learning_rate").get<double>();
    c.max_epochs = j.at("max_epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.early_stop_patience = j.at("early_stop_patience").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.loss_weighting = parse_loss_weighting(j.at("loss_weighting").get<std::string>());
    const auto resample = j.value("resample", std::string("none"));
    if (resample != "none") c.resample = dataset::parse_resample_strategy(resample);
    c.validate();
    return c;
}

template <typename T>
Adam<T>::Adam(double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {}

template <typename T>
void Adam<T>::step(const std::vector<nn::Parameter<T>*>& params) {
    if (m_.empty()) {
        for (const auto* p : params) {
            m_.emplace_back(p->size(), 0.0);
            v_.emplace_back(p->size(), 0.0);
        }
    }
    if (m_.size() != params.size()) throw ValidationError("optimizer bound to a different parameter set");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = std::sqrt(1.0 - std::pow(beta2_, static_cast<double>(t_)));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto* p = params[k];
        if (p->grad.empty()) continue;
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < p->size(); ++i) {
            const double g = static_cast<double>(p->grad[i]);
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
            p->value[i] -= static_cast<T>(lr_ / c1 * m[i] / (std::sqrt(v[i]) / c2 + eps_));
        }
    }
}

template class Adam<float>;
template class Adam<double>;

EarlyStopping::EarlyStopping(int patience) : patience_(patience) {
    if (patience < 1) throw ValidationError("early stopping patience must be >= 1");
}

bool EarlyStopping::observe(int epoch, double value) {
    if (best_epoch_ == 0 || value < best_) {
        best_ = value;
        best_epoch_ = epoch;
        since_best_ = 0;
        return true;
    }
    ++since_best_;
    return false;
}

EpochLoopResult run_epoch_loop(int max_epochs, int patience, const std::function<EpochRecord(int)>& step,
                               const std::function<void(int)>& on_best) {
    EarlyStopping stopper(patience);
    EpochLoopResult result;
    for (int epoch = 1; epoch <= max_epochs; ++epoch) {
        EpochRecord record = step(epoch);
        record.epoch = epoch;
        if (!std::isfinite(record.train_loss)) {
            if (result.history.empty()) throw Error("training diverged in epoch 1 (non-finite loss)");
            result.diverged = true;
            break;
        }
        result.history.push_back(record);
        result.stop_epoch = epoch;
        if (stopper.observe(epoch, record.val_mae) && on_best) on_best(epoch);
        if (stopper.should_stop()) {
            result.early_stopped = epoch < max_epochs;
            break;
        }
    }
    result.best_epoch = stopper.best_epoch();
    return result;
}

std::string epoch_log_line(int fold_id, const EpochRecord& r) {
    nlohmann::json j = {{"fold", fold_id},         {"epoch", r.epoch},       {"train_loss", r.train_loss},
                        {"val_mae", r.val_mae},    {"val_mse", r.val_mse},   {"val_acc", r.val_accuracy}};
    return j.dump();
}

nn::Tensor<float> make_batch(const preprocess::SampleBank& samples, std::span<const std::size_t> records,
                             const std::vector<bool>& flips) {
    const int s = samples.image_size();
    nn::Tensor<float> batch(nn::Shape{static_cast<int>(records.size()), 3, s, s});
    for (std::size_t i = 0; i < records.size(); ++i) {
        float* dst = batch.sample(static_cast<int>(i));
        if (!flips.empty() && flips[i]) {
            ImageTensor img = samples.frame(records[i]);
            preprocess::hflip_in_place(img);
            to_planar(img, dst);
        } else {
            to_planar(samples.frame(records[i]), dst);
        }
    }
    return batch;
}

std::vector<int> predict(nn::Network<float>& net, const preprocess::SampleBank& samples,
                         std::span<const std::size_t> records, int batch_size) {
    std::vector<int> out;
    out.reserve(records.size());
    for (std::size_t start = 0; start < records.size(); start += static_cast<std::size_t>(batch_size)) {
        const auto chunk = records.subspan(start, std::min<std::size_t>(batch_size, records.size() - start));
        const auto logits = net.forward(make_batch(samples, chunk), nn::Mode::eval);
        const auto labels = models::argmax_rows(logits);
        out.insert(out.end(), labels.begin(), labels.end());
    }
    return out;
}

namespace {

std::vector<int> labels_of(const dataset::DatasetIndex& data, std::span<const std::size_t> records) {
    std::vector<int> out;
    out.reserve(records.size());
    for (auto r : records) out.push_back(data[r].pain_class.index);
    return out;
}

bool all_finite(const std::vector<float>& values) {
    return std::all_of(values.begin(), values.end(), [](float v) { return std::isfinite(v); });
}

}  // namespace

TrainResult train_fold(const dataset::DatasetIndex& data, const preprocess::SampleBank& samples,
                       const dataset::FoldSplit& split, int fold_id, const models::ModelSpec& spec,
                       const TrainingConfig& config, const EpochLogger& log) {
    config.validate();
    spec.validate();
    if (samples.size() != data.size()) throw ValidationError("sample bank does not match the dataset index");
    if (spec.input_size != samples.image_size()) {
        throw ConfigError("model.input_size " + std::to_string(spec.input_size) +
                          " differs from preprocess.target_size " + std::to_string(samples.image_size()));
    }
    if (spec.n_classes != data.n_classes()) {
        throw ConfigError("model.n_classes " + std::to_string(spec.n_classes) + " differs from dataset.n_classes " +
                          std::to_string(data.n_classes()));
    }
    for (const auto* part : {&split.train, &split.val}) {
        for (const auto& s : *part) {
            if (!data.subjects().count(s)) throw ValidationError("fold subject '" + s + "' is not in the dataset");
        }
    }
    std::vector<std::size_t> train = data.indices_for(split.train);
    const std::vector<std::size_t> val = data.indices_for(split.val);
    if (train.empty()) throw ValidationError("fold " + std::to_string(fold_id) + ": empty training partition");
    if (val.empty()) throw ValidationError("fold " + std::to_string(fold_id) + ": empty validation partition");
    if (config.resample) {
        train = dataset::resample_indices(data, train, *config.resample, derive_seed(config.seed, {7, static_cast<std::uint64_t>(fold_id)}));
    }

    const auto weights = config.loss_weighting == LossWeighting::uniform
                             ? dataset::ClassWeightTable::uniform(data.n_classes())
                             : dataset::compute_class_weights(data, train);
    const auto val_labels = labels_of(data, val);

    const std::uint64_t model_seed = derive_seed(config.seed, {1, static_cast<std::uint64_t>(fold_id)});
    const std::uint64_t augment_seed = derive_seed(config.seed, {2, static_cast<std::uint64_t>(fold_id)});
    auto model = models::build<float>(spec, model_seed);
    auto params = model.net.trainable();
    Adam<float> adam(config.learning_rate);
    const double flip_p = samples.config().hflip_probability;

    std::vector<std::vector<float>> best_state;
    std::vector<std::size_t> order = train;
    auto step = [&](int epoch) {
        std::mt19937_64 shuffle_rng(derive_seed(config.seed, {3, static_cast<std::uint64_t>(fold_id),
                                                              static_cast<std::uint64_t>(epoch)}));
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        double weight_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const std::span<const std::size_t> chunk(order.data() + start,
                                                     std::min<std::size_t>(config.batch_size, order.size() - start));
            std::vector<bool> flips(chunk.size(), false);
            for (std::size_t i = 0; i < chunk.size(); ++i) {
                const auto& r = data[chunk[i]];
                std::mt19937_64 rng(frame_seed(augment_seed, r.subject_id, r.sequence_id, r.frame_index, epoch));
                flips[i] = std::bernoulli_distribution(flip_p)(rng);
            }
            const auto targets = labels_of(data, chunk);
            const auto logits = model.net.forward(make_batch(samples, chunk, flips), nn::Mode::train);
            if (!all_finite(logits.data)) return EpochRecord{epoch, std::nan(""), 0.0, 0.0, 0.0};
            const auto loss = weighted_cross_entropy<float>(logits, targets, weights);
            model.net.zero_grad();
            model.net.backward(loss.grad);
            adam.step(params);
            loss_sum += loss.loss * loss.weight_sum;
            weight_sum += loss.weight_sum;
        }
        const auto preds = predict(model.net, samples, val, config.batch_size);
        const auto m = evaluation::compute_metrics(preds, val_labels);
        EpochRecord record{epoch, loss_sum / weight_sum, m.mae, m.mse, m.accuracy};
        if (log) log(fold_id, record);
        return record;
    };
    auto loop = run_epoch_loop(config.max_epochs, config.early_stop_patience, step,
                               [&](int) { best_state = model.net.snapshot(); });
    model.net.restore(best_state);

    Checkpoint ckpt;
    ckpt.spec = spec;
    ckpt.model_seed = model_seed;
    ckpt.fold_id = fold_id;
    ckpt.best_epoch = loop.best_epoch;
    ckpt.stop_epoch = loop.stop_epoch;
    ckpt.early_stopped = loop.early_stopped;
    ckpt.diverged = loop.diverged;
    ckpt.history = std::move(loop.history);
    ckpt.training_config = to_json(config);
    ckpt.tensors = capture_state(model.net);
    return TrainResult{std::move(ckpt), std::move(model)};
}

GradientCheckResult gradient_check(nn::Network<double>& net, const nn::Tensor<double>& batch,
                                   std::span<const int> targets, std::span<const double> class_weights,
                                   std::size_t samples, std::uint64_t seed, double h) {
    auto loss_at = [&] {
        return weighted_cross_entropy<double>(net.forward(batch, nn::Mode::train), targets, class_weights).loss;
    };
    net.zero_grad();
    const auto base = weighted_cross_entropy<double>(net.forward(batch, nn::Mode::train), targets, class_weights);
    net.backward(base.grad);

    auto params = net.trainable();
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    GradientCheckResult result;
    double norm = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        for (std::size_t i = 0; i < params[k]->size(); ++i) {
            slots.emplace_back(k, i);
            const double g = params[k]->grad.empty() ? 0.0 : params[k]->grad[i];
            norm += g * g;
        }
    }
    result.analytic_norm = std::sqrt(norm);
    if (samples > 0 && samples < slots.size()) {
        std::mt19937_64 rng(seed);
        std::shuffle(slots.begin(), slots.end(), rng);
        slots.resize(samples);
    }
    for (auto [k, i] : slots) {
        auto* p = params[k];
        const double analytic = p->grad.empty() ? 0.0 : p->grad[i];
        const double saved = p->value[i];
        p->value[i] = saved + h;
        const double up = loss_at();
        p->value[i] = saved - h;
        const double down = loss_at();
        p->value[i] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        result.max_relative_error = std::max(result.max_relative_error, std::abs(analytic - numeric) / denom);
        ++result.checked;
    }
    return result;
}

}  // namespace painpipe::training
