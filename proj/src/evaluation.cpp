#include "painpipe/evaluation.hpp"

#include <cmath>
#include <map>

#include "painpipe/error.hpp"

namespace painpipe::evaluation {

bool FoldMetrics::operator==(const FoldMetrics& o) const {
    if (per_class.size() != o.per_class.size()) return false;
    for (std::size_t i = 0; i < per_class.size(); ++i) {
        const auto& a = per_class[i];
        const auto& b = o.per_class[i];
        if (a.class_index != b.class_index || a.precision != b.precision || a.recall != b.recall || a.f1 != b.f1 ||
            a.support != b.support) {
            return false;
        }
    }
    return fold_id == o.fold_id && mae == o.mae && mse == o.mse && accuracy == o.accuracy &&
           n_test_frames == o.n_test_frames && test_subjects == o.test_subjects;
}

bool MetricsReport::operator==(const MetricsReport& o) const {
    return model_name == o.model_name && n_classes == o.n_classes && per_fold == o.per_fold &&
           aggregate.mae == o.aggregate.mae && aggregate.mse == o.aggregate.mse &&
           aggregate.accuracy == o.aggregate.accuracy;
}

void MetricsReport::recompute_aggregate() {
    if (per_fold.empty()) return;
    Metrics sum;
    for (const auto& f : per_fold) {
        sum.mae += f.mae;
        sum.mse += f.mse;
        sum.accuracy += f.accuracy;
    }
    const auto n = static_cast<double>(per_fold.size());
    aggregate = Metrics{sum.mae / n, sum.mse / n, sum.accuracy / n};
}

void MetricsReport::validate() const {
    auto check = [&](const std::string& where, double mae, double mse, double acc) {
        if (!(mae >= 0.0) || !(mse >= 0.0)) throw ValidationError(where + ": negative or non-finite error metric");
        if (!(acc >= 0.0 && acc <= 100.0)) throw ValidationError(where + ": accuracy outside [0, 100]");
        if (n_classes > 0 && mae > n_classes - 1) throw ValidationError(where + ": mae exceeds the largest class distance");
    };
    check("aggregate", aggregate.mae, aggregate.mse, aggregate.accuracy);
    for (const auto& f : per_fold) check("fold " + std::to_string(f.fold_id), f.mae, f.mse, f.accuracy);
    if (!per_fold.empty()) {
        MetricsReport copy = *this;
        copy.recompute_aggregate();
        const double tol = 1e-9;
        if (std::abs(copy.aggregate.mae - aggregate.mae) > tol || std::abs(copy.aggregate.mse - aggregate.mse) > tol ||
            std::abs(copy.aggregate.accuracy - aggregate.accuracy) > tol) {
            throw ValidationError("aggregate is not the mean of the per-fold metrics");
        }
    }
}

nlohmann::json to_json(const MetricsReport& r) {
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : r.per_fold) {
        nlohmann::json per_class = nlohmann::json::array();
        for (const auto& c : f.per_class) {
            per_class.push_back({{"class", c.class_index},
                                 {"precision", c.precision},
                                 {"recall", c.recall},
                                 {"f1", c.f1},
                                 {"support", c.support}});
        }
        folds.push_back({{"fold_id", f.fold_id},
                         {"mae", f.mae},
                         {"mse", f.mse},
                         {"accuracy", f.accuracy},
                         {"n_test_frames", f.n_test_frames},
                         {"test_subjects", f.test_subjects},
                         {"per_class", per_class}});
    }
    return {{"model_name", r.model_name},
            {"n_classes", r.n_classes},
            {"aggregation", kAggregation},
            {"per_fold", folds},
            {"aggregate", {{"mae", r.aggregate.mae}, {"mse", r.aggregate.mse}, {"accuracy", r.aggregate.accuracy}}}};
}

MetricsReport report_from_json(const nlohmann::json& j) {
    MetricsReport r;
    try {
        r.model_name = j.at("model_name").get<std::string>();
        r.n_classes = j.value("n_classes", 0);
        for (const auto& f : j.at("per_fold")) {
            FoldMetrics m;
            m.fold_id = f.at("fold_id").get<int>();
            m.mae = f.at("mae").get<double>();
            m.mse = f.at("mse").get<double>();
            m.accuracy = f.at("accuracy").get<double>();
            m.n_test_frames = f.value("n_test_frames", std::size_t{0});
            m.test_subjects = f.value("test_subjects", std::vector<std::string>{});
            for (const auto& c : f.value("per_class", nlohmann::json::array())) {
                m.per_class.push_back(ClassScores{c.at("class").get<int>(), c.at("precision").get<double>(),
                                                  c.at("recall").get<double>(), c.at("f1").get<double>(),
                                                  c.at("support").get<std::size_t>()});
            }
            r.per_fold.push_back(std::move(m));
        }
        const auto& a = j.at("aggregate");
        r.aggregate = Metrics{a.at("mae").get<double>(), a.at("mse").get<double>(), a.at("accuracy").get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed metrics report: ") + e.what());
    }
    r.validate();
    return r;
}

TrainingRunner::TrainingRunner(const preprocess::SampleBank& samples, models::ModelSpec spec,
                               training::TrainingConfig config, training::EpochLogger log,
                               std::filesystem::path checkpoint_dir)
    : samples_(samples), spec_(spec), config_(config), log_(std::move(log)), checkpoint_dir_(std::move(checkpoint_dir)) {}

std::string TrainingRunner::model_name() const { return models::to_string(spec_.name); }

std::vector<int> TrainingRunner::run(const dataset::DatasetIndex& data, const dataset::FoldSplit& split, int fold_id,
                                     std::span<const std::size_t> test_records) {
    auto result = training::train_fold(data, samples_, split, fold_id, spec_, config_, log_);
    auto preds = training::predict(result.model.net, samples_, test_records, config_.batch_size);
    if (!checkpoint_dir_.empty()) {
        std::filesystem::create_directories(checkpoint_dir_);
        training::save_checkpoint(result.checkpoint,
                                  checkpoint_dir_ / ("fold" + std::to_string(fold_id) + ".ckpt"));
    }
    checkpoints_.push_back(std::move(result.checkpoint));
    return preds;
}

std::vector<int> OracleRunner::run(const dataset::DatasetIndex& data, const dataset::FoldSplit&, int,
                                   std::span<const std::size_t> test_records) {
    std::vector<int> out;
    for (auto r : test_records) out.push_back(data[r].pain_class.index);
    return out;
}

std::vector<int> MajorityClassRunner::run(const dataset::DatasetIndex& data, const dataset::FoldSplit& split, int,
                                          std::span<const std::size_t> test_records) {
    std::map<int, std::size_t> counts;
    for (auto r : data.indices_for(split.train)) ++counts[data[r].pain_class.index];
    if (counts.empty()) throw ValidationError("empty training partition");
    int best = counts.begin()->first;
    for (const auto& [c, n] : counts) {
        if (n > counts[best]) best = c;
    }
    return std::vector<int>(test_records.size(), best);
}

FoldError::FoldError(int fold_id, const std::string& what)
    : Error("fold " + std::to_string(fold_id) + ": " + what), fold_id_(fold_id) {}

MetricsReport run_cross_validation(const dataset::DatasetIndex& data, const dataset::FoldPlan& plan,
                                   FoldRunner& runner) {
    dataset::check_fold_plan(plan, data.subjects());
    MetricsReport report;
    report.model_name = runner.model_name();
    report.n_classes = data.n_classes();
    for (std::size_t i = 0; i < plan.folds.size(); ++i) {
        const int fold_id = static_cast<int>(i);
        const auto& split = plan.folds[i];
        for (const auto& s : split.test) {
            if (split.train.count(s) || split.val.count(s)) {
                throw FoldError(fold_id, "test subject '" + s + "' also appears in train or validation");
            }
        }
        const auto test = data.indices_for(split.test);
        for (auto r : test) {
            if (!split.test.count(data[r].subject_id)) throw FoldError(fold_id, "test frame from a non-test subject");
        }
        if (test.empty()) throw FoldError(fold_id, "no test frames");
        std::vector<int> preds;
        try {
            preds = runner.run(data, split, fold_id, test);
        } catch (const FoldError&) {
            throw;
        } catch (const std::exception& e) {
            throw FoldError(fold_id, e.what());
        }
        if (preds.size() != test.size()) throw FoldError(fold_id, "runner returned a wrong number of predictions");
        std::vector<int> targets;
        for (auto r : test) targets.push_back(data[r].pain_class.index);
        const auto m = compute_metrics(preds, targets);
        FoldMetrics f;
        f.fold_id = fold_id;
        f.mae = m.mae;
        f.mse = m.mse;
        f.accuracy = m.accuracy;
        f.n_test_frames = test.size();
        f.test_subjects.assign(split.test.begin(), split.test.end());
        f.per_class = per_class_scores(preds, targets, data.n_classes());
        report.per_fold.push_back(std::move(f));
    }
    report.recompute_aggregate();
    report.validate();
    return report;
}

MetricsReport run_cross_validation(const dataset::DatasetIndex& data, const preprocess::SampleBank& samples,
                                   const dataset::FoldPlan& plan, const models::ModelSpec& spec,
                                   const training::TrainingConfig& config, const training::EpochLogger& log) {
    TrainingRunner runner(samples, spec, config, log);
    return run_cross_validation(data, plan, runner);
}

}  // namespace painpipe::evaluation
