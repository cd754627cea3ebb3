#include "painpipe/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <optional>

#include "painpipe/config.hpp"
#include "painpipe/error.hpp"
#include "painpipe/evaluation.hpp"
#include "painpipe/io_util.hpp"
#include "painpipe/report.hpp"
#include "painpipe/samples.hpp"
#include "painpipe/synthetic.hpp"

namespace painpipe::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "run configuration (INI)");
    cmd->add_option("--seed", c.seed, "overrides PAINPIPE_SEED and the config seed");
}

// Loads the config (or defaults), resolves the seed and announces both.
config::RunConfig resolve(const Common& c, std::ostream& err, bool check_paths) {
    config::RunConfig cfg = c.config_path.empty() ? config::RunConfig{} : config::load_run_config(c.config_path);
    const auto seed = config::resolve_seed(c.seed, std::getenv(config::kSeedEnv), cfg.seed);
    config::apply_seed(cfg, seed.seed);
    cfg.validate(check_paths);
    err << "seed=" << seed.seed << " seed_source=" << seed.source << " config_digest=" << config::config_digest(cfg)
        << "\n";
    return cfg;
}

dataset::Layout guess_layout(const fs::path& root) {
    return fs::exists(root / dataset::kFaceBoxSidecar) ? dataset::Layout::synthetic : dataset::Layout::unbc_like;
}

struct DataArgs {
    std::string root;
    std::string layout;
    int n_classes = 0;
};

void add_data_args(CLI::App* cmd, DataArgs& d, bool positional) {
    if (positional) {
        cmd->add_option("root", d.root, "dataset root");
    } else {
        cmd->add_option("--data", d.root, "dataset root");
    }
    cmd->add_option("--layout", d.layout, "unbc_like or synthetic (default: detected)");
    cmd->add_option("--classes", d.n_classes, "number of PSPI classes");
}

dataset::IngestResult load_data(const DataArgs& d, const Common& c, const config::RunConfig& cfg,
                                std::ostream& err) {
    const fs::path root = d.root.empty() ? cfg.dataset.root : fs::path(d.root);
    dataset::Layout layout = c.config_path.empty() ? guess_layout(root) : cfg.dataset.layout;
    if (!d.layout.empty()) layout = dataset::parse_layout(d.layout);
    int n_classes = d.n_classes > 0 ? d.n_classes : cfg.dataset.n_classes;
    // Generated data carries its own band count.
    const fs::path manifest = root / "synthetic_config.json";
    if (d.n_classes == 0 && c.config_path.empty() && layout == dataset::Layout::synthetic && fs::exists(manifest)) {
        n_classes = static_cast<int>(nlohmann::json::parse(read_file(manifest)).at("class_mix").size());
    }
    auto result = dataset::ingest(root, layout, n_classes);
    if (!result.warnings.empty()) err << "ingest warnings: " << dataset::to_json(result.warnings).dump() << "\n";
    return result;
}

// Uses the config class count unless the data was generated with another one.
config::RunConfig for_data(config::RunConfig cfg, const dataset::DatasetIndex& data) {
    cfg.dataset.n_classes = data.n_classes();
    cfg.model.n_classes = data.n_classes();
    return cfg;
}

dataset::FoldPlan plan_for(const config::RunConfig& cfg, const dataset::DatasetIndex& data) {
    const auto& e = cfg.evaluation;
    return dataset::make_fold_plan(data.subjects(), e.k, e.n_train, e.n_val, e.n_test, cfg.training.seed);
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Pain-intensity estimation pipeline"};
    app.require_subcommand(1);

    Common common;
    DataArgs data_args;

    auto* synth = app.add_subcommand("synth", "generate a synthetic FACS-coded dataset");
    add_common(synth, common);
    std::string synth_out;
    std::optional<int> synth_subjects, synth_frames, synth_per_seq, synth_size;
    std::vector<double> synth_mix;
    synth->add_option("--out", synth_out, "output directory (default: dataset.root)");
    synth->add_option("--subjects", synth_subjects);
    synth->add_option("--frames", synth_frames, "frames per subject");
    synth->add_option("--frames-per-sequence", synth_per_seq);
    synth->add_option("--size", synth_size, "image side in pixels");
    synth->add_option("--mix", synth_mix, "share of each pain band")->delimiter(',');

    auto* ingest = app.add_subcommand("ingest", "index a dataset and summarize it");
    add_common(ingest, common);
    add_data_args(ingest, data_args, true);

    auto* stats = app.add_subcommand("stats", "class histogram and inverse-frequency weights");
    add_common(stats, common);
    add_data_args(stats, data_args, true);

    auto* folds = app.add_subcommand("folds", "subject-disjoint fold plan as JSON");
    add_common(folds, common);
    add_data_args(folds, data_args, false);
    std::optional<int> n_subjects, fold_k, fold_train, fold_val, fold_test;
    std::string folds_out;
    folds->add_option("--subjects", n_subjects, "plan over S01..SNN instead of a dataset");
    folds->add_option("--k", fold_k);
    folds->add_option("--train", fold_train);
    folds->add_option("--val", fold_val);
    folds->add_option("--test", fold_test);
    folds->add_option("--out", folds_out, "also write the plan to this file");

    auto* train = app.add_subcommand("train", "train one fold");
    add_common(train, common);
    add_data_args(train, data_args, false);
    int train_fold = 0;
    std::string train_out;
    train->add_option("--fold", train_fold, "fold id (0-based)");
    train->add_option("--out", train_out, "checkpoint path (default: <output_dir>/fold<id>.ckpt)");

    auto* evaluate = app.add_subcommand("evaluate", "k-fold cross-validation");
    add_common(evaluate, common);
    add_data_args(evaluate, data_args, false);
    std::string eval_out;
    evaluate->add_option("--out", eval_out, "output directory (default: evaluation.output_dir)");

    auto* report = app.add_subcommand("report", "convert a metrics report");
    add_common(report, common);
    std::string report_in, report_out, report_format = "csv";
    report->add_option("input", report_in, "metrics report (JSON)")->required();
    report->add_option("--format", report_format, "json or csv");
    report->add_option("--out", report_out, "output path (default: input with the format's extension)");

    auto* plot = app.add_subcommand("plot", "MAE/MSE/accuracy comparison chart (SVG)");
    add_common(plot, common);
    std::vector<std::string> plot_in;
    std::string plot_out;
    plot->add_option("reports", plot_in, "metrics reports (JSON), or one file holding a list")->required();
    plot->add_option("--out", plot_out, "SVG path")->required();

    auto* validate = app.add_subcommand("validate-config", "check a configuration file");
    std::string validate_path;
    std::optional<std::uint64_t> validate_seed;
    validate->add_option("config", validate_path)->required();
    validate->add_option("--seed", validate_seed);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        if (!app.get_subcommands().empty()) err << app.get_subcommands().front()->help();
        return 2;
    }

    try {
        if (synth->parsed()) {
            auto cfg = resolve(common, err, false);
            auto& s = cfg.dataset.synthetic;
            if (synth_subjects) s.n_subjects = *synth_subjects;
            if (synth_frames) s.frames_per_subject = *synth_frames;
            if (synth_per_seq) s.frames_per_sequence = *synth_per_seq;
            if (synth_size) s.image_size = *synth_size;
            if (!synth_mix.empty()) s.class_mix = synth_mix;
            const fs::path dir = synth_out.empty() ? cfg.dataset.root : fs::path(synth_out);
            const auto index = synthetic::generate_synthetic(s, dir);
            out << nlohmann::json{{"root", dir.string()},
                                  {"frames", index.size()},
                                  {"subjects", index.subjects().size()},
                                  {"n_classes", index.n_classes()},
                                  {"histogram", dataset::histogram_json(dataset::class_histogram(index))}}
                       .dump()
                << "\n";
        } else if (ingest->parsed()) {
            auto cfg = resolve(common, err, false);
            const auto result = load_data(data_args, common, cfg, err);
            out << result.index.size() << " frames, " << result.index.subjects().size() << " subjects\n";
        } else if (stats->parsed()) {
            auto cfg = resolve(common, err, false);
            const auto result = load_data(data_args, common, cfg, err);
            out << nlohmann::json{{"frames", result.index.size()},
                                  {"subjects", result.index.subjects().size()},
                                  {"histogram", dataset::histogram_json(dataset::class_histogram(result.index))},
                                  {"class_weights", dataset::to_json(dataset::compute_class_weights(result.index))}}
                       .dump(2)
                << "\n";
        } else if (folds->parsed()) {
            auto cfg = resolve(common, err, false);
            auto& e = cfg.evaluation;
            if (fold_k) e.k = *fold_k;
            if (fold_train) e.n_train = *fold_train;
            if (fold_val) e.n_val = *fold_val;
            if (fold_test) e.n_test = *fold_test;
            std::set<std::string> subjects;
            if (n_subjects) {
                subjects = dataset::numbered_subjects(*n_subjects);
            } else {
                subjects = load_data(data_args, common, cfg, err).index.subjects();
            }
            const auto plan = dataset::make_fold_plan(subjects, e.k, e.n_train, e.n_val, e.n_test, cfg.training.seed);
            dataset::check_fold_plan(plan, subjects);
            const std::string text = dataset::to_json(plan).dump(2) + "\n";
            if (!folds_out.empty()) write_file_atomic(folds_out, text);
            out << text;
        } else if (train->parsed()) {
            auto cfg = resolve(common, err, true);
            const auto data = load_data(data_args, common, cfg, err).index;
            cfg = for_data(cfg, data);
            const auto plan = plan_for(cfg, data);
            if (train_fold < 0 || train_fold >= static_cast<int>(plan.folds.size())) {
                throw ValidationError("--fold must lie in [0, " + std::to_string(plan.folds.size()) + ")");
            }
            const preprocess::SampleBank bank(data, cfg.preprocess);
            auto result = training::train_fold(data, bank, plan.folds[static_cast<std::size_t>(train_fold)], train_fold,
                                               cfg.model, cfg.training, [&](int fold, const training::EpochRecord& r) {
                                                   out << training::epoch_log_line(fold, r) << "\n" << std::flush;
                                               });
            const fs::path path = train_out.empty()
                                      ? cfg.evaluation.output_dir / ("fold" + std::to_string(train_fold) + ".ckpt")
                                      : fs::path(train_out);
            if (path.has_parent_path()) fs::create_directories(path.parent_path());
            training::save_checkpoint(result.checkpoint, path);
            err << "checkpoint: " << path.string() << " best_epoch=" << result.checkpoint.best_epoch << "\n";
        } else if (evaluate->parsed()) {
            auto cfg = resolve(common, err, true);
            const auto data = load_data(data_args, common, cfg, err).index;
            cfg = for_data(cfg, data);
            const auto plan = plan_for(cfg, data);
            const preprocess::SampleBank bank(data, cfg.preprocess);
            evaluation::TrainingRunner runner(bank, cfg.model, cfg.training, [&](int fold, const training::EpochRecord& r) {
                out << training::epoch_log_line(fold, r) << "\n" << std::flush;
            });
            const auto rep = evaluation::run_cross_validation(data, plan, runner);
            // Files appear only once every fold has succeeded.
            const fs::path dir = eval_out.empty() ? cfg.evaluation.output_dir : fs::path(eval_out);
            fs::create_directories(dir / "checkpoints");
            for (const auto& ckpt : runner.checkpoints()) {
                training::save_checkpoint(ckpt, dir / "checkpoints" / ("fold" + std::to_string(ckpt.fold_id) + ".ckpt"));
            }
            write_file_atomic(dir / "folds.json", dataset::to_json(plan).dump(2) + "\n");
            evaluation::emit_report(rep, evaluation::ReportFormat::json, dir / "report.json");
            evaluation::emit_report(rep, evaluation::ReportFormat::csv, dir / "report.csv");
            err << "report: " << (dir / "report.json").string() << "\n";
            out << nlohmann::json{{"model", rep.model_name},
                                  {"mae", rep.aggregate.mae},
                                  {"mse", rep.aggregate.mse},
                                  {"accuracy", rep.aggregate.accuracy}}
                       .dump()
                << "\n";
        } else if (report->parsed()) {
            resolve(common, err, false);
            const auto format = evaluation::parse_report_format(report_format);
            const auto rep = evaluation::read_report(report_in);
            fs::path path = report_out.empty() ? fs::path(report_in).replace_extension("." + report_format)
                                               : fs::path(report_out);
            if (report_out.empty() && format == evaluation::ReportFormat::json) {
                throw ValidationError("--out is required when re-emitting JSON");
            }
            evaluation::emit_report(rep, format, path);
            out << path.string() << "\n";
        } else if (plot->parsed()) {
            resolve(common, err, false);
            std::vector<evaluation::MetricsReport> reports;
            for (const auto& p : plot_in) {
                const auto j = nlohmann::json::parse(read_file(p));
                if (j.is_array()) {
                    for (const auto& r : j) reports.push_back(evaluation::report_from_json(r));
                } else {
                    reports.push_back(evaluation::report_from_json(j));
                }
            }
            evaluation::emit_comparison_plot(reports, plot_out);
            out << plot_out << "\n";
        } else if (validate->parsed()) {
            Common c{validate_path, validate_seed};
            resolve(c, err, true);
            out << "ok\n";
        }
    } catch (const evaluation::FoldError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int cli_main(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return cli_main(args, std::cout, std::cerr);
}

}  // namespace painpipe::cli
