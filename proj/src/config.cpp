#include "painpipe/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "painpipe/error.hpp"
#include "painpipe/io_util.hpp"
#include "painpipe/seed.hpp"

namespace painpipe::config {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>> kSchema = {
    {"run", {"version", "seed"}},
    {"dataset",
     {"root", "layout", "n_classes", "subjects", "frames_per_subject", "frames_per_sequence", "image_size",
      "class_mix"}},
    {"preprocess",
     {"detector", "channel_mean", "channel_std", "hflip_probability", "frontal_cascade", "profile_cascade"}},
    {"model", {"name", "input_size", "width_multiplier"}},
    {"training",
     {"optimizer", "learning_rate", "max_epochs", "batch_size", "early_stop_patience", "loss_weighting", "resample"}},
    {"evaluation", {"k", "n_train", "n_val", "n_test", "output_dir", "report_format"}},
};

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw ConfigError(key + ": cannot parse '" + text + "' as a number");
    return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto a = item.find_first_not_of(" \t");
        const auto b = item.find_last_not_of(" \t");
        if (a == std::string::npos) throw ConfigError(key + ": empty list element");
        out.push_back(parse_number<double>(key, item.substr(a, b - a + 1)));
    }
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + num(v[i]);
    return out;
}

std::array<float, 3> triple(const std::string& key, const std::string& text) {
    const auto v = parse_list(key, text);
    if (v.size() != 3) throw ConfigError(key + ": expected three comma-separated values");
    return {static_cast<float>(v[0]), static_cast<float>(v[1]), static_cast<float>(v[2])};
}

// Re-raises library validation errors as configuration errors.
template <typename F>
void checked(F&& f) {
    try {
        f();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace

void RunConfig::validate(bool check_paths) const {
    if (version != kConfigVersion) throw ConfigError("run.version: unsupported config version " + std::to_string(version));
    if (dataset.n_classes < 2 || dataset.n_classes > 17) throw ConfigError("dataset.n_classes must lie in [2, 17]");
    if (dataset.root.empty()) throw ConfigError("dataset.root must not be empty");
    checked([&] { dataset.synthetic.validate(); });
    if (dataset.layout == dataset::Layout::synthetic &&
        static_cast<int>(dataset.synthetic.class_mix.size()) != dataset.n_classes) {
        throw ConfigError("dataset.class_mix has " + std::to_string(dataset.synthetic.class_mix.size()) +
                          " entries but dataset.n_classes is " + std::to_string(dataset.n_classes));
    }
    checked([&] { preprocess.validate(); });
    if (preprocess.target_size != model.input_size) throw ConfigError("preprocess target size differs from model.input_size");
    checked([&] { model.validate(); });
    checked([&] { training.validate(); });
    if (evaluation.k < 2) throw ConfigError("evaluation.k must be >= 2");
    if (evaluation.n_train < 1 || evaluation.n_val < 1 || evaluation.n_test < 1) {
        throw ConfigError("evaluation.n_train, n_val and n_test must be >= 1");
    }
    if (evaluation.report_format != "json" && evaluation.report_format != "csv") {
        throw ConfigError("evaluation.report_format must be json or csv");
    }
    if (check_paths) {
        if (dataset.layout == dataset::Layout::unbc_like && !std::filesystem::is_directory(dataset.root)) {
            throw ConfigError("dataset.root: directory '" + dataset.root.string() + "' does not exist");
        }
        if (preprocess.detector == preprocess::DetectorKind::cascade_frontal_then_profile) {
            if (!std::filesystem::is_regular_file(preprocess.frontal_cascade)) {
                throw ConfigError("preprocess.frontal_cascade: file '" + preprocess.frontal_cascade.string() +
                                  "' does not exist");
            }
            if (!std::filesystem::is_regular_file(preprocess.profile_cascade)) {
                throw ConfigError("preprocess.profile_cascade: file '" + preprocess.profile_cascade.string() +
                                  "' does not exist");
            }
        }
    }
}

RunConfig parse_run_config(const std::string& text) {
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    std::map<std::string, std::string> kv;
    for (const auto& [section, body] : tree) {
        const auto schema = kSchema.find(section);
        if (schema == kSchema.end()) {
            if (body.empty()) throw ConfigError("key '" + section + "' outside of a section");
            throw ConfigError("unknown section [" + section + "]");
        }
        for (const auto& [key, value] : body) {
            if (!schema->second.count(key)) throw ConfigError(section + "." + key + ": unknown key");
            kv[section + "." + key] = value.get_value<std::string>();
        }
    }

    RunConfig c;
    auto has = [&](const std::string& k) { return kv.count(k) > 0; };
    auto str = [&](const std::string& k) { return kv.at(k); };
    auto integer = [&](const std::string& k, int& dst) {
        if (has(k)) dst = parse_number<int>(k, str(k));
    };
    auto real = [&](const std::string& k, double& dst) {
        if (has(k)) dst = parse_number<double>(k, str(k));
    };
    auto choice = [&](const std::string& k, auto parse, auto& dst) {
        if (!has(k)) return;
        try {
            dst = parse(str(k));
        } catch (const Error& e) {
            throw ConfigError(k + ": " + e.what());
        }
    };

    integer("run.version", c.version);
    if (has("run.seed")) c.seed = parse_number<std::uint64_t>("run.seed", str("run.seed"));

    if (has("dataset.root")) c.dataset.root = str("dataset.root");
    choice("dataset.layout", [](const std::string& s) { return dataset::parse_layout(s); }, c.dataset.layout);
    integer("dataset.n_classes", c.dataset.n_classes);
    integer("dataset.subjects", c.dataset.synthetic.n_subjects);
    integer("dataset.frames_per_subject", c.dataset.synthetic.frames_per_subject);
    integer("dataset.frames_per_sequence", c.dataset.synthetic.frames_per_sequence);
    integer("dataset.image_size", c.dataset.synthetic.image_size);
    if (has("dataset.class_mix")) c.dataset.synthetic.class_mix = parse_list("dataset.class_mix", str("dataset.class_mix"));

    choice("preprocess.detector", [](const std::string& s) { return preprocess::parse_detector(s); },
           c.preprocess.detector);
    if (has("preprocess.channel_mean")) c.preprocess.channel_mean = triple("preprocess.channel_mean", str("preprocess.channel_mean"));
    if (has("preprocess.channel_std")) c.preprocess.channel_std = triple("preprocess.channel_std", str("preprocess.channel_std"));
    real("preprocess.hflip_probability", c.preprocess.hflip_probability);
    if (has("preprocess.frontal_cascade")) c.preprocess.frontal_cascade = str("preprocess.frontal_cascade");
    if (has("preprocess.profile_cascade")) c.preprocess.profile_cascade = str("preprocess.profile_cascade");

    choice("model.name", [](const std::string& s) { return models::parse_architecture(s); }, c.model.name);
    integer("model.input_size", c.model.input_size);
    real("model.width_multiplier", c.model.width_multiplier);

    choice("training.optimizer", [](const std::string& s) { return training::parse_optimizer(s); },
           c.training.optimizer);
    real("training.learning_rate", c.training.learning_rate);
    integer("training.max_epochs", c.training.max_epochs);
    integer("training.batch_size", c.training.batch_size);
    integer("training.early_stop_patience", c.training.early_stop_patience);
    choice("training.loss_weighting", [](const std::string& s) { return training::parse_loss_weighting(s); },
           c.training.loss_weighting);
    if (has("training.resample") && str("training.resample") != "none") {
        choice("training.resample", [](const std::string& s) { return std::optional(dataset::parse_resample_strategy(s)); },
               c.training.resample);
    }

    integer("evaluation.k", c.evaluation.k);
    integer("evaluation.n_train", c.evaluation.n_train);
    integer("evaluation.n_val", c.evaluation.n_val);
    integer("evaluation.n_test", c.evaluation.n_test);
    if (has("evaluation.output_dir")) c.evaluation.output_dir = str("evaluation.output_dir");
    if (has("evaluation.report_format")) c.evaluation.report_format = str("evaluation.report_format");

    c.model.n_classes = c.dataset.n_classes;
    c.preprocess.target_size = c.model.input_size;
    if (c.seed) apply_seed(c, *c.seed);
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) throw ConfigError("config file '" + path.string() + "' not found");
    return parse_run_config(read_file(path));
}

std::string canonical_form(const RunConfig& c) {
    std::map<std::string, std::string> kv;
    kv["run.version"] = std::to_string(c.version);
    kv["run.seed"] = c.seed ? std::to_string(*c.seed) : "unset";
    kv["dataset.root"] = c.dataset.root.generic_string();
    kv["dataset.layout"] = dataset::to_string(c.dataset.layout);
    kv["dataset.n_classes"] = std::to_string(c.dataset.n_classes);
    kv["dataset.subjects"] = std::to_string(c.dataset.synthetic.n_subjects);
    kv["dataset.frames_per_subject"] = std::to_string(c.dataset.synthetic.frames_per_subject);
    kv["dataset.frames_per_sequence"] = std::to_string(c.dataset.synthetic.frames_per_sequence);
    kv["dataset.image_size"] = std::to_string(c.dataset.synthetic.image_size);
    kv["dataset.class_mix"] = join(c.dataset.synthetic.class_mix);
    kv["preprocess.detector"] = preprocess::to_string(c.preprocess.detector);
    kv["preprocess.channel_mean"] =
        join({c.preprocess.channel_mean[0], c.preprocess.channel_mean[1], c.preprocess.channel_mean[2]});
    kv["preprocess.channel_std"] =
        join({c.preprocess.channel_std[0], c.preprocess.channel_std[1], c.preprocess.channel_std[2]});
    kv["preprocess.hflip_probability"] = num(c.preprocess.hflip_probability);
    kv["preprocess.frontal_cascade"] = c.preprocess.frontal_cascade.generic_string();
    kv["preprocess.profile_cascade"] = c.preprocess.profile_cascade.generic_string();
    kv["model.name"] = models::to_string(c.model.name);
    kv["model.input_size"] = std::to_string(c.model.input_size);
    kv["model.width_multiplier"] = num(c.model.width_multiplier);
    kv["training.optimizer"] = training::to_string(c.training.optimizer);
    kv["training.learning_rate"] = num(c.training.learning_rate);
    kv["training.max_epochs"] = std::to_string(c.training.max_epochs);
    kv["training.batch_size"] = std::to_string(c.training.batch_size);
    kv["training.early_stop_patience"] = std::to_string(c.training.early_stop_patience);
    kv["training.loss_weighting"] = training::to_string(c.training.loss_weighting);
    kv["training.resample"] = c.training.resample ? dataset::to_string(*c.training.resample) : "none";
    kv["evaluation.k"] = std::to_string(c.evaluation.k);
    kv["evaluation.n_train"] = std::to_string(c.evaluation.n_train);
    kv["evaluation.n_val"] = std::to_string(c.evaluation.n_val);
    kv["evaluation.n_test"] = std::to_string(c.evaluation.n_test);
    kv["evaluation.output_dir"] = c.evaluation.output_dir.generic_string();
    kv["evaluation.report_format"] = c.evaluation.report_format;
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

std::string config_digest(const RunConfig& config) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_form(config))));
    return buf;
}

SeedResolution resolve_seed(std::optional<std::uint64_t> cli, const char* env_value,
                            std::optional<std::uint64_t> config_seed) {
    if (cli) return {*cli, "cli"};
    if (env_value && *env_value) {
        return {parse_number<std::uint64_t>(kSeedEnv, env_value), "env"};
    }
    if (config_seed) return {*config_seed, "config"};
    return {0, "default"};
}

void apply_seed(RunConfig& config, std::uint64_t seed) {
    config.training.seed = seed;
    config.dataset.synthetic.seed = seed;
}

}  // namespace painpipe::config
