#pragma once

// Run configuration: an INI file with sections [run], [dataset], [preprocess],
// [model], [training] and [evaluation]. Keys left out take the defaults of
// the corresponding library types. Format version 1.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "painpipe/dataset.hpp"
#include "painpipe/models.hpp"
#include "painpipe/preprocess.hpp"
#include "painpipe/synthetic.hpp"
#include "painpipe/training.hpp"

namespace painpipe::config {

inline constexpr int kConfigVersion = 1;
inline constexpr const char* kSeedEnv = "PAINPIPE_SEED";

struct DatasetSection {
    std::filesystem::path root = "data";
    dataset::Layout layout = dataset::Layout::unbc_like;
    int n_classes = 17;
    synthetic::SyntheticConfig synthetic;  // used by `synth`
};

struct EvaluationSection {
    int k = 5;
    int n_train = 15;
    int n_val = 5;
    int n_test = 5;
    std::filesystem::path output_dir = "runs";
    std::string report_format = "json";
};

struct RunConfig {
    int version = kConfigVersion;
    std::optional<std::uint64_t> seed;
    DatasetSection dataset;
    preprocess::PreprocessConfig preprocess;  // target_size follows model.input_size
    models::ModelSpec model;                  // n_classes follows dataset.n_classes
    training::TrainingConfig training;
    EvaluationSection evaluation;

    /// Checks every section. With `check_paths`, files the run reads must
    /// exist. Throws ConfigError naming the offending key.
    void validate(bool check_paths = true) const;
};

/// Throws ConfigError for syntax errors, unknown sections or keys, and
/// values that do not parse.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Every field, defaults included, as sorted "section.key=value" lines.
std::string canonical_form(const RunConfig& config);
/// FNV-1a of the canonical form as 16 hex digits.
std::string config_digest(const RunConfig& config);

struct SeedResolution {
    std::uint64_t seed = 0;
    std::string source;  // "cli", "env", "config" or "default"
};

/// Precedence: command-line flag, then PAINPIPE_SEED, then the config file,
/// then 0. `env_value` is the raw environment string (nullptr when unset).
SeedResolution resolve_seed(std::optional<std::uint64_t> cli, const char* env_value,
                            std::optional<std::uint64_t> config_seed);

/// Copies the resolved seed into the training and synthetic sections.
void apply_seed(RunConfig& config, std::uint64_t seed);

}  // namespace painpipe::config
