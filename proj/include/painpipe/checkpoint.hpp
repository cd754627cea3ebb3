#pragma once

// Versioned checkpoint container:
//   "PAINCKPT" | u32 version | u64 header bytes | JSON header | float32 blobs
// The header carries the model spec, seeds, training metadata and a table of
// tensors (name, dims, element offset, count). Integers are little-endian.

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "painpipe/models.hpp"

namespace painpipe::training {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_mae = 0.0;
    double val_mse = 0.0;
    double val_accuracy = 0.0;

    bool operator==(const EpochRecord&) const = default;
};

nlohmann::json to_json(const EpochRecord& record);
EpochRecord epoch_record_from_json(const nlohmann::json& j);

struct TensorBlob {
    std::string name;
    std::vector<int> dims;
    std::vector<float> values;
    bool trainable = true;

    bool operator==(const TensorBlob&) const = default;
};

struct Checkpoint {
    models::ModelSpec spec;
    std::uint64_t model_seed = 0;
    int fold_id = 0;
    int best_epoch = 0;  // 1-based index into history
    int stop_epoch = 0;
    bool early_stopped = false;
    bool diverged = false;
    std::vector<EpochRecord> history;
    nlohmann::json training_config;
    std::vector<TensorBlob> tensors;
};

std::vector<TensorBlob> capture_state(nn::Network<float>& net);
/// Copies tensors into `net`; names and dims must match exactly.
void restore_state(nn::Network<float>& net, const std::vector<TensorBlob>& tensors);

/// A network built from the checkpoint spec holding its parameters.
models::Model<float> instantiate(const Checkpoint& checkpoint);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
/// Throws IoError for unreadable files, ValidationError for a bad magic,
/// unsupported version or inconsistent tensor table.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace painpipe::training
