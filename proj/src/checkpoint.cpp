#include "painpipe/checkpoint.hpp"

#include <cstring>

#include "painpipe/error.hpp"
#include "painpipe/io_util.hpp"

namespace painpipe::training {

namespace {

constexpr char kMagic[8] = {'P', 'A', 'I', 'N', 'C', 'K', 'P', 'T'};

template <typename U>
void put(std::string& out, U v) {
    unsigned char bytes[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.append(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U get(const std::string& in, std::size_t at) {
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        v |= static_cast<U>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    }
    return v;
}

}  // namespace

nlohmann::json to_json(const EpochRecord& r) {
    return {{"epoch", r.epoch},
            {"train_loss", r.train_loss},
            {"val_mae", r.val_mae},
            {"val_mse", r.val_mse},
            {"val_accuracy", r.val_accuracy}};
}

EpochRecord epoch_record_from_json(const nlohmann::json& j) {
    return EpochRecord{j.at("epoch").get<int>(), j.at("train_loss").get<double>(), j.at("val_mae").get<double>(),
                       j.at("val_mse").get<double>(), j.at("val_accuracy").get<double>()};
}

std::vector<TensorBlob> capture_state(nn::Network<float>& net) {
    std::vector<TensorBlob> out;
    for (auto* p : net.state()) out.push_back(TensorBlob{p->name, p->dims, p->value, p->trainable});
    return out;
}

void restore_state(nn::Network<float>& net, const std::vector<TensorBlob>& tensors) {
    auto params = net.state();
    if (params.size() != tensors.size()) {
        throw ValidationError("checkpoint holds " + std::to_string(tensors.size()) + " tensors, network has " +
                              std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i]->name != tensors[i].name || params[i]->dims != tensors[i].dims ||
            params[i]->value.size() != tensors[i].values.size()) {
            throw ValidationError("checkpoint tensor '" + tensors[i].name + "' does not match network tensor '" +
                                  params[i]->name + "'");
        }
        params[i]->value = tensors[i].values;
    }
}

models::Model<float> instantiate(const Checkpoint& checkpoint) {
    auto model = models::build<float>(checkpoint.spec, checkpoint.model_seed);
    restore_state(model.net, checkpoint.tensors);
    return model;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
    nlohmann::json header;
    header["format"] = "painpipe-checkpoint";
    header["dtype"] = "float32";
    header["spec"] = models::to_json(c.spec);
    header["model_seed"] = c.model_seed;
    header["fold_id"] = c.fold_id;
    header["best_epoch"] = c.best_epoch;
    header["stop_epoch"] = c.stop_epoch;
    header["early_stopped"] = c.early_stopped;
    header["diverged"] = c.diverged;
    header["training_config"] = c.training_config;
    header["history"] = nlohmann::json::array();
    for (const auto& r : c.history) header["history"].push_back(to_json(r));
    header["tensors"] = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& t : c.tensors) {
        header["tensors"].push_back(
            {{"name", t.name}, {"dims", t.dims}, {"offset", offset}, {"count", t.values.size()}, {"trainable", t.trainable}});
        offset += t.values.size();
    }
    const std::string text = header.dump();

    std::string out(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint64_t>(out, text.size());
    out += text;
    for (const auto& t : c.tensors) {
        for (float v : t.values) {
            std::uint32_t bits;
            std::memcpy(&bits, &v, sizeof bits);
            put<std::uint32_t>(out, bits);
        }
    }
    write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const std::string in = read_file(path);
    const std::size_t prefix = sizeof kMagic + 4 + 8;
    if (in.size() < prefix || std::memcmp(in.data(), kMagic, sizeof kMagic) != 0) {
        throw ValidationError(path.string() + ": not a checkpoint file");
    }
    const auto version = get<std::uint32_t>(in, sizeof kMagic);
    if (version != kCheckpointVersion) {
        throw ValidationError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
    }
    const auto header_len = get<std::uint64_t>(in, sizeof kMagic + 4);
    if (header_len > in.size() - prefix) throw ValidationError(path.string() + ": truncated header");
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(in.substr(prefix, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": bad header: " + e.what());
    }

    Checkpoint c;
    try {
        c.spec = models::spec_from_json(h.at("spec"));
        c.model_seed = h.at("model_seed").get<std::uint64_t>();
        c.fold_id = h.at("fold_id").get<int>();
        c.best_epoch = h.at("best_epoch").get<int>();
        c.stop_epoch = h.at("stop_epoch").get<int>();
        c.early_stopped = h.at("early_stopped").get<bool>();
        c.diverged = h.at("diverged").get<bool>();
        c.training_config = h.at("training_config");
        for (const auto& r : h.at("history")) c.history.push_back(epoch_record_from_json(r));
        const std::size_t blob_start = prefix + header_len;
        const std::size_t floats = (in.size() - blob_start) / 4;
        for (const auto& t : h.at("tensors")) {
            TensorBlob blob;
            blob.name = t.at("name").get<std::string>();
            blob.dims = t.at("dims").get<std::vector<int>>();
            blob.trainable = t.at("trainable").get<bool>();
            const auto offset = t.at("offset").get<std::size_t>();
            const auto count = t.at("count").get<std::size_t>();
            if (offset + count > floats) throw ValidationError(path.string() + ": tensor '" + blob.name + "' overruns file");
            blob.values.resize(count);
            for (std::size_t i = 0; i < count; ++i) {
                const auto bits = get<std::uint32_t>(in, blob_start + 4 * (offset + i));
                std::memcpy(&blob.values[i], &bits, sizeof bits);
            }
            c.tensors.push_back(std::move(blob));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": bad header: " + e.what());
    }
    return c;
}

}  // namespace painpipe::training
