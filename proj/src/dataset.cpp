#include "painpipe/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <tuple>

#include "painpipe/error.hpp"

namespace painpipe::dataset {

namespace fs = std::filesystem;

namespace {

auto record_key(const FrameRecord& r) {
    return std::tie(r.subject_id, r.sequence_id, r.frame_index, r.frame_name);
}

void sort_records(std::vector<FrameRecord>& records) {
    std::stable_sort(records.begin(), records.end(),
                     [](const FrameRecord& a, const FrameRecord& b) { return record_key(a) < record_key(b); });
}

std::vector<fs::path> sorted_children(const fs::path& dir, bool directories) {
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (directories ? entry.is_directory() : entry.is_regular_file()) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

bool is_image(const fs::path& p) {
    const auto ext = lower(p.extension().string());
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

/// Trailing decimal digits of a frame stem ("ll042t1aaaff001" -> 1), or -1.
int trailing_number(const std::string& stem) {
    std::size_t pos = stem.size();
    while (pos > 0 && std::isdigit(static_cast<unsigned char>(stem[pos - 1]))) --pos;
    if (pos == stem.size()) return -1;
    int value = 0;
    auto [ptr, ec] = std::from_chars(stem.data() + pos, stem.data() + stem.size(), value);
    return ec == std::errc{} ? value : -1;
}

bool parse_number(std::string_view token, double& out) {
    if (token.empty()) return false;
    if (token.front() == '+') token.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
    return ec == std::errc{} && ptr == token.data() + token.size() && std::isfinite(out);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

using BoxKey = std::tuple<std::string, std::string, std::string>;

std::map<BoxKey, BoundingBox> read_face_boxes(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw IngestError("cannot open face box sidecar " + file.string());
    std::map<BoxKey, BoundingBox> boxes;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line_no == 1) continue;  // header
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
        if (cells.size() != 7) {
            throw IngestError(file.string() + ":" + std::to_string(line_no) + ": expected 7 columns");
        }
        BoundingBox box;
        int* fields[] = {&box.x, &box.y, &box.w, &box.h};
        for (int i = 0; i < 4; ++i) {
            const auto& c = cells[3 + i];
            auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), *fields[i]);
            if (ec != std::errc{} || ptr != c.data() + c.size()) {
                throw IngestError(file.string() + ":" + std::to_string(line_no) + ": bad box value '" + c + "'");
            }
        }
        boxes[{cells[0], cells[1], cells[2]}] = box;
    }
    return boxes;
}

}  // namespace

Layout parse_layout(const std::string& name) {
    if (name == "unbc_like") return Layout::unbc_like;
    if (name == "synthetic") return Layout::synthetic;
    throw ValidationError("unknown dataset layout '" + name + "' (expected unbc_like or synthetic)");
}

std::string to_string(Layout layout) { return layout == Layout::synthetic ? "synthetic" : "unbc_like"; }

DatasetIndex::DatasetIndex(std::vector<FrameRecord> records, int n_classes)
    : records_(std::move(records)), n_classes_(n_classes) {
    if (n_classes_ < 2) throw ValidationError("n_classes must be >= 2");
    for (const auto& r : records_) {
        if (r.pain_class.n_classes != n_classes_ || r.pain_class != facs::quantize_pspi(r.pspi, n_classes_)) {
            throw ValidationError("frame " + r.subject_id + "/" + r.sequence_id + "/" + r.frame_name +
                                  " has a class label inconsistent with its PSPI score");
        }
        subjects_.insert(r.subject_id);
    }
}

std::vector<std::size_t> DatasetIndex::indices_for(const std::set<std::string>& subjects) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (subjects.count(records_[i].subject_id) != 0) out.push_back(i);
    }
    return out;
}

DatasetIndex DatasetIndex::with_class_count(int n_classes) const {
    auto records = records_;
    for (auto& r : records) r.pain_class = facs::quantize_pspi(r.pspi, n_classes);
    return DatasetIndex(std::move(records), n_classes);
}

bool DatasetIndex::has_unique_keys() const {
    std::set<std::tuple<std::string, std::string, int, std::string>> seen;
    for (const auto& r : records_) {
        if (!seen.emplace(r.subject_id, r.sequence_id, r.frame_index, r.frame_name).second) return false;
    }
    return true;
}

fs::path au_file_for(const fs::path& root, const std::string& subject, const std::string& sequence,
                     const std::string& frame_name) {
    return root / "Frame_Labels" / "FACS" / subject / sequence / (frame_name + "_facs.txt");
}

fs::path image_file_for(const fs::path& root, const std::string& subject, const std::string& sequence,
                        const std::string& frame_name) {
    return root / "Images" / subject / sequence / (frame_name + ".png");
}

facs::ActionUnitVector parse_au_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open AU file " + path.string());
    facs::ActionUnitVector au;
    std::set<int> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream tokens(line);
        std::vector<std::string> parts;
        for (std::string t; tokens >> t;) parts.push_back(t);
        if (parts.empty()) continue;
        const auto where = path.string() + ":" + std::to_string(line_no);
        double code = 0.0;
        double intensity = 0.0;
        if (parts.size() != 2 || !parse_number(parts[0], code) || !parse_number(parts[1], intensity)) {
            throw IngestError(where + ": malformed AU line '" + trim(line) + "' (expected '<au_code> <intensity>')");
        }
        if (code != std::floor(code)) throw IngestError(where + ": non-integer AU code");
        const auto unit = facs::au_from_code(static_cast<int>(code));
        if (!unit) continue;
        if (intensity != std::floor(intensity)) {
            throw IngestError(where + ": fractional intensity for " + std::string(facs::au_name(*unit)));
        }
        if (!seen.insert(static_cast<int>(code)).second) {
            throw IngestError(where + ": duplicate entry for " + std::string(facs::au_name(*unit)));
        }
        const int value = static_cast<int>(intensity);
        if (value < 0 || value > facs::max_intensity(*unit)) {
            throw IngestError(where + ": " + std::string(facs::au_name(*unit)) + " intensity " +
                              std::to_string(value) + " outside [0, " +
                              std::to_string(facs::max_intensity(*unit)) + "]");
        }
        au.set(*unit, value);
    }
    return au;
}

IngestResult ingest(const fs::path& root, Layout layout, int n_classes) {
    if (!fs::is_directory(root)) throw IngestError("dataset root " + root.string() + " is not a directory");
    const fs::path images = root / "Images";
    if (!fs::is_directory(images)) throw IngestError("missing Images/ directory under " + root.string());

    std::map<BoxKey, BoundingBox> boxes;
    const fs::path sidecar = root / kFaceBoxSidecar;
    if (layout == Layout::synthetic || fs::exists(sidecar)) boxes = read_face_boxes(sidecar);

    IngestWarnings warnings;
    std::vector<FrameRecord> records;
    for (const auto& subject_dir : sorted_children(images, true)) {
        const auto subject = subject_dir.filename().string();
        for (const auto& sequence_dir : sorted_children(subject_dir, true)) {
            const auto sequence = sequence_dir.filename().string();
            int ordinal = 0;
            for (const auto& image : sorted_children(sequence_dir, false)) {
                if (!is_image(image)) continue;
                const auto stem = image.stem().string();
                const int position = ordinal++;
                const auto au_path = au_file_for(root, subject, sequence, stem);
                if (!fs::exists(au_path)) {
                    ++warnings.missing_au_files;
                    if (warnings.skipped.size() < 10) warnings.skipped.push_back(image.string());
                    continue;
                }
                FrameRecord r;
                r.subject_id = subject;
                r.sequence_id = sequence;
                r.frame_name = stem;
                const int number = trailing_number(stem);
                r.frame_index = number >= 0 ? number : position;
                r.image_path = image;
                r.au = parse_au_file(au_path);
                r.pspi = facs::compute_pspi(r.au);
                r.pain_class = facs::quantize_pspi(r.pspi, n_classes);
                if (!boxes.empty()) {
                    auto it = boxes.find({subject, sequence, stem});
                    if (it != boxes.end()) {
                        r.face_box = it->second;
                    } else {
                        ++warnings.missing_face_boxes;
                    }
                }
                records.push_back(std::move(r));
            }
        }
    }
    if (records.empty()) throw IngestError("no labelled frames found under " + root.string());
    sort_records(records);
    DatasetIndex index(std::move(records), n_classes);
    if (!index.has_unique_keys()) throw IngestError("duplicate (subject, sequence, frame) keys under " + root.string());
    return IngestResult{std::move(index), std::move(warnings)};
}

std::map<int, std::size_t> class_histogram(const DatasetIndex& index) {
    std::map<int, std::size_t> hist;
    for (const auto& r : index.records()) ++hist[r.pain_class.index];
    return hist;
}

ClassWeightTable ClassWeightTable::uniform(int n_classes) {
    ClassWeightTable t;
    t.weights.assign(static_cast<std::size_t>(n_classes), 1.0);
    t.counts.assign(static_cast<std::size_t>(n_classes), 0);
    t.n_classes = n_classes;
    return t;
}

ClassWeightTable compute_class_weights(std::span<const std::size_t> counts) {
    ClassWeightTable t;
    t.counts.assign(counts.begin(), counts.end());
    t.weights.assign(counts.size(), 0.0);
    for (std::size_t c = 0; c < counts.size(); ++c) {
        t.total_samples += counts[c];
        if (counts[c] > 0) {
            ++t.n_classes;
        } else {
            t.empty_classes.push_back(static_cast<int>(c));
        }
    }
    if (t.total_samples == 0) throw ValidationError("cannot compute class weights of an empty dataset");
    // (1 / n_c) * (N / C) as a single rounding, so a uniform histogram gives exactly 1.
    const auto total = static_cast<double>(t.total_samples);
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] > 0) t.weights[c] = total / (static_cast<double>(t.n_classes) * static_cast<double>(counts[c]));
    }
    return t;
}

ClassWeightTable compute_class_weights(const DatasetIndex& index) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(index.n_classes()), 0);
    for (const auto& r : index.records()) ++counts[static_cast<std::size_t>(r.pain_class.index)];
    return compute_class_weights(counts);
}

ClassWeightTable compute_class_weights(const DatasetIndex& index, std::span<const std::size_t> subset) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(index.n_classes()), 0);
    for (auto i : subset) ++counts[static_cast<std::size_t>(index[i].pain_class.index)];
    return compute_class_weights(counts);
}

ResampleStrategy parse_resample_strategy(const std::string& name) {
    if (name == "oversample_minority") return ResampleStrategy::oversample_minority;
    if (name == "undersample_majority") return ResampleStrategy::undersample_majority;
    throw ValidationError("unknown resample strategy '" + name + "'");
}

std::string to_string(ResampleStrategy strategy) {
    return strategy == ResampleStrategy::oversample_minority ? "oversample_minority" : "undersample_majority";
}

std::vector<std::size_t> resample_indices(const DatasetIndex& index, std::span<const std::size_t> subset,
                                          ResampleStrategy strategy, std::uint64_t seed) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (auto i : subset) by_class[index[i].pain_class.index].push_back(i);
    if (by_class.size() < 2) throw ValidationError("resampling needs at least two populated classes");

    std::size_t target = 0;
    if (strategy == ResampleStrategy::oversample_minority) {
        for (const auto& [c, members] : by_class) target = std::max(target, members.size());
    } else {
        target = subset.size();
        for (const auto& [c, members] : by_class) target = std::min(target, members.size());
    }

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> out;
    out.reserve(target * by_class.size());
    for (auto& [c, members] : by_class) {
        if (strategy == ResampleStrategy::oversample_minority) {
            out.insert(out.end(), members.begin(), members.end());
            std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
            for (std::size_t n = members.size(); n < target; ++n) out.push_back(members[pick(rng)]);
        } else {
            std::shuffle(members.begin(), members.end(), rng);
            members.resize(target);
            out.insert(out.end(), members.begin(), members.end());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

DatasetIndex resample(const DatasetIndex& index, ResampleStrategy strategy, std::uint64_t seed) {
    std::vector<std::size_t> all(index.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    std::vector<FrameRecord> out;
    for (auto i : resample_indices(index, all, strategy, seed)) out.push_back(index[i]);
    sort_records(out);
    return DatasetIndex(std::move(out), index.n_classes());
}

FoldPlan make_fold_plan(const std::set<std::string>& subjects, int k, int n_train, int n_val, int n_test,
                        std::uint64_t seed) {
    const int total = static_cast<int>(subjects.size());
    if (k < 2) throw ValidationError("fold plan needs k >= 2, got " + std::to_string(k));
    if (n_train < 1 || n_val < 0 || n_test < 1) {
        throw ValidationError("fold plan needs n_train >= 1, n_val >= 0 and n_test >= 1");
    }
    if (n_train + n_val + n_test != total) {
        throw ValidationError("n_train + n_val + n_test must equal the subject count: " + std::to_string(n_train) +
                              " + " + std::to_string(n_val) + " + " + std::to_string(n_test) +
                              " != " + std::to_string(total));
    }
    if (k * n_test != total) {
        throw ValidationError("k * n_test must equal the subject count so every subject is tested once: " +
                              std::to_string(k) + " * " + std::to_string(n_test) + " != " + std::to_string(total));
    }

    std::vector<std::string> order(subjects.begin(), subjects.end());
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    FoldPlan plan;
    plan.seed = seed;
    plan.k = k;
    plan.n_train = n_train;
    plan.n_val = n_val;
    plan.n_test = n_test;
    for (int i = 0; i < k; ++i) {
        FoldSplit split;
        // Walk the blocks starting at block i: first n_test subjects test,
        // next n_val validate, the remainder train.
        for (int j = 0; j < total; ++j) {
            const auto& s = order[static_cast<std::size_t>((i * n_test + j) % total)];
            if (j < n_test) {
                split.test.insert(s);
            } else if (j < n_test + n_val) {
                split.val.insert(s);
            } else {
                split.train.insert(s);
            }
        }
        plan.folds.push_back(std::move(split));
    }
    return plan;
}

void check_fold_plan(const FoldPlan& plan, const std::set<std::string>& subjects) {
    if (static_cast<int>(plan.folds.size()) != plan.k) throw ValidationError("fold count differs from k");
    std::map<std::string, int> tested;
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
        const auto& s = plan.folds[f];
        const auto tag = "fold " + std::to_string(f) + ": ";
        std::set<std::string> all;
        std::size_t sizes = 0;
        for (const auto* part : {&s.train, &s.val, &s.test}) {
            all.insert(part->begin(), part->end());
            sizes += part->size();
        }
        if (all.size() != sizes) throw ValidationError(tag + "train/val/test subject sets overlap");
        if (all != subjects) throw ValidationError(tag + "train/val/test do not cover exactly the subject set");
        if (static_cast<int>(s.train.size()) != plan.n_train || static_cast<int>(s.val.size()) != plan.n_val ||
            static_cast<int>(s.test.size()) != plan.n_test) {
            throw ValidationError(tag + "partition sizes differ from the plan");
        }
        for (const auto& t : s.test) ++tested[t];
    }
    for (const auto& subject : subjects) {
        const int n = tested.count(subject) ? tested[subject] : 0;
        if (n != 1) {
            throw ValidationError("subject " + subject + " is tested " + std::to_string(n) + " times (expected 1)");
        }
    }
}

std::set<std::string> numbered_subjects(int count) {
    std::set<std::string> out;
    const int digits = std::max(2, static_cast<int>(std::to_string(count).size()));
    for (int i = 1; i <= count; ++i) {
        auto num = std::to_string(i);
        out.insert("S" + std::string(static_cast<std::size_t>(digits) - num.size(), '0') + num);
    }
    return out;
}

nlohmann::json to_json(const IngestWarnings& w) {
    return {{"missing_au_files", w.missing_au_files},
            {"missing_face_boxes", w.missing_face_boxes},
            {"skipped_examples", w.skipped}};
}

nlohmann::json histogram_json(const std::map<int, std::size_t>& histogram) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [c, n] : histogram) j[std::to_string(c)] = n;
    return j;
}

nlohmann::json to_json(const ClassWeightTable& t) {
    nlohmann::json weights = nlohmann::json::object();
    nlohmann::json counts = nlohmann::json::object();
    for (std::size_t c = 0; c < t.weights.size(); ++c) {
        weights[std::to_string(c)] = t.weights[c];
        counts[std::to_string(c)] = t.counts[c];
    }
    return {{"weights", weights},
            {"counts", counts},
            {"total_samples", t.total_samples},
            {"present_classes", t.n_classes},
            {"empty_classes", t.empty_classes}};
}

nlohmann::json to_json(const FoldPlan& plan) {
    nlohmann::json folds = nlohmann::json::array();
    for (std::size_t i = 0; i < plan.folds.size(); ++i) {
        const auto& f = plan.folds[i];
        folds.push_back({{"fold", i}, {"train", f.train}, {"val", f.val}, {"test", f.test}});
    }
    return {{"seed", plan.seed},    {"k", plan.k},         {"n_train", plan.n_train},
            {"n_val", plan.n_val},  {"n_test", plan.n_test}, {"folds", folds}};
}

FoldPlan fold_plan_from_json(const nlohmann::json& j) {
    FoldPlan plan;
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.k = j.at("k").get<int>();
    plan.n_train = j.at("n_train").get<int>();
    plan.n_val = j.at("n_val").get<int>();
    plan.n_test = j.at("n_test").get<int>();
    for (const auto& f : j.at("folds")) {
        plan.folds.push_back(FoldSplit{f.at("train").get<std::set<std::string>>(),
                                       f.at("val").get<std::set<std::string>>(),
                                       f.at("test").get<std::set<std::string>>()});
    }
    return plan;
}

}  // namespace painpipe::dataset
