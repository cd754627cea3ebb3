#pragma once

// Frame-level dataset index: ingestion of the UNBC-style directory layout,
// class-balance analysis, inverse-frequency loss weights, resampling and
// subject-disjoint cross-validation plans.

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "painpipe/facs.hpp"
#include "painpipe/image.hpp"

namespace painpipe::dataset {

enum class Layout { unbc_like, synthetic };

Layout parse_layout(const std::string& name);
std::string to_string(Layout layout);

struct FrameRecord {
    std::string subject_id;
    std::string sequence_id;
    int frame_index = 0;
    std::string frame_name;  // image file stem
    std::filesystem::path image_path;
    facs::ActionUnitVector au;
    facs::PainScore pspi;
    facs::PainClass pain_class;
    std::optional<BoundingBox> face_box;  // from the synthetic sidecar, when present
};

/// Immutable, ordered collection of frames. Ingested indices are sorted by
/// (subject, sequence, frame) and have unique keys; resampled indices are
/// multisets that may repeat a key.
class DatasetIndex {
public:
    DatasetIndex(std::vector<FrameRecord> records, int n_classes);

    const std::vector<FrameRecord>& records() const { return records_; }
    const std::set<std::string>& subjects() const { return subjects_; }
    int n_classes() const { return n_classes_; }
    std::size_t size() const { return records_.size(); }
    const FrameRecord& operator[](std::size_t i) const { return records_[i]; }

    /// Indices of records whose subject is in `subjects`, in index order.
    std::vector<std::size_t> indices_for(const std::set<std::string>& subjects) const;

    /// Same frames, class labels recomputed for a different class count.
    DatasetIndex with_class_count(int n_classes) const;

    bool has_unique_keys() const;

private:
    std::vector<FrameRecord> records_;
    std::set<std::string> subjects_;
    int n_classes_;
};

struct IngestWarnings {
    std::size_t missing_au_files = 0;
    std::size_t missing_face_boxes = 0;
    std::vector<std::string> skipped;  // first few skipped image paths

    bool empty() const { return missing_au_files == 0 && missing_face_boxes == 0; }
};

struct IngestResult {
    DatasetIndex index;
    IngestWarnings warnings;
};

inline constexpr const char* kFaceBoxSidecar = "face_boxes.csv";

/// Reads Images/<subject>/<sequence>/<frame>.png with AU labels from
/// Frame_Labels/FACS/<subject>/<sequence>/<frame>_facs.txt. Images without a
/// label file are skipped and counted. The synthetic layout additionally
/// requires face_boxes.csv at the root.
IngestResult ingest(const std::filesystem::path& root, Layout layout,
                    int n_classes = facs::kDefaultClassCount);

/// Parses one "<au_code> <intensity>" per line; absent units stay 0 and codes
/// outside the six PSPI units are ignored. Throws IngestError citing file and line.
facs::ActionUnitVector parse_au_file(const std::filesystem::path& path);

/// Path of the AU label file that belongs to an image under `root`.
std::filesystem::path au_file_for(const std::filesystem::path& root, const std::string& subject,
                                  const std::string& sequence, const std::string& frame_name);
std::filesystem::path image_file_for(const std::filesystem::path& root, const std::string& subject,
                                     const std::string& sequence, const std::string& frame_name);

/// Class index -> frame count; only classes that occur appear.
std::map<int, std::size_t> class_histogram(const DatasetIndex& index);

/// Inverse-frequency weights w_c = (1 / n_c) * (N / C), where C counts the
/// classes that actually occur. Classes without samples get weight 0 and are
/// listed in `empty_classes`.
struct ClassWeightTable {
    std::vector<double> weights;       // one entry per configured class
    std::vector<std::size_t> counts;   // n_c per configured class
    std::size_t total_samples = 0;     // N
    int n_classes = 0;                 // C (classes with n_c > 0)
    std::vector<int> empty_classes;

    double weight(int c) const { return weights.at(static_cast<std::size_t>(c)); }
    static ClassWeightTable uniform(int n_classes);
};

ClassWeightTable compute_class_weights(std::span<const std::size_t> counts);
ClassWeightTable compute_class_weights(const DatasetIndex& index);
ClassWeightTable compute_class_weights(const DatasetIndex& index, std::span<const std::size_t> subset);

enum class ResampleStrategy { oversample_minority, undersample_majority };

ResampleStrategy parse_resample_strategy(const std::string& name);
std::string to_string(ResampleStrategy strategy);

/// Oversampling draws minority-class copies with replacement until every
/// present class matches the majority count; undersampling draws each class
/// down to the minority count without replacement. Output is sorted by key.
DatasetIndex resample(const DatasetIndex& index, ResampleStrategy strategy, std::uint64_t seed);
/// Same draw over positions `subset` of `index`; returns sorted positions.
std::vector<std::size_t> resample_indices(const DatasetIndex& index, std::span<const std::size_t> subset,
                                          ResampleStrategy strategy, std::uint64_t seed);

struct FoldSplit {
    std::set<std::string> train;
    std::set<std::string> val;
    std::set<std::string> test;
};

struct FoldPlan {
    std::vector<FoldSplit> folds;
    std::uint64_t seed = 0;
    int k = 0;
    int n_train = 0;
    int n_val = 0;
    int n_test = 0;
};

/// Shuffles the subjects (seeded) into k test blocks of n_test subjects. Fold
/// i tests on block i, validates on block (i + 1) mod k and trains on the rest.
/// When n_val is not a multiple of n_test the validation subjects are taken
/// from the blocks following block i, in order.
FoldPlan make_fold_plan(const std::set<std::string>& subjects, int k, int n_train, int n_val,
                        int n_test, std::uint64_t seed);

/// Throws ValidationError describing the first violated invariant.
void check_fold_plan(const FoldPlan& plan, const std::set<std::string>& subjects);

/// Synthetic subject names S01, S02, ... for plans built from a bare count.
std::set<std::string> numbered_subjects(int count);

nlohmann::json to_json(const IngestWarnings& warnings);
nlohmann::json histogram_json(const std::map<int, std::size_t>& histogram);
nlohmann::json to_json(const ClassWeightTable& table);
nlohmann::json to_json(const FoldPlan& plan);
FoldPlan fold_plan_from_json(const nlohmann::json& j);

}  // namespace painpipe::dataset
