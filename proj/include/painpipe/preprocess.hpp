#pragma once

// Frame preprocessing: face localisation, crop + bilinear resize, random
// horizontal flip and per-channel normalisation.

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>

#include "painpipe/image.hpp"

namespace painpipe::preprocess {

enum class DetectorKind { metadata, cascade_frontal_then_profile, centered_heuristic };

DetectorKind parse_detector(const std::string& name);
std::string to_string(DetectorKind kind);

struct PreprocessConfig {
    /// Network input side. Commonly quoted as 244 for pretrained backbones;
    /// 224 is the canonical size and the default here.
    int target_size = 224;
    std::array<float, 3> channel_mean{0.5f, 0.5f, 0.5f};
    std::array<float, 3> channel_std{0.5f, 0.5f, 0.5f};
    double hflip_probability = 0.5;
    DetectorKind detector = DetectorKind::metadata;
    std::filesystem::path frontal_cascade;  // only for cascade_frontal_then_profile
    std::filesystem::path profile_cascade;

    void validate() const;
};

/// A face detector stage. Returns nothing when no face is found.
class FaceDetector {
public:
    virtual ~FaceDetector() = default;
    virtual std::optional<BoundingBox> detect(const ImageTensor& image) = 0;
};

/// OpenCV cascade classifier loaded from an XML model file; reports the
/// largest detection.
class CascadeDetector : public FaceDetector {
public:
    explicit CascadeDetector(const std::filesystem::path& model);
    ~CascadeDetector() override;
    std::optional<BoundingBox> detect(const ImageTensor& image) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct DetectionCounters {
    std::atomic<std::size_t> frontal{0};
    std::atomic<std::size_t> profile_fallbacks{0};
    std::atomic<std::size_t> heuristic_fallbacks{0};
};

/// Centered square of side 0.8 * min(h, w).
BoundingBox centered_box(int height, int width);

/// Face localisation following the configured strategy. The profile stage is
/// consulted only when the frontal stage finds nothing; frames where every
/// stage fails keep the centered heuristic box and are counted.
class FaceLocator {
public:
    explicit FaceLocator(const PreprocessConfig& config);
    FaceLocator(DetectorKind kind, std::unique_ptr<FaceDetector> frontal, std::unique_ptr<FaceDetector> profile);

    BoundingBox detect(const ImageTensor& image, const std::optional<BoundingBox>& metadata_box);

    const DetectionCounters& counters() const { return counters_; }

private:
    DetectorKind kind_;
    std::unique_ptr<FaceDetector> frontal_;
    std::unique_ptr<FaceDetector> profile_;
    DetectionCounters counters_;
};

/// Free-function form for the metadata and heuristic strategies.
BoundingBox detect_face(const ImageTensor& image, const PreprocessConfig& config,
                        const std::optional<BoundingBox>& metadata_box);

/// Crops `box` and resamples it to target x target with bilinear
/// interpolation at pixel centres (aspect ratio is not preserved).
ImageTensor crop_resize(const ImageTensor& image, const BoundingBox& box, int target_size);

/// Mirrors columns with probability hflip_probability.
ImageTensor augment(const ImageTensor& image, const PreprocessConfig& config, std::mt19937_64& rng);

void hflip_in_place(ImageTensor& image);

ImageTensor normalize(const ImageTensor& image, const PreprocessConfig& config);
ImageTensor denormalize(const ImageTensor& image, const PreprocessConfig& config);

/// detect -> crop_resize -> normalize for one frame (no augmentation).
ImageTensor prepare_frame(const ImageTensor& raw, const PreprocessConfig& config, FaceLocator& locator,
                          const std::optional<BoundingBox>& metadata_box);

}  // namespace painpipe::preprocess
