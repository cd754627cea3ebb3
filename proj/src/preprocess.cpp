#include "painpipe/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>
#include <opencv2/objdetect.hpp>

#include "painpipe/error.hpp"

namespace painpipe::preprocess {

DetectorKind parse_detector(const std::string& name) {
    if (name == "metadata") return DetectorKind::metadata;
    if (name == "cascade_frontal_then_profile") return DetectorKind::cascade_frontal_then_profile;
    if (name == "centered_heuristic") return DetectorKind::centered_heuristic;
    throw ValidationError("unknown face detector '" + name + "'");
}

std::string to_string(DetectorKind kind) {
    switch (kind) {
        case DetectorKind::metadata: return "metadata";
        case DetectorKind::cascade_frontal_then_profile: return "cascade_frontal_then_profile";
        case DetectorKind::centered_heuristic: return "centered_heuristic";
    }
    return "?";
}

void PreprocessConfig::validate() const {
    if (target_size < 1) throw ValidationError("preprocess.target_size must be positive");
    for (int c = 0; c < 3; ++c) {
        if (!(channel_std[c] > 0.0f)) throw ConfigError("preprocess.channel_std must be > 0 for every channel");
        if (!std::isfinite(channel_mean[c])) throw ConfigError("preprocess.channel_mean must be finite");
    }
    if (!(hflip_probability >= 0.0 && hflip_probability <= 1.0)) {
        throw ValidationError("preprocess.hflip_probability must lie in [0, 1]");
    }
}

struct CascadeDetector::Impl {
    cv::CascadeClassifier classifier;
};

CascadeDetector::CascadeDetector(const std::filesystem::path& model) : impl_(std::make_unique<Impl>()) {
    if (!impl_->classifier.load(model.string())) {
        throw IoError("cannot load cascade model " + model.string());
    }
}

CascadeDetector::~CascadeDetector() = default;

std::optional<BoundingBox> CascadeDetector::detect(const ImageTensor& image) {
    cv::Mat gray(image.height, image.width, CV_8UC1);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const float v = 0.299f * image.at(y, x, 0) + 0.587f * image.at(y, x, 1) + 0.114f * image.at(y, x, 2);
            gray.at<unsigned char>(y, x) = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255));
        }
    }
    cv::equalizeHist(gray, gray);
    std::vector<cv::Rect> faces;
    impl_->classifier.detectMultiScale(gray, faces);
    if (faces.empty()) return std::nullopt;
    const auto& best = *std::max_element(faces.begin(), faces.end(),
                                         [](const cv::Rect& a, const cv::Rect& b) { return a.area() < b.area(); });
    BoundingBox box{best.x, best.y, best.width, best.height};
    if (!box.within(image.width, image.height)) return std::nullopt;
    return box;
}

BoundingBox centered_box(int height, int width) {
    const int side = std::max(1, static_cast<int>(std::floor(0.8 * std::min(height, width))));
    return BoundingBox{(width - side) / 2, (height - side) / 2, side, side};
}

FaceLocator::FaceLocator(const PreprocessConfig& config) : kind_(config.detector) {
    if (kind_ == DetectorKind::cascade_frontal_then_profile) {
        if (config.frontal_cascade.empty()) {
            throw ConfigError("preprocess.frontal_cascade is required for the cascade detector");
        }
        frontal_ = std::make_unique<CascadeDetector>(config.frontal_cascade);
        if (!config.profile_cascade.empty()) profile_ = std::make_unique<CascadeDetector>(config.profile_cascade);
    }
}

FaceLocator::FaceLocator(DetectorKind kind, std::unique_ptr<FaceDetector> frontal,
                         std::unique_ptr<FaceDetector> profile)
    : kind_(kind), frontal_(std::move(frontal)), profile_(std::move(profile)) {}

BoundingBox FaceLocator::detect(const ImageTensor& image, const std::optional<BoundingBox>& metadata_box) {
    if (image.empty()) throw ValidationError("cannot detect a face in an empty image");
    switch (kind_) {
        case DetectorKind::metadata:
            if (metadata_box && metadata_box->within(image.width, image.height)) return *metadata_box;
            break;
        case DetectorKind::cascade_frontal_then_profile:
            if (frontal_) {
                if (auto box = frontal_->detect(image)) {
                    ++counters_.frontal;
                    return *box;
                }
            }
            if (profile_) {
                if (auto box = profile_->detect(image)) {
                    ++counters_.profile_fallbacks;
                    return *box;
                }
            }
            break;
        case DetectorKind::centered_heuristic:
            return centered_box(image.height, image.width);
    }
    ++counters_.heuristic_fallbacks;
    return centered_box(image.height, image.width);
}

BoundingBox detect_face(const ImageTensor& image, const PreprocessConfig& config,
                        const std::optional<BoundingBox>& metadata_box) {
    if (config.detector == DetectorKind::cascade_frontal_then_profile) {
        FaceLocator locator(config);
        return locator.detect(image, metadata_box);
    }
    FaceLocator locator(config.detector, nullptr, nullptr);
    return locator.detect(image, metadata_box);
}

ImageTensor crop_resize(const ImageTensor& image, const BoundingBox& box, int target_size) {
    if (box.w <= 0 || box.h <= 0) throw ValidationError("degenerate crop box");
    if (!box.within(image.width, image.height)) throw ValidationError("crop box lies outside the image");
    if (target_size < 1) throw ValidationError("target size must be positive");

    ImageTensor out(target_size, target_size);
    const double sy = static_cast<double>(box.h) / target_size;
    const double sx = static_cast<double>(box.w) / target_size;

    // Precompute horizontal taps.
    std::vector<int> x0(static_cast<std::size_t>(target_size));
    std::vector<int> x1(x0.size());
    std::vector<float> wx(x0.size());
    for (int j = 0; j < target_size; ++j) {
        const double src = std::clamp((j + 0.5) * sx - 0.5, 0.0, static_cast<double>(box.w - 1));
        const int lo = static_cast<int>(std::floor(src));
        x0[j] = box.x + lo;
        x1[j] = box.x + std::min(lo + 1, box.w - 1);
        wx[j] = static_cast<float>(src - lo);
    }
    for (int i = 0; i < target_size; ++i) {
        const double src = std::clamp((i + 0.5) * sy - 0.5, 0.0, static_cast<double>(box.h - 1));
        const int lo = static_cast<int>(std::floor(src));
        const int y0 = box.y + lo;
        const int y1 = box.y + std::min(lo + 1, box.h - 1);
        const float wy = static_cast<float>(src - lo);
        for (int j = 0; j < target_size; ++j) {
            for (int c = 0; c < 3; ++c) {
                const float top = image.at(y0, x0[j], c) + (image.at(y0, x1[j], c) - image.at(y0, x0[j], c)) * wx[j];
                const float bottom =
                    image.at(y1, x0[j], c) + (image.at(y1, x1[j], c) - image.at(y1, x0[j], c)) * wx[j];
                out.at(i, j, c) = top + (bottom - top) * wy;
            }
        }
    }
    return out;
}

void hflip_in_place(ImageTensor& image) {
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width / 2; ++x) {
            const int mirror = image.width - 1 - x;
            for (int c = 0; c < 3; ++c) std::swap(image.at(y, x, c), image.at(y, mirror, c));
        }
    }
}

ImageTensor augment(const ImageTensor& image, const PreprocessConfig& config, std::mt19937_64& rng) {
    ImageTensor out = image;
    if (config.hflip_probability <= 0.0) return out;
    std::bernoulli_distribution flip(config.hflip_probability);
    if (flip(rng)) hflip_in_place(out);
    return out;
}

ImageTensor normalize(const ImageTensor& image, const PreprocessConfig& config) {
    for (int c = 0; c < 3; ++c) {
        if (!(config.channel_std[c] > 0.0f)) throw ConfigError("channel_std must be > 0 for every channel");
    }
    ImageTensor out = image;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const auto c = i % 3;
        out.values[i] = (out.values[i] - config.channel_mean[c]) / config.channel_std[c];
    }
    return out;
}

ImageTensor denormalize(const ImageTensor& image, const PreprocessConfig& config) {
    ImageTensor out = image;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const auto c = i % 3;
        out.values[i] = out.values[i] * config.channel_std[c] + config.channel_mean[c];
    }
    return out;
}

ImageTensor prepare_frame(const ImageTensor& raw, const PreprocessConfig& config, FaceLocator& locator,
                          const std::optional<BoundingBox>& metadata_box) {
    const auto box = locator.detect(raw, metadata_box);
    return normalize(crop_resize(raw, box, config.target_size), config);
}

}  // namespace painpipe::preprocess
