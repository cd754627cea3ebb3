#include "painpipe/samples.hpp"

namespace painpipe::preprocess {

SampleBank::SampleBank(const dataset::DatasetIndex& index, const PreprocessConfig& config, FaceLocator& locator)
    : config_(config) {
    config_.validate();
    frames_.reserve(index.size());
    for (const auto& r : index.records()) {
        frames_.push_back(prepare_frame(load_image(r.image_path), config_, locator, r.face_box));
    }
}

SampleBank::SampleBank(const dataset::DatasetIndex& index, const PreprocessConfig& config)
    : config_(config) {
    config_.validate();
    FaceLocator locator(config_);
    frames_.reserve(index.size());
    for (const auto& r : index.records()) {
        frames_.push_back(prepare_frame(load_image(r.image_path), config_, locator, r.face_box));
    }
}

}  // namespace painpipe::preprocess
