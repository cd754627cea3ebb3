#pragma once

#include <vector>

#include "painpipe/dataset.hpp"
#include "painpipe/preprocess.hpp"

namespace painpipe::preprocess {

/// Every frame of an index loaded, face-cropped, resized and normalized once.
/// Augmentation is applied later, per batch.
class SampleBank {
public:
    SampleBank(const dataset::DatasetIndex& index, const PreprocessConfig& config, FaceLocator& locator);
    SampleBank(const dataset::DatasetIndex& index, const PreprocessConfig& config);

    const ImageTensor& frame(std::size_t record) const { return frames_.at(record); }
    std::size_t size() const { return frames_.size(); }
    int image_size() const { return config_.target_size; }
    const PreprocessConfig& config() const { return config_; }

private:
    PreprocessConfig config_;
    std::vector<ImageTensor> frames_;
};

}  // namespace painpipe::preprocess
