#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace painpipe {

/// Interleaved RGB image, row-major, values as float. Raw images carry
/// values in [0, 1]; normalized images carry arbitrary reals.
struct ImageTensor {
    int height = 0;
    int width = 0;
    static constexpr int channels = 3;
    std::vector<float> values;

    ImageTensor() = default;
    ImageTensor(int h, int w, float fill = 0.0f);

    bool empty() const { return height == 0 || width == 0; }
    float& at(int y, int x, int c) { return values[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    float at(int y, int x, int c) const {
        return values[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }

    bool operator==(const ImageTensor&) const = default;
};

struct BoundingBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    bool operator==(const BoundingBox&) const = default;
    bool within(int image_width, int image_height) const {
        return w > 0 && h > 0 && x >= 0 && y >= 0 && x + w <= image_width && y + h <= image_height;
    }
};

/// Loads a PNG (or anything OpenCV decodes) as RGB in [0, 1]. Throws IoError.
ImageTensor load_image(const std::filesystem::path& path);

/// Writes 8-bit RGB; values are clamped to [0, 1] and rounded.
void save_png(const ImageTensor& image, const std::filesystem::path& path);

/// Planar copy (C x H x W) for feeding a network.
void to_planar(const ImageTensor& image, float* chw);

}  // namespace painpipe
