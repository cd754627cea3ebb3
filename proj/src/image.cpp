#include "painpipe/image.hpp"

#include <algorithm>
#include <cmath>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "painpipe/error.hpp"

namespace painpipe {

ImageTensor::ImageTensor(int h, int w, float fill)
    : height(h), width(w), values(static_cast<std::size_t>(h) * w * 3, fill) {}

ImageTensor load_image(const std::filesystem::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw IoError("cannot decode image " + path.string());
    ImageTensor img(bgr.rows, bgr.cols);
    for (int y = 0; y < bgr.rows; ++y) {
        const auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            img.at(y, x, 0) = row[x][2] / 255.0f;
            img.at(y, x, 1) = row[x][1] / 255.0f;
            img.at(y, x, 2) = row[x][0] / 255.0f;
        }
    }
    return img;
}

void save_png(const ImageTensor& image, const std::filesystem::path& path) {
    cv::Mat bgr(image.height, image.width, CV_8UC3);
    auto to_byte = [](float v) {
        return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
    };
    for (int y = 0; y < image.height; ++y) {
        auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < image.width; ++x) {
            row[x] = cv::Vec3b(to_byte(image.at(y, x, 2)), to_byte(image.at(y, x, 1)),
                               to_byte(image.at(y, x, 0)));
        }
    }
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), bgr);
    } catch (const cv::Exception& e) {
        throw IoError("cannot write " + path.string() + ": " + e.what());
    }
    if (!ok) throw IoError("cannot write " + path.string());
}

void to_planar(const ImageTensor& image, float* chw) {
    const std::size_t plane = static_cast<std::size_t>(image.height) * image.width;
    for (std::size_t i = 0; i < plane; ++i) {
        for (int c = 0; c < 3; ++c) chw[c * plane + i] = image.values[i * 3 + c];
    }
}

}  // namespace painpipe
