#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace painpipe::nn {

/// NCHW extents. Dense layers use (n, features, 1, 1).
struct Shape {
    int n = 0;
    int c = 0;
    int h = 1;
    int w = 1;

    std::size_t size() const {
        return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) * static_cast<std::size_t>(h) *
               static_cast<std::size_t>(w);
    }
    std::size_t per_sample() const { return static_cast<std::size_t>(c) * h * w; }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

template <typename T>
struct Tensor {
    Shape shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(Shape s, T fill = T(0)) : shape(s), data(s.size(), fill) {}

    T* sample(int i) { return data.data() + static_cast<std::size_t>(i) * shape.per_sample(); }
    const T* sample(int i) const { return data.data() + static_cast<std::size_t>(i) * shape.per_sample(); }
};

/// A named learnable tensor or, when !trainable, a persistent buffer such as
/// batch-norm running statistics. Gradients are allocated on first use.
template <typename T>
struct Parameter {
    std::string name;
    std::vector<int> dims;
    std::vector<T> value;
    std::vector<T> grad;
    bool trainable = true;

    Parameter() = default;
    Parameter(std::string n, std::vector<int> d, bool train = true);

    std::size_t size() const { return value.size(); }
    T* grad_data();
    void zero_grad();
};

enum class Mode { train, eval };

}  // namespace painpipe::nn
