#include "painpipe/nn/network.hpp"

#include <random>

#include "painpipe/error.hpp"

namespace painpipe::nn {

template <typename T>
Network<T>::Network(Shape input, std::vector<std::unique_ptr<Layer<T>>> layers)
    : input_{1, input.c, input.h, input.w}, layers_(std::move(layers)) {
    if (layers_.empty()) throw ValidationError("network needs at least one layer");
    (void)output_size();  // validates the layer chain against the input geometry
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& batch, Mode mode) {
    const Shape& s = batch.shape;
    if (s.n < 1 || s.c != input_.c || s.h != input_.h || s.w != input_.w || batch.data.size() != s.size()) {
        throw ShapeError("network input shape mismatch: expected (N, " + std::to_string(input_.c) + ", " +
                         std::to_string(input_.h) + ", " + std::to_string(input_.w) + "), got " + s.str());
    }
    Tensor<T> x = layers_.front()->forward(batch, mode);
    for (std::size_t i = 1; i < layers_.size(); ++i) x = layers_[i]->forward(x, mode);
    return x;
}

template <typename T>
Tensor<T> Network<T>::backward(const Tensor<T>& grad_logits) {
    Tensor<T> g = layers_.back()->backward(grad_logits);
    for (std::size_t i = layers_.size() - 1; i-- > 0;) g = layers_[i]->backward(g);
    return g;
}

template <typename T>
void Network<T>::init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto& l : layers_) l->init(rng);
}

template <typename T>
void Network<T>::zero_grad() {
    for (auto* p : trainable()) p->zero_grad();
}

template <typename T>
std::vector<Parameter<T>*> Network<T>::state() {
    std::vector<Parameter<T>*> all;
    for (auto& l : layers_) l->collect(all);
    return all;
}

template <typename T>
std::vector<Parameter<T>*> Network<T>::trainable() {
    std::vector<Parameter<T>*> out;
    for (auto* p : state()) {
        if (p->trainable) out.push_back(p);
    }
    return out;
}

template <typename T>
std::int64_t Network<T>::parameter_count() const {
    std::int64_t total = 0;
    std::vector<Parameter<T>*> all;
    for (const auto& l : layers_) l->collect(all);
    for (const auto* p : all) {
        if (p->trainable) total += static_cast<std::int64_t>(p->size());
    }
    return total;
}

template <typename T>
std::int64_t Network<T>::macs(int input_size) const {
    Shape s{1, input_.c, input_size, input_size};
    std::int64_t total = 0;
    for (const auto& l : layers_) {
        total += l->macs(s);
        s = l->output_shape(s);
    }
    return total;
}

template <typename T>
int Network<T>::output_size() const {
    Shape s = input_;
    for (const auto& l : layers_) s = l->output_shape(s);
    return static_cast<int>(s.per_sample());
}

template <typename T>
std::vector<std::vector<T>> Network<T>::snapshot() {
    std::vector<std::vector<T>> out;
    for (auto* p : state()) out.push_back(p->value);
    return out;
}

template <typename T>
void Network<T>::restore(const std::vector<std::vector<T>>& snapshot) {
    auto params = state();
    if (params.size() != snapshot.size()) throw ValidationError("snapshot does not match the network");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i]->value.size() != snapshot[i].size()) {
            throw ValidationError("snapshot tensor size mismatch for " + params[i]->name);
        }
        params[i]->value = snapshot[i];
    }
}

template class Network<float>;
template class Network<double>;

}  // namespace painpipe::nn
