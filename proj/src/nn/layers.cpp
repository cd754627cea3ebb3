#include "painpipe/nn/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "painpipe/error.hpp"

namespace painpipe::nn {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

void require(bool ok, const std::string& what) {
    if (!ok) throw ShapeError(what);
}

}  // namespace

std::string Shape::str() const {
    return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " + std::to_string(h) + ", " + std::to_string(w) +
           ")";
}

template <typename T>
Parameter<T>::Parameter(std::string n, std::vector<int> d, bool train)
    : name(std::move(n)), dims(std::move(d)), trainable(train) {
    std::size_t count = 1;
    for (int v : dims) count *= static_cast<std::size_t>(v);
    value.assign(count, T(0));
}

template <typename T>
T* Parameter<T>::grad_data() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    return grad.data();
}

template <typename T>
void Parameter<T>::zero_grad() {
    if (grad.size() != value.size()) {
        grad.assign(value.size(), T(0));
    } else {
        std::fill(grad.begin(), grad.end(), T(0));
    }
}

// ---------------------------------------------------------------------------
// Conv2d

template <typename T>
Conv2d<T>::Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int padding, bool bias)
    : name_(std::move(name)),
      in_(in_channels),
      out_(out_channels),
      k_(kernel),
      stride_(stride),
      pad_(padding),
      weight_(name_ + ".weight", {out_channels, in_channels, kernel, kernel}) {
    if (in_ < 1 || out_ < 1 || k_ < 1 || stride_ < 1 || pad_ < 0) {
        throw ValidationError("invalid convolution geometry for " + name_);
    }
    if (bias) bias_.emplace(name_ + ".bias", std::vector<int>{out_channels});
}

template <typename T>
Shape Conv2d<T>::output_shape(const Shape& in) const {
    require(in.c == in_, name_ + ": expected " + std::to_string(in_) + " input channels, got " + std::to_string(in.c));
    const int oh = (in.h + 2 * pad_ - k_) / stride_ + 1;
    const int ow = (in.w + 2 * pad_ - k_) / stride_ + 1;
    require(in.h + 2 * pad_ >= k_ && in.w + 2 * pad_ >= k_ && oh > 0 && ow > 0,
            name_ + ": input " + in.str() + " too small for kernel " + std::to_string(k_));
    return {in.n, out_, oh, ow};
}

template <typename T>
void Conv2d<T>::im2col(const T* x, const Shape& in, T* col) const {
    const Shape o = output_shape(in);
    const int plane = o.h * o.w;
    for (int c = 0; c < in_; ++c) {
        const T* xc = x + static_cast<std::size_t>(c) * in.h * in.w;
        for (int ki = 0; ki < k_; ++ki) {
            for (int kj = 0; kj < k_; ++kj) {
                T* row = col + static_cast<std::size_t>((c * k_ + ki) * k_ + kj) * plane;
                for (int oy = 0; oy < o.h; ++oy) {
                    const int iy = oy * stride_ - pad_ + ki;
                    T* dst = row + oy * o.w;
                    if (iy < 0 || iy >= in.h) {
                        std::fill(dst, dst + o.w, T(0));
                        continue;
                    }
                    const T* src = xc + static_cast<std::size_t>(iy) * in.w;
                    for (int ox = 0; ox < o.w; ++ox) {
                        const int ix = ox * stride_ - pad_ + kj;
                        dst[ox] = (ix >= 0 && ix < in.w) ? src[ix] : T(0);
                    }
                }
            }
        }
    }
}

template <typename T>
void Conv2d<T>::col2im(const T* col, const Shape& in, T* dx) const {
    const Shape o = output_shape(in);
    const int plane = o.h * o.w;
    for (int c = 0; c < in_; ++c) {
        T* dxc = dx + static_cast<std::size_t>(c) * in.h * in.w;
        for (int ki = 0; ki < k_; ++ki) {
            for (int kj = 0; kj < k_; ++kj) {
                const T* row = col + static_cast<std::size_t>((c * k_ + ki) * k_ + kj) * plane;
                for (int oy = 0; oy < o.h; ++oy) {
                    const int iy = oy * stride_ - pad_ + ki;
                    if (iy < 0 || iy >= in.h) continue;
                    T* dst = dxc + static_cast<std::size_t>(iy) * in.w;
                    const T* src = row + oy * o.w;
                    for (int ox = 0; ox < o.w; ++ox) {
                        const int ix = ox * stride_ - pad_ + kj;
                        if (ix >= 0 && ix < in.w) dst[ix] += src[ox];
                    }
                }
            }
        }
    }
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x, Mode mode) {
    const Shape o = output_shape(x.shape);
    Tensor<T> y(o);
    const int ckk = in_ * k_ * k_;
    const int plane = o.h * o.w;
    ConstMatMap<T> w(weight_.value.data(), out_, ckk);
    if (!pointwise()) col_.resize(static_cast<std::size_t>(ckk) * plane);
    for (int n = 0; n < x.shape.n; ++n) {
        const T* col = x.sample(n);
        if (!pointwise()) {
            im2col(x.sample(n), x.shape, col_.data());
            col = col_.data();
        }
        MatMap<T> out(y.sample(n), out_, plane);
        out.noalias() = w * ConstMatMap<T>(col, ckk, plane);
        if (bias_) {
            for (int c = 0; c < out_; ++c) out.row(c).array() += bias_->value[static_cast<std::size_t>(c)];
        }
    }
    if (mode == Mode::train) {
        input_ = x;
    } else {
        input_ = Tensor<T>();
    }
    return y;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& grad_out) {
    require(!input_.data.empty(), name_ + ": backward without a training-mode forward");
    const Shape in = input_.shape;
    const Shape o = output_shape(in);
    require(grad_out.shape == o, name_ + ": gradient shape " + grad_out.shape.str() + " != " + o.str());
    const int ckk = in_ * k_ * k_;
    const int plane = o.h * o.w;
    ConstMatMap<T> w(weight_.value.data(), out_, ckk);
    MatMap<T> dw(weight_.grad_data(), out_, ckk);
    Tensor<T> dx(in);
    std::vector<T> dcol(pointwise() ? 0 : static_cast<std::size_t>(ckk) * plane);
    if (!pointwise()) col_.resize(static_cast<std::size_t>(ckk) * plane);
    for (int n = 0; n < in.n; ++n) {
        ConstMatMap<T> dy(grad_out.sample(n), out_, plane);
        const T* col = input_.sample(n);
        if (!pointwise()) {
            im2col(input_.sample(n), in, col_.data());
            col = col_.data();
        }
        dw.noalias() += dy * ConstMatMap<T>(col, ckk, plane).transpose();
        if (bias_) {
            T* db = bias_->grad_data();
            for (int c = 0; c < out_; ++c) db[c] += dy.row(c).sum();
        }
        if (pointwise()) {
            MatMap<T>(dx.sample(n), ckk, plane).noalias() = w.transpose() * dy;
        } else {
            MatMap<T>(dcol.data(), ckk, plane).noalias() = w.transpose() * dy;
            col2im(dcol.data(), in, dx.sample(n));
        }
    }
    return dx;
}

template <typename T>
void Conv2d<T>::collect(std::vector<Parameter<T>*>& out) {
    out.push_back(&weight_);
    if (bias_) out.push_back(&*bias_);
}

template <typename T>
std::int64_t Conv2d<T>::macs(const Shape& in) const {
    const Shape o = output_shape(in);
    return static_cast<std::int64_t>(o.h) * o.w * out_ * (static_cast<std::int64_t>(k_) * k_ * in_);
}

template <typename T>
void Conv2d<T>::init(std::mt19937_64& rng) {
    const double fan_in = static_cast<double>(in_) * k_ * k_;
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
    for (auto& v : weight_.value) v = static_cast<T>(normal(rng));
    if (bias_) std::fill(bias_->value.begin(), bias_->value.end(), T(0));
}

// ---------------------------------------------------------------------------
// BatchNorm2d

template <typename T>
BatchNorm2d<T>::BatchNorm2d(std::string name, int channels, double momentum, double eps)
    : name_(std::move(name)),
      channels_(channels),
      momentum_(momentum),
      eps_(eps),
      gamma_(name_ + ".weight", {channels}),
      beta_(name_ + ".bias", {channels}),
      running_mean_(name_ + ".running_mean", {channels}, false),
      running_var_(name_ + ".running_var", {channels}, false) {
    std::fill(gamma_.value.begin(), gamma_.value.end(), T(1));
    std::fill(running_var_.value.begin(), running_var_.value.end(), T(1));
}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& x, Mode mode) {
    require(x.shape.c == channels_, name_ + ": expected " + std::to_string(channels_) + " channels, got " +
                                        std::to_string(x.shape.c));
    const Shape s = x.shape;
    const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
    const std::size_t count = plane * s.n;
    Tensor<T> y(s);
    cached_mode_ = mode;
    inv_std_.assign(static_cast<std::size_t>(channels_), 0.0);
    if (mode == Mode::train) xhat_ = Tensor<T>(s);

    for (int c = 0; c < channels_; ++c) {
        double mean = 0.0;
        double var = 0.0;
        if (mode == Mode::train) {
            for (int n = 0; n < s.n; ++n) {
                const T* p = x.sample(n) + c * plane;
                for (std::size_t i = 0; i < plane; ++i) mean += p[i];
            }
            mean /= static_cast<double>(count);
            for (int n = 0; n < s.n; ++n) {
                const T* p = x.sample(n) + c * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    const double d = p[i] - mean;
                    var += d * d;
                }
            }
            var /= static_cast<double>(count);
            const double unbiased = count > 1 ? var * static_cast<double>(count) / static_cast<double>(count - 1) : var;
            auto& rm = running_mean_.value[static_cast<std::size_t>(c)];
            auto& rv = running_var_.value[static_cast<std::size_t>(c)];
            rm = static_cast<T>((1.0 - momentum_) * rm + momentum_ * mean);
            rv = static_cast<T>((1.0 - momentum_) * rv + momentum_ * unbiased);
        } else {
            mean = running_mean_.value[static_cast<std::size_t>(c)];
            var = running_var_.value[static_cast<std::size_t>(c)];
        }
        const double inv_std = 1.0 / std::sqrt(var + eps_);
        inv_std_[static_cast<std::size_t>(c)] = inv_std;
        const double g = gamma_.value[static_cast<std::size_t>(c)];
        const double b = beta_.value[static_cast<std::size_t>(c)];
        for (int n = 0; n < s.n; ++n) {
            const T* p = x.sample(n) + c * plane;
            T* q = y.sample(n) + c * plane;
            T* h = mode == Mode::train ? xhat_.sample(n) + c * plane : nullptr;
            for (std::size_t i = 0; i < plane; ++i) {
                const double xh = (p[i] - mean) * inv_std;
                if (h) h[i] = static_cast<T>(xh);
                q[i] = static_cast<T>(g * xh + b);
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::backward(const Tensor<T>& grad_out) {
    require(cached_mode_ == Mode::train && grad_out.shape == xhat_.shape,
            name_ + ": backward without a matching training-mode forward");
    const Shape s = grad_out.shape;
    const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
    const double count = static_cast<double>(plane * s.n);
    Tensor<T> dx(s);
    T* dgamma = gamma_.grad_data();
    T* dbeta = beta_.grad_data();
    for (int c = 0; c < channels_; ++c) {
        double sum_dy = 0.0;
        double sum_dy_xhat = 0.0;
        for (int n = 0; n < s.n; ++n) {
            const T* dy = grad_out.sample(n) + c * plane;
            const T* xh = xhat_.sample(n) + c * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                sum_dy += dy[i];
                sum_dy_xhat += static_cast<double>(dy[i]) * xh[i];
            }
        }
        dgamma[c] += static_cast<T>(sum_dy_xhat);
        dbeta[c] += static_cast<T>(sum_dy);
        const double g = gamma_.value[static_cast<std::size_t>(c)];
        const double scale = g * inv_std_[static_cast<std::size_t>(c)] / count;
        for (int n = 0; n < s.n; ++n) {
            const T* dy = grad_out.sample(n) + c * plane;
            const T* xh = xhat_.sample(n) + c * plane;
            T* d = dx.sample(n) + c * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                d[i] = static_cast<T>(scale * (count * dy[i] - sum_dy - xh[i] * sum_dy_xhat));
            }
        }
    }
    return dx;
}

template <typename T>
void BatchNorm2d<T>::collect(std::vector<Parameter<T>*>& out) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
    out.push_back(&running_mean_);
    out.push_back(&running_var_);
}

template <typename T>
void BatchNorm2d<T>::init(std::mt19937_64&) {
    std::fill(gamma_.value.begin(), gamma_.value.end(), T(1));
    std::fill(beta_.value.begin(), beta_.value.end(), T(0));
    std::fill(running_mean_.value.begin(), running_mean_.value.end(), T(0));
    std::fill(running_var_.value.begin(), running_var_.value.end(), T(1));
}

// ---------------------------------------------------------------------------
// ReLU, pooling, flatten

template <typename T>
Tensor<T> ReLU<T>::forward(const Tensor<T>& x, Mode mode) {
    Tensor<T> y(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
    if (mode == Mode::train) output_ = y;
    return y;
}

template <typename T>
Tensor<T> ReLU<T>::backward(const Tensor<T>& grad_out) {
    require(grad_out.shape == output_.shape, "relu: backward without a matching forward");
    Tensor<T> dx(grad_out.shape);
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] = output_.data[i] > T(0) ? grad_out.data[i] : T(0);
    return dx;
}

template <typename T>
MaxPool2d<T>::MaxPool2d(int kernel, int stride, int padding) : k_(kernel), stride_(stride), pad_(padding) {
    if (k_ < 1 || stride_ < 1 || pad_ < 0 || pad_ * 2 > k_) throw ValidationError("invalid max-pool geometry");
}

template <typename T>
Shape MaxPool2d<T>::output_shape(const Shape& in) const {
    const int oh = (in.h + 2 * pad_ - k_) / stride_ + 1;
    const int ow = (in.w + 2 * pad_ - k_) / stride_ + 1;
    require(in.h + 2 * pad_ >= k_ && in.w + 2 * pad_ >= k_ && oh > 0 && ow > 0,
            "maxpool2d: input " + in.str() + " too small for kernel " + std::to_string(k_));
    return {in.n, in.c, oh, ow};
}

template <typename T>
Tensor<T> MaxPool2d<T>::forward(const Tensor<T>& x, Mode mode) {
    const Shape o = output_shape(x.shape);
    Tensor<T> y(o);
    const bool keep = mode == Mode::train;
    if (keep) argmax_.assign(o.size(), 0);
    in_shape_ = x.shape;
    std::size_t out_i = 0;
    for (int n = 0; n < o.n; ++n) {
        for (int c = 0; c < o.c; ++c) {
            const std::size_t base = (static_cast<std::size_t>(n) * x.shape.c + c) * x.shape.h * x.shape.w;
            for (int oy = 0; oy < o.h; ++oy) {
                for (int ox = 0; ox < o.w; ++ox, ++out_i) {
                    T best = -std::numeric_limits<T>::infinity();
                    std::size_t best_i = base;
                    for (int ki = 0; ki < k_; ++ki) {
                        const int iy = oy * stride_ - pad_ + ki;
                        if (iy < 0 || iy >= x.shape.h) continue;
                        for (int kj = 0; kj < k_; ++kj) {
                            const int ix = ox * stride_ - pad_ + kj;
                            if (ix < 0 || ix >= x.shape.w) continue;
                            const std::size_t idx = base + static_cast<std::size_t>(iy) * x.shape.w + ix;
                            if (x.data[idx] > best) {
                                best = x.data[idx];
                                best_i = idx;
                            }
                        }
                    }
                    y.data[out_i] = best;
                    if (keep) argmax_[out_i] = best_i;
                }
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> MaxPool2d<T>::backward(const Tensor<T>& grad_out) {
    require(grad_out.data.size() == argmax_.size(), "maxpool2d: backward without a matching forward");
    Tensor<T> dx(in_shape_);
    for (std::size_t i = 0; i < argmax_.size(); ++i) dx.data[argmax_[i]] += grad_out.data[i];
    return dx;
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::forward(const Tensor<T>& x, Mode) {
    in_shape_ = x.shape;
    Tensor<T> y(output_shape(x.shape));
    const std::size_t plane = static_cast<std::size_t>(x.shape.h) * x.shape.w;
    for (std::size_t i = 0; i < y.data.size(); ++i) {
        double sum = 0.0;
        const T* p = x.data.data() + i * plane;
        for (std::size_t j = 0; j < plane; ++j) sum += p[j];
        y.data[i] = static_cast<T>(sum / static_cast<double>(plane));
    }
    return y;
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::backward(const Tensor<T>& grad_out) {
    Tensor<T> dx(in_shape_);
    const std::size_t plane = static_cast<std::size_t>(in_shape_.h) * in_shape_.w;
    require(grad_out.data.size() * plane == dx.data.size(), "global_avg_pool: backward without a matching forward");
    const T scale = T(1) / static_cast<T>(plane);
    for (std::size_t i = 0; i < grad_out.data.size(); ++i) {
        std::fill_n(dx.data.data() + i * plane, plane, grad_out.data[i] * scale);
    }
    return dx;
}

template <typename T>
Tensor<T> Flatten<T>::forward(const Tensor<T>& x, Mode) {
    in_shape_ = x.shape;
    Tensor<T> y;
    y.shape = output_shape(x.shape);
    y.data = x.data;
    return y;
}

template <typename T>
Tensor<T> Flatten<T>::backward(const Tensor<T>& grad_out) {
    Tensor<T> dx;
    dx.shape = in_shape_;
    dx.data = grad_out.data;
    return dx;
}

// ---------------------------------------------------------------------------
// Linear

template <typename T>
Linear<T>::Linear(std::string name, int in_features, int out_features)
    : name_(std::move(name)),
      in_(in_features),
      out_(out_features),
      weight_(name_ + ".weight", {out_features, in_features}),
      bias_(name_ + ".bias", {out_features}) {
    if (in_ < 1 || out_ < 1) throw ValidationError("invalid linear layer size for " + name_);
}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x, Mode mode) {
    require(x.shape.per_sample() == static_cast<std::size_t>(in_),
            name_ + ": expected " + std::to_string(in_) + " features, got " + std::to_string(x.shape.per_sample()));
    Tensor<T> y({x.shape.n, out_, 1, 1});
    MatMap<T> out(y.data.data(), x.shape.n, out_);
    out.noalias() = ConstMatMap<T>(x.data.data(), x.shape.n, in_) *
                    ConstMatMap<T>(weight_.value.data(), out_, in_).transpose();
    for (int n = 0; n < x.shape.n; ++n) {
        for (int o = 0; o < out_; ++o) out(n, o) += bias_.value[static_cast<std::size_t>(o)];
    }
    if (mode == Mode::train) {
        input_ = x;
    } else {
        input_ = Tensor<T>();
    }
    return y;
}

template <typename T>
Tensor<T> Linear<T>::backward(const Tensor<T>& grad_out) {
    require(!input_.data.empty() && grad_out.shape.n == input_.shape.n,
            name_ + ": backward without a training-mode forward");
    const int n = grad_out.shape.n;
    ConstMatMap<T> dy(grad_out.data.data(), n, out_);
    ConstMatMap<T> x(input_.data.data(), n, in_);
    MatMap<T>(weight_.grad_data(), out_, in_).noalias() += dy.transpose() * x;
    T* db = bias_.grad_data();
    for (int o = 0; o < out_; ++o) db[o] += dy.col(o).sum();
    Tensor<T> dx(input_.shape);
    MatMap<T>(dx.data.data(), n, in_).noalias() = dy * ConstMatMap<T>(weight_.value.data(), out_, in_);
    return dx;
}

template <typename T>
void Linear<T>::collect(std::vector<Parameter<T>*>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
}

template <typename T>
std::int64_t Linear<T>::macs(const Shape&) const {
    return static_cast<std::int64_t>(in_) * out_;
}

template <typename T>
void Linear<T>::init(std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (auto& v : weight_.value) v = static_cast<T>(u(rng));
    for (auto& v : bias_.value) v = static_cast<T>(u(rng));
}

// ---------------------------------------------------------------------------
// BasicBlock

template <typename T>
BasicBlock<T>::BasicBlock(std::string name, int in_channels, int out_channels, int stride)
    : name_(std::move(name)),
      conv1_(name_ + ".conv1", in_channels, out_channels, 3, stride, 1, false),
      bn1_(name_ + ".bn1", out_channels),
      conv2_(name_ + ".conv2", out_channels, out_channels, 3, 1, 1, false),
      bn2_(name_ + ".bn2", out_channels) {
    if (stride != 1 || in_channels != out_channels) {
        down_conv_.emplace(name_ + ".downsample.0", in_channels, out_channels, 1, stride, 0, false);
        down_bn_.emplace(name_ + ".downsample.1", out_channels);
    }
}

template <typename T>
Shape BasicBlock<T>::output_shape(const Shape& in) const {
    return conv2_.output_shape(conv1_.output_shape(in));
}

template <typename T>
Tensor<T> BasicBlock<T>::forward(const Tensor<T>& x, Mode mode) {
    Tensor<T> h = bn2_.forward(conv2_.forward(relu1_.forward(bn1_.forward(conv1_.forward(x, mode), mode), mode), mode),
                               mode);
    if (down_conv_) {
        const Tensor<T> s = down_bn_->forward(down_conv_->forward(x, mode), mode);
        for (std::size_t i = 0; i < h.data.size(); ++i) h.data[i] += s.data[i];
    } else {
        require(h.shape == x.shape, name_ + ": identity shortcut shape mismatch");
        for (std::size_t i = 0; i < h.data.size(); ++i) h.data[i] += x.data[i];
    }
    for (auto& v : h.data) v = v > T(0) ? v : T(0);
    if (mode == Mode::train) output_ = h;
    return h;
}

template <typename T>
Tensor<T> BasicBlock<T>::backward(const Tensor<T>& grad_out) {
    require(grad_out.shape == output_.shape, name_ + ": backward without a matching forward");
    Tensor<T> dsum(grad_out.shape);
    for (std::size_t i = 0; i < dsum.data.size(); ++i) {
        dsum.data[i] = output_.data[i] > T(0) ? grad_out.data[i] : T(0);
    }
    Tensor<T> dx = conv1_.backward(bn1_.backward(relu1_.backward(conv2_.backward(bn2_.backward(dsum)))));
    if (down_conv_) {
        const Tensor<T> ds = down_conv_->backward(down_bn_->backward(dsum));
        for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += ds.data[i];
    } else {
        for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += dsum.data[i];
    }
    return dx;
}

template <typename T>
void BasicBlock<T>::collect(std::vector<Parameter<T>*>& out) {
    conv1_.collect(out);
    bn1_.collect(out);
    conv2_.collect(out);
    bn2_.collect(out);
    if (down_conv_) {
        down_conv_->collect(out);
        down_bn_->collect(out);
    }
}

template <typename T>
std::int64_t BasicBlock<T>::macs(const Shape& in) const {
    const Shape mid = conv1_.output_shape(in);
    std::int64_t total = conv1_.macs(in) + conv2_.macs(mid);
    if (down_conv_) total += down_conv_->macs(in);
    return total;
}

template <typename T>
void BasicBlock<T>::init(std::mt19937_64& rng) {
    conv1_.init(rng);
    bn1_.init(rng);
    conv2_.init(rng);
    bn2_.init(rng);
    if (down_conv_) {
        down_conv_->init(rng);
        down_bn_->init(rng);
    }
}

template <typename T>
void BasicBlock<T>::zero_residual_branch() {
    for (auto* p : {&conv1_.weight(), &conv2_.weight(), &bn1_.gamma(), &bn1_.beta(), &bn2_.gamma(), &bn2_.beta()}) {
        std::fill(p->value.begin(), p->value.end(), T(0));
    }
}

#define PAINPIPE_INSTANTIATE_LAYERS(T) \
    template struct Parameter<T>;      \
    template class Conv2d<T>;          \
    template class BatchNorm2d<T>;     \
    template class ReLU<T>;            \
    template class MaxPool2d<T>;       \
    template class GlobalAvgPool<T>;   \
    template class Flatten<T>;         \
    template class Linear<T>;          \
    template class BasicBlock<T>;

PAINPIPE_INSTANTIATE_LAYERS(float)
PAINPIPE_INSTANTIATE_LAYERS(double)

}  // namespace painpipe::nn
