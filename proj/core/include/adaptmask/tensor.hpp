#pragma once

#include <cassert>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace adaptmask {

/// Dense NCHW tensor of doubles. The single numeric container used for
/// images, activations and heatmap batches.
class Tensor {
public:
    Tensor() = default;
    Tensor(int n, int c, int h, int w)
        : n_(n), c_(c), h_(h), w_(w), data_(static_cast<size_t>(n) * c * h * w, 0.0) {
        if (n < 0 || c < 0 || h < 0 || w < 0)
            throw std::invalid_argument("Tensor: negative dimension");
    }

    int n() const { return n_; }
    int c() const { return c_; }
    int h() const { return h_; }
    int w() const { return w_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    bool same_shape(const Tensor& o) const {
        return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
    }

    double& operator()(int n, int c, int y, int x) {
        assert(n >= 0 && n < n_ && c >= 0 && c < c_ && y >= 0 && y < h_ && x >= 0 && x < w_);
        return data_[((static_cast<size_t>(n) * c_ + c) * h_ + y) * w_ + x];
    }
    double operator()(int n, int c, int y, int x) const {
        assert(n >= 0 && n < n_ && c >= 0 && c < c_ && y >= 0 && y < h_ && x >= 0 && x < w_);
        return data_[((static_cast<size_t>(n) * c_ + c) * h_ + y) * w_ + x];
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    /// View of sample n copied into a fresh 1xCxHxW tensor.
    Tensor slice(int n) const {
        Tensor out(1, c_, h_, w_);
        size_t stride = static_cast<size_t>(c_) * h_ * w_;
        std::copy(data_.begin() + n * stride, data_.begin() + (n + 1) * stride,
                  out.data_.begin());
        return out;
    }

    void set_slice(int n, const Tensor& src) {
        assert(src.n_ == 1 && src.c_ == c_ && src.h_ == h_ && src.w_ == w_);
        size_t stride = static_cast<size_t>(c_) * h_ * w_;
        std::copy(src.data_.begin(), src.data_.end(), data_.begin() + n * stride);
    }

private:
    int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
    std::vector<double> data_;
};

} // namespace adaptmask
