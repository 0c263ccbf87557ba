#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rednet/errors.hpp"

namespace rednet {

// Dense 4-D array in (batch, channel, height, width) order, row-major with
// width fastest. One value type serves activations, kernels and gradients:
// float for training/inference, double for finite-difference work.
template <typename T>
class Tensor4 {
public:
    Tensor4() = default;

    Tensor4(int n, int c, int h, int w, T fill = T(0)) : n_(n), c_(c), h_(h), w_(w) {
        if (n < 1 || c < 1 || h < 1 || w < 1) {
            throw ShapeError("tensor dims must all be >= 1, got " + dims_string(n, c, h, w));
        }
        data_.assign(static_cast<std::size_t>(n) * c * h * w, fill);
    }

    static Tensor4 from_data(int n, int c, int h, int w, std::span<const T> values) {
        Tensor4 t(n, c, h, w);
        if (values.size() != t.size()) {
            throw ShapeError("tensor " + dims_string(n, c, h, w) + " needs " +
                             std::to_string(t.size()) + " values, got " +
                             std::to_string(values.size()));
        }
        std::copy(values.begin(), values.end(), t.data_.begin());
        return t;
    }

    int n() const { return n_; }
    int c() const { return c_; }
    int h() const { return h_; }
    int w() const { return w_; }
    bool empty() const { return data_.empty(); }
    std::size_t size() const { return data_.size(); }

    std::size_t flat_index(int in, int ic, int iy, int ix) const {
        return ((static_cast<std::size_t>(in) * c_ + ic) * h_ + iy) * w_ + ix;
    }

    T& at(int in, int ic, int iy, int ix) { return data_[flat_index(in, ic, iy, ix)]; }
    const T& at(int in, int ic, int iy, int ix) const { return data_[flat_index(in, ic, iy, ix)]; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::span<T> values() { return {data_.data(), data_.size()}; }
    std::span<const T> values() const { return {data_.data(), data_.size()}; }

    // Pointer to the (batch, channel) plane of h*w contiguous values.
    T* plane(int in, int ic) { return data_.data() + flat_index(in, ic, 0, 0); }
    const T* plane(int in, int ic) const { return data_.data() + flat_index(in, ic, 0, 0); }

    std::string shape_string() const { return dims_string(n_, c_, h_, w_); }

    static std::string dims_string(int n, int c, int h, int w) {
        return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " +
               std::to_string(h) + ", " + std::to_string(w) + ")";
    }

private:
    int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
    std::vector<T> data_;
};

template <typename T>
bool same_shape(const Tensor4<T>& a, const Tensor4<T>& b) {
    return a.n() == b.n() && a.c() == b.c() && a.h() == b.h() && a.w() == b.w();
}

template <typename T>
void require_same_shape(const Tensor4<T>& a, const Tensor4<T>& b, const char* what) {
    if (!same_shape(a, b)) {
        throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_string() +
                         " vs " + b.shape_string());
    }
}

// a += b, elementwise.
template <typename T>
void add_inplace(Tensor4<T>& a, const Tensor4<T>& b) {
    require_same_shape(a, b, "add");
    T* pa = a.data();
    const T* pb = b.data();
    const std::size_t total = a.size();
    for (std::size_t i = 0; i < total; ++i) pa[i] += pb[i];
}

template <typename T>
Tensor4<T> add(const Tensor4<T>& a, const Tensor4<T>& b) {
    Tensor4<T> out = a;
    add_inplace(out, b);
    return out;
}

// Inner product, accumulated left to right in double.
template <typename T>
double dot(const Tensor4<T>& a, const Tensor4<T>& b) {
    require_same_shape(a, b, "dot");
    const T* pa = a.data();
    const T* pb = b.data();
    double acc = 0.0;
    const std::size_t total = a.size();
    for (std::size_t i = 0; i < total; ++i) {
        acc += static_cast<double>(pa[i]) * static_cast<double>(pb[i]);
    }
    return acc;
}

}  // namespace rednet
