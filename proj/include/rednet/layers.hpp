#pragma once

#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "rednet/tensor.hpp"

namespace rednet {

// Geometry of one conv or deconv layer. The 3x3 / stride 1 / pad 1 default
// keeps the spatial size unchanged, which is what the restoration nets use
// everywhere except the strided-bottleneck ablation.
struct ConvSpec {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 3;
    int stride = 1;
    int padding = 1;

    void validate() const;  // throws ConfigError
};

// floor((in + 2*pad - kernel) / stride) + 1; GeometryError if < 1.
int conv_out_size(int in, int kernel, int stride, int padding);

// (in - 1)*stride - 2*pad + kernel; GeometryError if < 1. Inverse of
// conv_out_size whenever the conv had no remainder in its division.
int deconv_out_size(int in, int kernel, int stride, int padding);

template <typename T>
struct LayerGrads {
    Tensor4<T> input;     // dL/dx, same shape as the forward input
    Tensor4<T> weight;    // dL/dw, same shape as the weight tensor
    std::vector<T> bias;  // dL/db, one entry per output channel
};

// 2-D convolution as cross-correlation (no kernel flip) with zero padding.
// weight is (out_channels, in_channels, k, k); bias has out_channels
// entries. Implemented as im2col + GEMM over fixed-size column tiles, so
// the accumulation order never changes between runs.
template <typename T>
Tensor4<T> conv2d_forward(const Tensor4<T>& x, const Tensor4<T>& weight,
                          std::span<std::type_identity_t<const T>> bias, const ConvSpec& spec);

template <typename T>
LayerGrads<T> conv2d_backward(const Tensor4<T>& x, const Tensor4<T>& weight,
                              const ConvSpec& spec, const Tensor4<T>& grad_out);

// Transposed convolution: the exact adjoint of conv2d_forward as a linear
// map, so <conv(x), y> == <x, deconv(y)> for matching geometry. weight is
// (in_channels, out_channels, k, k) — a conv weight viewed from the other
// side, letting adjointness tests share one tensor without reshuffling.
template <typename T>
Tensor4<T> deconv2d_forward(const Tensor4<T>& x, const Tensor4<T>& weight,
                            std::span<std::type_identity_t<const T>> bias, const ConvSpec& spec);

template <typename T>
LayerGrads<T> deconv2d_backward(const Tensor4<T>& x, const Tensor4<T>& weight,
                                const ConvSpec& spec, const Tensor4<T>& grad_out);

template <typename T>
Tensor4<T> relu_forward(const Tensor4<T>& x);

// Gradient is passed where x > 0 and zero elsewhere (including at x == 0).
template <typename T>
Tensor4<T> relu_backward(const Tensor4<T>& x, const Tensor4<T>& grad_out);

// Elementwise sum of two equal-shape activations (a skip junction).
template <typename T>
Tensor4<T> skip_add_forward(const Tensor4<T>& a, const Tensor4<T>& b);

// Both inputs receive the output gradient unchanged.
template <typename T>
std::pair<Tensor4<T>, Tensor4<T>> skip_add_backward(const Tensor4<T>& grad_out);

}  // namespace rednet
