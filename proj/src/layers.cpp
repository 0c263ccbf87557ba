#include "rednet/layers.hpp"

#include <algorithm>
#include <cstring>
#include <string>

namespace rednet {

void ConvSpec::validate() const {
    if (in_channels < 1) throw ConfigError("layer spec: in_channels must be >= 1");
    if (out_channels < 1) throw ConfigError("layer spec: out_channels must be >= 1");
    if (kernel < 1) throw ConfigError("layer spec: kernel must be >= 1");
    if (stride < 1) throw ConfigError("layer spec: stride must be >= 1");
    if (padding < 0) throw ConfigError("layer spec: padding must be >= 0");
}

int conv_out_size(int in, int kernel, int stride, int padding) {
    const int num = in + 2 * padding - kernel;
    if (num < 0) {
        throw GeometryError("conv output collapses: in=" + std::to_string(in) +
                            " kernel=" + std::to_string(kernel) +
                            " stride=" + std::to_string(stride) +
                            " pad=" + std::to_string(padding));
    }
    return num / stride + 1;
}

int deconv_out_size(int in, int kernel, int stride, int padding) {
    const int out = (in - 1) * stride - 2 * padding + kernel;
    if (out < 1) {
        throw GeometryError("deconv output collapses: in=" + std::to_string(in) +
                            " kernel=" + std::to_string(kernel) +
                            " stride=" + std::to_string(stride) +
                            " pad=" + std::to_string(padding));
    }
    return out;
}

namespace {

// Column tiling bound: each GEMM works on at most this many output
// positions at a time, which caps the im2col buffer while keeping the
// summation order a fixed function of the shapes alone.
constexpr std::size_t kColTile = 4096;

// C(M x N) += A(M x K) * B(K x N). Row-major with explicit leading
// dimensions; the k-loop is outside the j-loop so each C row accumulates
// rank-1 updates in a fixed order.
template <typename T>
void gemm_ab(std::size_t m_count, std::size_t k_count, std::size_t n_count,
             const T* a, std::size_t lda, const T* b, std::size_t ldb,
             T* c, std::size_t ldc) {
    for (std::size_t m = 0; m < m_count; ++m) {
        const T* arow = a + m * lda;
        T* crow = c + m * ldc;
        for (std::size_t k = 0; k < k_count; ++k) {
            const T amk = arow[k];
            if (amk == T(0)) continue;
            const T* brow = b + k * ldb;
            for (std::size_t j = 0; j < n_count; ++j) crow[j] += amk * brow[j];
        }
    }
}

// C(M x N) += A^T * B where A is (K x M) and B is (K x N).
template <typename T>
void gemm_atb(std::size_t k_count, std::size_t m_count, std::size_t n_count,
              const T* a, std::size_t lda, const T* b, std::size_t ldb,
              T* c, std::size_t ldc) {
    for (std::size_t k = 0; k < k_count; ++k) {
        const T* arow = a + k * lda;
        const T* brow = b + k * ldb;
        for (std::size_t m = 0; m < m_count; ++m) {
            const T amk = arow[m];
            if (amk == T(0)) continue;
            T* crow = c + m * ldc;
            for (std::size_t j = 0; j < n_count; ++j) crow[j] += amk * brow[j];
        }
    }
}

// C(M x N) += A * B^T where A is (M x K) and B is (N x K): one dot product
// per output cell.
template <typename T>
void gemm_abt(std::size_t m_count, std::size_t n_count, std::size_t k_count,
              const T* a, std::size_t lda, const T* b, std::size_t ldb,
              T* c, std::size_t ldc) {
    for (std::size_t m = 0; m < m_count; ++m) {
        const T* arow = a + m * lda;
        for (std::size_t n = 0; n < n_count; ++n) {
            const T* brow = b + n * ldb;
            T acc = T(0);
            for (std::size_t k = 0; k < k_count; ++k) acc += arow[k] * brow[k];
            c[m * ldc + n] += acc;
        }
    }
}

// Gathers the (C*k*k) x tile_len patch matrix for output columns
// [col_begin, col_begin + tile_len) of one image. x is a (C, H, W) block;
// out-of-image taps read as zero.
template <typename T>
void im2col_tile(const T* x, int channels, int height, int width, const ConvSpec& s,
                 int out_w, std::size_t col_begin, std::size_t tile_len, T* col) {
    const std::size_t plane = static_cast<std::size_t>(height) * width;
    for (int ci = 0; ci < channels; ++ci) {
        const T* xc = x + ci * plane;
        for (int u = 0; u < s.kernel; ++u) {
            for (int v = 0; v < s.kernel; ++v) {
                T* dst = col + (static_cast<std::size_t>(ci) * s.kernel * s.kernel +
                                static_cast<std::size_t>(u) * s.kernel + v) * tile_len;
                for (std::size_t t = 0; t < tile_len; ++t) {
                    const std::size_t idx = col_begin + t;
                    const int oy = static_cast<int>(idx / out_w);
                    const int ox = static_cast<int>(idx % out_w);
                    const int iy = oy * s.stride - s.padding + u;
                    const int ix = ox * s.stride - s.padding + v;
                    dst[t] = (iy >= 0 && iy < height && ix >= 0 && ix < width)
                                 ? xc[static_cast<std::size_t>(iy) * width + ix]
                                 : T(0);
                }
            }
        }
    }
}

// Adjoint of im2col_tile: scatter-adds the column tile back into the
// (C, H, W) block. Loop order is fixed, so overlapping taps always sum in
// the same order.
template <typename T>
void col2im_tile(const T* col, int channels, int height, int width, const ConvSpec& s,
                 int out_w, std::size_t col_begin, std::size_t tile_len, T* x) {
    const std::size_t plane = static_cast<std::size_t>(height) * width;
    for (int ci = 0; ci < channels; ++ci) {
        T* xc = x + ci * plane;
        for (int u = 0; u < s.kernel; ++u) {
            for (int v = 0; v < s.kernel; ++v) {
                const T* src = col + (static_cast<std::size_t>(ci) * s.kernel * s.kernel +
                                      static_cast<std::size_t>(u) * s.kernel + v) * tile_len;
                for (std::size_t t = 0; t < tile_len; ++t) {
                    const std::size_t idx = col_begin + t;
                    const int oy = static_cast<int>(idx / out_w);
                    const int ox = static_cast<int>(idx % out_w);
                    const int iy = oy * s.stride - s.padding + u;
                    const int ix = ox * s.stride - s.padding + v;
                    if (iy >= 0 && iy < height && ix >= 0 && ix < width) {
                        xc[static_cast<std::size_t>(iy) * width + ix] += src[t];
                    }
                }
            }
        }
    }
}

template <typename T>
void check_conv_weight(const Tensor4<T>& weight, const ConvSpec& s, const char* op) {
    if (weight.n() != s.out_channels || weight.c() != s.in_channels ||
        weight.h() != s.kernel || weight.w() != s.kernel) {
        throw ShapeError(std::string(op) + ": weight shape " + weight.shape_string() +
                         " does not match spec (" + std::to_string(s.out_channels) + ", " +
                         std::to_string(s.in_channels) + ", " + std::to_string(s.kernel) +
                         ", " + std::to_string(s.kernel) + ")");
    }
}

template <typename T>
void check_deconv_weight(const Tensor4<T>& weight, const ConvSpec& s, const char* op) {
    if (weight.n() != s.in_channels || weight.c() != s.out_channels ||
        weight.h() != s.kernel || weight.w() != s.kernel) {
        throw ShapeError(std::string(op) + ": weight shape " + weight.shape_string() +
                         " does not match spec (" + std::to_string(s.in_channels) + ", " +
                         std::to_string(s.out_channels) + ", " + std::to_string(s.kernel) +
                         ", " + std::to_string(s.kernel) + ")");
    }
}

template <typename T>
void check_input_channels(const Tensor4<T>& x, const ConvSpec& s, const char* op) {
    if (x.c() != s.in_channels) {
        throw ShapeError(std::string(op) + ": input has " + std::to_string(x.c()) +
                         " channels, spec expects " + std::to_string(s.in_channels));
    }
}

template <typename T>
void check_bias(std::span<const T> bias, const ConvSpec& s, const char* op) {
    if (bias.size() != static_cast<std::size_t>(s.out_channels)) {
        throw ShapeError(std::string(op) + ": bias has " + std::to_string(bias.size()) +
                         " entries, spec expects " + std::to_string(s.out_channels));
    }
}

}  // namespace

template <typename T>
Tensor4<T> conv2d_forward(const Tensor4<T>& x, const Tensor4<T>& weight,
                          std::span<std::type_identity_t<const T>> bias, const ConvSpec& spec) {
    spec.validate();
    check_input_channels(x, spec, "conv2d");
    check_conv_weight(weight, spec, "conv2d");
    check_bias(bias, spec, "conv2d");

    const int out_h = conv_out_size(x.h(), spec.kernel, spec.stride, spec.padding);
    const int out_w = conv_out_size(x.w(), spec.kernel, spec.stride, spec.padding);
    Tensor4<T> out(x.n(), spec.out_channels, out_h, out_w);

    const std::size_t cols = static_cast<std::size_t>(out_h) * out_w;
    const std::size_t krows = static_cast<std::size_t>(spec.in_channels) * spec.kernel * spec.kernel;
    std::vector<T> col(krows * std::min(cols, kColTile));

    for (int n = 0; n < x.n(); ++n) {
        for (int oc = 0; oc < spec.out_channels; ++oc) {
            T* plane = out.plane(n, oc);
            std::fill(plane, plane + cols, bias[oc]);
        }
        for (std::size_t begin = 0; begin < cols; begin += kColTile) {
            const std::size_t len = std::min(kColTile, cols - begin);
            im2col_tile(x.plane(n, 0), spec.in_channels, x.h(), x.w(), spec, out_w,
                        begin, len, col.data());
            gemm_ab<T>(spec.out_channels, krows, len,
                       weight.data(), krows, col.data(), len,
                       out.plane(n, 0) + begin, cols);
        }
    }
    return out;
}

template <typename T>
LayerGrads<T> conv2d_backward(const Tensor4<T>& x, const Tensor4<T>& weight,
                              const ConvSpec& spec, const Tensor4<T>& grad_out) {
    spec.validate();
    check_input_channels(x, spec, "conv2d backward");
    check_conv_weight(weight, spec, "conv2d backward");
    const int out_h = conv_out_size(x.h(), spec.kernel, spec.stride, spec.padding);
    const int out_w = conv_out_size(x.w(), spec.kernel, spec.stride, spec.padding);
    if (grad_out.n() != x.n() || grad_out.c() != spec.out_channels ||
        grad_out.h() != out_h || grad_out.w() != out_w) {
        throw ShapeError("conv2d backward: grad shape " + grad_out.shape_string() +
                         " does not match forward output " +
                         Tensor4<T>::dims_string(x.n(), spec.out_channels, out_h, out_w));
    }

    LayerGrads<T> g;
    g.input = Tensor4<T>(x.n(), x.c(), x.h(), x.w());
    g.weight = Tensor4<T>(weight.n(), weight.c(), weight.h(), weight.w());
    g.bias.assign(spec.out_channels, T(0));

    const std::size_t cols = static_cast<std::size_t>(out_h) * out_w;
    const std::size_t krows = static_cast<std::size_t>(spec.in_channels) * spec.kernel * spec.kernel;
    const std::size_t tile_cap = std::min(cols, kColTile);
    std::vector<T> col(krows * tile_cap);
    std::vector<T> gcol(krows * tile_cap);

    for (int oc = 0; oc < spec.out_channels; ++oc) {
        double acc = 0.0;
        for (int n = 0; n < grad_out.n(); ++n) {
            const T* plane = grad_out.plane(n, oc);
            for (std::size_t i = 0; i < cols; ++i) acc += static_cast<double>(plane[i]);
        }
        g.bias[oc] = static_cast<T>(acc);
    }

    for (int n = 0; n < x.n(); ++n) {
        for (std::size_t begin = 0; begin < cols; begin += kColTile) {
            const std::size_t len = std::min(kColTile, cols - begin);
            im2col_tile(x.plane(n, 0), spec.in_channels, x.h(), x.w(), spec, out_w,
                        begin, len, col.data());
            // dL/dw += grad_out_tile * col^T
            gemm_abt<T>(spec.out_channels, krows, len,
                        grad_out.plane(n, 0) + begin, cols, col.data(), len,
                        g.weight.data(), krows);
            // dL/dcol = W^T * grad_out_tile, then scatter back to the input.
            std::fill(gcol.begin(), gcol.begin() + krows * len, T(0));
            gemm_atb<T>(spec.out_channels, krows, len,
                        weight.data(), krows, grad_out.plane(n, 0) + begin, cols,
                        gcol.data(), len);
            col2im_tile(gcol.data(), spec.in_channels, x.h(), x.w(), spec, out_w,
                        begin, len, g.input.plane(n, 0));
        }
    }
    return g;
}

template <typename T>
Tensor4<T> deconv2d_forward(const Tensor4<T>& x, const Tensor4<T>& weight,
                            std::span<std::type_identity_t<const T>> bias, const ConvSpec& spec) {
    spec.validate();
    check_input_channels(x, spec, "deconv2d");
    check_deconv_weight(weight, spec, "deconv2d");
    check_bias(bias, spec, "deconv2d");

    const int out_h = deconv_out_size(x.h(), spec.kernel, spec.stride, spec.padding);
    const int out_w = deconv_out_size(x.w(), spec.kernel, spec.stride, spec.padding);
    Tensor4<T> out(x.n(), spec.out_channels, out_h, out_w);

    // The deconv input grid plays the role of the "conv output" grid: each
    // input position scatters a k x k stamp into the output image.
    const std::size_t cols = static_cast<std::size_t>(x.h()) * x.w();
    const std::size_t krows = static_cast<std::size_t>(spec.out_channels) * spec.kernel * spec.kernel;
    const std::size_t out_plane = static_cast<std::size_t>(out_h) * out_w;
    const std::size_t tile_cap = std::min(cols, kColTile);
    std::vector<T> col(krows * tile_cap);
    ConvSpec scatter = spec;
    scatter.in_channels = spec.out_channels;  // geometry of the implied conv

    for (int n = 0; n < x.n(); ++n) {
        for (int oc = 0; oc < spec.out_channels; ++oc) {
            T* plane = out.plane(n, oc);
            std::fill(plane, plane + out_plane, bias[oc]);
        }
        for (std::size_t begin = 0; begin < cols; begin += kColTile) {
            const std::size_t len = std::min(kColTile, cols - begin);
            // col = W^T * x_tile, with W viewed as (in, out*k*k).
            std::fill(col.begin(), col.begin() + krows * len, T(0));
            gemm_atb<T>(spec.in_channels, krows, len,
                        weight.data(), krows, x.plane(n, 0) + begin, cols,
                        col.data(), len);
            col2im_tile(col.data(), spec.out_channels, out_h, out_w, scatter, x.w(),
                        begin, len, out.plane(n, 0));
        }
    }
    return out;
}

template <typename T>
LayerGrads<T> deconv2d_backward(const Tensor4<T>& x, const Tensor4<T>& weight,
                                const ConvSpec& spec, const Tensor4<T>& grad_out) {
    spec.validate();
    check_input_channels(x, spec, "deconv2d backward");
    check_deconv_weight(weight, spec, "deconv2d backward");
    const int out_h = deconv_out_size(x.h(), spec.kernel, spec.stride, spec.padding);
    const int out_w = deconv_out_size(x.w(), spec.kernel, spec.stride, spec.padding);
    if (grad_out.n() != x.n() || grad_out.c() != spec.out_channels ||
        grad_out.h() != out_h || grad_out.w() != out_w) {
        throw ShapeError("deconv2d backward: grad shape " + grad_out.shape_string() +
                         " does not match forward output " +
                         Tensor4<T>::dims_string(x.n(), spec.out_channels, out_h, out_w));
    }

    LayerGrads<T> g;
    g.input = Tensor4<T>(x.n(), x.c(), x.h(), x.w());
    g.weight = Tensor4<T>(weight.n(), weight.c(), weight.h(), weight.w());
    g.bias.assign(spec.out_channels, T(0));

    const std::size_t cols = static_cast<std::size_t>(x.h()) * x.w();
    const std::size_t krows = static_cast<std::size_t>(spec.out_channels) * spec.kernel * spec.kernel;
    const std::size_t out_plane = static_cast<std::size_t>(out_h) * out_w;
    const std::size_t tile_cap = std::min(cols, kColTile);
    std::vector<T> col(krows * tile_cap);
    ConvSpec gather = spec;
    gather.in_channels = spec.out_channels;

    for (int oc = 0; oc < spec.out_channels; ++oc) {
        double acc = 0.0;
        for (int n = 0; n < grad_out.n(); ++n) {
            const T* plane = grad_out.plane(n, oc);
            for (std::size_t i = 0; i < out_plane; ++i) acc += static_cast<double>(plane[i]);
        }
        g.bias[oc] = static_cast<T>(acc);
    }

    for (int n = 0; n < x.n(); ++n) {
        for (std::size_t begin = 0; begin < cols; begin += kColTile) {
            const std::size_t len = std::min(kColTile, cols - begin);
            // Gather the stamps of grad_out that each input position touched.
            im2col_tile(grad_out.plane(n, 0), spec.out_channels, out_h, out_w, gather,
                        x.w(), begin, len, col.data());
            // dL/dx_tile = W * col, with W viewed as (in, out*k*k).
            gemm_ab<T>(spec.in_channels, krows, len,
                       weight.data(), krows, col.data(), len,
                       g.input.plane(n, 0) + begin, cols);
            // dL/dW += x_tile * col^T.
            gemm_abt<T>(spec.in_channels, krows, len,
                        x.plane(n, 0) + begin, cols, col.data(), len,
                        g.weight.data(), krows);
        }
    }
    return g;
}

template <typename T>
Tensor4<T> relu_forward(const Tensor4<T>& x) {
    Tensor4<T> out = x;
    for (T& v : out.values()) {
        if (v < T(0)) v = T(0);
    }
    return out;
}

template <typename T>
Tensor4<T> relu_backward(const Tensor4<T>& x, const Tensor4<T>& grad_out) {
    require_same_shape(x, grad_out, "relu backward");
    Tensor4<T> g(x.n(), x.c(), x.h(), x.w());
    const T* px = x.data();
    const T* pg = grad_out.data();
    T* po = g.data();
    const std::size_t total = x.size();
    for (std::size_t i = 0; i < total; ++i) po[i] = px[i] > T(0) ? pg[i] : T(0);
    return g;
}

template <typename T>
Tensor4<T> skip_add_forward(const Tensor4<T>& a, const Tensor4<T>& b) {
    return add(a, b);
}

template <typename T>
std::pair<Tensor4<T>, Tensor4<T>> skip_add_backward(const Tensor4<T>& grad_out) {
    return {grad_out, grad_out};
}

template Tensor4<float> conv2d_forward<float>(const Tensor4<float>&, const Tensor4<float>&,
                                              std::span<const float>, const ConvSpec&);
template Tensor4<double> conv2d_forward<double>(const Tensor4<double>&, const Tensor4<double>&,
                                                std::span<const double>, const ConvSpec&);
template LayerGrads<float> conv2d_backward<float>(const Tensor4<float>&, const Tensor4<float>&,
                                                  const ConvSpec&, const Tensor4<float>&);
template LayerGrads<double> conv2d_backward<double>(const Tensor4<double>&, const Tensor4<double>&,
                                                    const ConvSpec&, const Tensor4<double>&);
template Tensor4<float> deconv2d_forward<float>(const Tensor4<float>&, const Tensor4<float>&,
                                                std::span<const float>, const ConvSpec&);
template Tensor4<double> deconv2d_forward<double>(const Tensor4<double>&, const Tensor4<double>&,
                                                  std::span<const double>, const ConvSpec&);
template LayerGrads<float> deconv2d_backward<float>(const Tensor4<float>&, const Tensor4<float>&,
                                                    const ConvSpec&, const Tensor4<float>&);
template LayerGrads<double> deconv2d_backward<double>(const Tensor4<double>&, const Tensor4<double>&,
                                                      const ConvSpec&, const Tensor4<double>&);
template Tensor4<float> relu_forward<float>(const Tensor4<float>&);
template Tensor4<double> relu_forward<double>(const Tensor4<double>&);
template Tensor4<float> relu_backward<float>(const Tensor4<float>&, const Tensor4<float>&);
template Tensor4<double> relu_backward<double>(const Tensor4<double>&, const Tensor4<double>&);
template Tensor4<float> skip_add_forward<float>(const Tensor4<float>&, const Tensor4<float>&);
template Tensor4<double> skip_add_forward<double>(const Tensor4<double>&, const Tensor4<double>&);
template std::pair<Tensor4<float>, Tensor4<float>> skip_add_backward<float>(const Tensor4<float>&);
template std::pair<Tensor4<double>, Tensor4<double>> skip_add_backward<double>(const Tensor4<double>&);

}  // namespace rednet
