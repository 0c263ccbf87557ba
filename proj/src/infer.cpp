#include "rednet/infer.hpp"

#include <algorithm>
#include <cmath>

#include "rednet/parallel.hpp"

namespace rednet {

namespace {

// Clockwise quarter turn: out is w x h.
ImageGray rot90cw(const ImageGray& img) {
    ImageGray out(img.w, img.h);
    for (int y = 0; y < out.h; ++y) {
        for (int x = 0; x < out.w; ++x) {
            out.at(y, x) = img.at(img.h - 1 - x, y);
        }
    }
    return out;
}

ImageGray flip_horizontal(const ImageGray& img) {
    ImageGray out(img.h, img.w);
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x) {
            out.at(y, x) = img.at(y, img.w - 1 - x);
        }
    }
    return out;
}

Tensor4<float> to_tensor(const ImageGray& img) {
    Tensor4<float> t(1, 1, img.h, img.w);
    float* p = t.data();
    for (std::size_t i = 0; i < img.pix.size(); ++i) p[i] = static_cast<float>(img.pix[i]);
    return t;
}

// No clipping here; callers clip once at the very end.
ImageGray to_image(const Tensor4<float>& t) {
    ImageGray img(t.h(), t.w());
    const float* p = t.plane(0, 0);
    for (std::size_t i = 0; i < img.pix.size(); ++i) img.pix[i] = static_cast<double>(p[i]);
    return img;
}

}  // namespace

ImageGray apply_dihedral(const ImageGray& img, Dihedral d) {
    const int code = static_cast<int>(d);
    ImageGray out = img;
    for (int r = 0; r < (code & 3); ++r) out = rot90cw(out);
    if (code & 4) out = flip_horizontal(out);
    return out;
}

Dihedral inverse_dihedral(Dihedral d) {
    const int code = static_cast<int>(d);
    // A flipped element is an involution; a pure rotation inverts to the
    // complementary rotation.
    if (code & 4) return d;
    return static_cast<Dihedral>((4 - (code & 3)) & 3);
}

ImageGray restore(const Network<float>& net, const ImageGray& img) {
    if (img.h < 1 || img.w < 1) throw ShapeError("restore: empty image");
    ImageGray out = to_image(net.forward(to_tensor(img)));
    out.clip01();
    return out;
}

ImageGray restore_ensemble(const Network<float>& net, const ImageGray& img) {
    if (img.h < 1 || img.w < 1) throw ShapeError("restore: empty image");

    std::array<ImageGray, 8> branches;
    parallel_for(8, [&](std::size_t i) {
        const Dihedral d = kAllDihedral[i];
        const ImageGray turned = apply_dihedral(img, d);
        const ImageGray restored = to_image(net.forward(to_tensor(turned)));
        branches[i] = apply_dihedral(restored, inverse_dihedral(d));
    });

    for (const ImageGray& b : branches) {
        if (b.h != img.h || b.w != img.w) {
            throw ShapeError("ensemble branch produced a differently sized image");
        }
    }

    // Per-pixel sorted summation: the branch order is relabeled when the
    // input is pre-transformed, so a value-canonical order is the only one
    // that keeps the ensemble bit-exactly equivariant.
    ImageGray out(img.h, img.w);
    std::array<double, 8> vals;
    for (std::size_t i = 0; i < out.pix.size(); ++i) {
        for (std::size_t b = 0; b < 8; ++b) vals[b] = branches[b].pix[i];
        std::sort(vals.begin(), vals.end());
        double sum = 0.0;
        for (double v : vals) sum += v;
        out.pix[i] = std::clamp(sum / 8.0, 0.0, 1.0);
    }
    return out;
}

}  // namespace rednet
