#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rednet/rng.hpp"
#include "rednet/tensor.hpp"

namespace rednet {

// Grayscale image, row-major doubles. Values are in [0, 1] after loading
// or clipping; intermediate pipeline products (noisy patches, bicubic
// overshoot) may exceed that range on purpose.
struct ImageGray {
    int h = 0;
    int w = 0;
    std::vector<double> pix;

    ImageGray() = default;
    ImageGray(int height, int width, double fill = 0.0)
        : h(height), w(width), pix(static_cast<std::size_t>(height) * width, fill) {}

    double& at(int y, int x) { return pix[static_cast<std::size_t>(y) * w + x]; }
    double at(int y, int x) const { return pix[static_cast<std::size_t>(y) * w + x]; }

    void clip01();
};

ImageGray crop(const ImageGray& img, int y, int x, int h, int w);

// BT.601 luma from linear [0,1] RGB.
double luminance(double r, double g, double b);

// Image files. PGM is the native format (binary P5, 8-bit); PNG (8-bit
// grayscale or RGB, zlib-backed) is read and written as a convenience.
// load_image dispatches on the magic bytes, save_image on the extension.
ImageGray load_image(const std::filesystem::path& path);
void save_image(const ImageGray& img, const std::filesystem::path& path);
ImageGray load_pgm(const std::filesystem::path& path);
void save_pgm(const ImageGray& img, const std::filesystem::path& path);
ImageGray load_png(const std::filesystem::path& path);
void save_png(const ImageGray& img, const std::filesystem::path& path);

// All .pgm/.png regular files in a directory, sorted by filename.
std::vector<std::filesystem::path> list_image_files(const std::filesystem::path& dir);

// What to do to a clean patch to make a training input.
struct CorruptionSpec {
    enum class Kind { gaussian, sr };
    Kind kind = Kind::gaussian;
    std::vector<double> sigmas;  // gaussian: noise std-devs on the 0..255 scale
    std::vector<int> scales;     // sr: downsampling factors, each >= 2

    void validate() const;  // throws ConfigError
    std::size_t level_count() const;
    std::string level_label(std::size_t level) const;  // "sigma=30", "scale=2"
};

// Where a training patch came from.
struct PatchOrigin {
    int image = 0;  // index into the source image list
    int y = 0;
    int x = 0;
    int level = 0;  // index into the corruption level list
};

struct PatchPair {
    ImageGray input;   // corrupted (not clipped)
    ImageGray target;  // clean
    PatchOrigin origin;
};

struct PatchSet {
    int patch_size = 0;
    std::vector<PatchPair> pairs;
};

// Draws `count` (image, y, x) triples: image uniform over the list, then y
// and x uniform over the valid top-left range [0, dim - patch]. Throws
// DataError naming any image smaller than the patch. Offsets only — cheap
// enough to sample millions for distribution tests.
std::vector<PatchOrigin> sample_patch_offsets(std::span<const std::pair<int, int>> sizes,
                                              int patch, int count, Rng& rng,
                                              std::span<const std::string> names = {});

// Same draws, but materializes the clean pixel windows.
std::vector<ImageGray> sample_patches(std::span<const ImageGray> images, int patch,
                                      int count, Rng& rng,
                                      std::vector<PatchOrigin>* origins = nullptr,
                                      std::span<const std::string> names = {});

// Adds iid Gaussian noise with std-dev sigma255/255. The result is NOT
// clipped: training inputs keep the full corruption.
ImageGray corrupt_gaussian(const ImageGray& img, double sigma255, Rng& rng);

// Bicubic resampling (Keys kernel, a = -0.5), antialiased when shrinking,
// replicated edges, weights normalized per output pixel.
ImageGray resize_bicubic(const ImageGray& img, int out_h, int out_w);

// Super-resolution degradation: bicubic downsample by `scale` (to the
// ceiling size), then bicubic upsample back to the original size. Throws
// DataError when a dimension is smaller than 4*scale.
ImageGray degrade_sr(const ImageGray& img, int scale);

// The training set: `count` clean patches with a uniformly drawn
// corruption level applied to each. One seed fixes everything.
PatchSet make_dataset(std::span<const ImageGray> images, const CorruptionSpec& corruption,
                      int patch, int count, std::uint64_t seed,
                      std::span<const std::string> names = {});

// Provenance record for a dataset: enough to rebuild it exactly.
nlohmann::json dataset_manifest(const PatchSet& set, const CorruptionSpec& corruption,
                                std::uint64_t seed);

// Stacks selected pairs into (B, 1, p, p) input/target tensors.
template <typename T>
std::pair<Tensor4<T>, Tensor4<T>> patch_batch(const PatchSet& set,
                                              std::span<const std::size_t> indices) {
    if (set.pairs.empty()) throw DataError("patch set is empty");
    if (indices.empty()) throw DataError("patch batch needs at least one index");
    const int p = set.patch_size;
    Tensor4<T> x(static_cast<int>(indices.size()), 1, p, p);
    Tensor4<T> y(static_cast<int>(indices.size()), 1, p, p);
    for (std::size_t b = 0; b < indices.size(); ++b) {
        if (indices[b] >= set.pairs.size()) {
            throw DataError("patch index " + std::to_string(indices[b]) +
                            " out of range (" + std::to_string(set.pairs.size()) +
                            " patches)");
        }
        const PatchPair& pair = set.pairs[indices[b]];
        T* px = x.plane(static_cast<int>(b), 0);
        T* py = y.plane(static_cast<int>(b), 0);
        const std::size_t total = static_cast<std::size_t>(p) * p;
        for (std::size_t i = 0; i < total; ++i) {
            px[i] = static_cast<T>(pair.input.pix[i]);
            py[i] = static_cast<T>(pair.target.pix[i]);
        }
    }
    return {std::move(x), std::move(y)};
}

}  // namespace rednet
