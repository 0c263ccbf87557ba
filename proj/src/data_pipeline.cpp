#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rednet/data.hpp"
#include "rednet/errors.hpp"

namespace rednet {

void CorruptionSpec::validate() const {
    if (kind == Kind::gaussian) {
        if (sigmas.empty()) throw ConfigError("gaussian corruption needs at least one sigma");
        for (double s : sigmas) {
            if (!(s > 0.0)) throw ConfigError("gaussian sigma must be > 0");
        }
    } else {
        if (scales.empty()) throw ConfigError("sr corruption needs at least one scale");
        for (int s : scales) {
            if (s < 2) throw ConfigError("sr scale must be >= 2");
        }
    }
}

std::size_t CorruptionSpec::level_count() const {
    return kind == Kind::gaussian ? sigmas.size() : scales.size();
}

std::string CorruptionSpec::level_label(std::size_t level) const {
    if (level >= level_count()) throw ConfigError("corruption level index out of range");
    char buf[48];
    if (kind == Kind::gaussian) {
        std::snprintf(buf, sizeof(buf), "sigma=%g", sigmas[level]);
    } else {
        std::snprintf(buf, sizeof(buf), "scale=%d", scales[level]);
    }
    return buf;
}

namespace {

std::string image_label(std::size_t index, std::span<const std::string> names) {
    if (index < names.size()) return "'" + names[index] + "'";
    return "#" + std::to_string(index);
}

}  // namespace

std::vector<PatchOrigin> sample_patch_offsets(std::span<const std::pair<int, int>> sizes,
                                              int patch, int count, Rng& rng,
                                              std::span<const std::string> names) {
    if (patch < 1) throw ConfigError("patch size must be >= 1");
    if (count < 0) throw ConfigError("patch count must be >= 0");
    if (sizes.empty()) throw DataError("no images to sample patches from");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const auto [h, w] = sizes[i];
        if (h < patch || w < patch) {
            throw DataError("image " + image_label(i, names) + " (" + std::to_string(h) +
                            "x" + std::to_string(w) + ") is smaller than the " +
                            std::to_string(patch) + "x" + std::to_string(patch) + " patch");
        }
    }
    std::vector<PatchOrigin> origins;
    origins.reserve(count);
    for (int i = 0; i < count; ++i) {
        PatchOrigin o;
        o.image = static_cast<int>(rng.uniform_index(sizes.size()));
        const auto [h, w] = sizes[o.image];
        // Top-left corner uniform over every valid placement, borders
        // included.
        o.y = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(h - patch + 1)));
        o.x = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(w - patch + 1)));
        origins.push_back(o);
    }
    return origins;
}

std::vector<ImageGray> sample_patches(std::span<const ImageGray> images, int patch,
                                      int count, Rng& rng,
                                      std::vector<PatchOrigin>* origins,
                                      std::span<const std::string> names) {
    std::vector<std::pair<int, int>> sizes;
    sizes.reserve(images.size());
    for (const ImageGray& img : images) sizes.emplace_back(img.h, img.w);
    std::vector<PatchOrigin> offs = sample_patch_offsets(sizes, patch, count, rng, names);

    std::vector<ImageGray> patches;
    patches.reserve(offs.size());
    for (const PatchOrigin& o : offs) {
        patches.push_back(crop(images[o.image], o.y, o.x, patch, patch));
    }
    if (origins) *origins = std::move(offs);
    return patches;
}

ImageGray corrupt_gaussian(const ImageGray& img, double sigma255, Rng& rng) {
    if (!(sigma255 > 0.0)) throw ConfigError("gaussian sigma must be > 0");
    const double sigma = sigma255 / 255.0;
    ImageGray out = img;
    for (double& v : out.pix) v += sigma * rng.normal();
    return out;
}

namespace {

// Keys bicubic kernel with a = -0.5 (the classic interpolation cubic).
double cubic_kernel(double t) {
    t = std::abs(t);
    if (t <= 1.0) return (1.5 * t - 2.5) * t * t + 1.0;
    if (t < 2.0) return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
    return 0.0;
}

struct AxisTap {
    int begin = 0;                 // first source index (clamped later)
    std::vector<double> weights;   // normalized kernel weights
};

// Resampling taps for one axis. When shrinking, the kernel is stretched by
// the inverse scale so it averages instead of aliasing. Out-of-range
// source indices are clamped to the border (edge replication), which the
// per-pixel weight normalization keeps unbiased.
std::vector<AxisTap> make_axis_taps(int in, int out) {
    const double scale = static_cast<double>(out) / in;
    const double kscale = std::min(scale, 1.0);
    const double support = 2.0 / kscale;
    std::vector<AxisTap> taps(out);
    for (int o = 0; o < out; ++o) {
        const double center = (o + 0.5) / scale - 0.5;
        const int lo = static_cast<int>(std::ceil(center - support));
        const int hi = static_cast<int>(std::floor(center + support));
        AxisTap tap;
        tap.begin = lo;
        tap.weights.resize(hi - lo + 1);
        double sum = 0.0;
        for (int i = lo; i <= hi; ++i) {
            const double wgt = cubic_kernel((center - i) * kscale);
            tap.weights[i - lo] = wgt;
            sum += wgt;
        }
        for (double& wgt : tap.weights) wgt /= sum;
        taps[o] = std::move(tap);
    }
    return taps;
}

}  // namespace

ImageGray resize_bicubic(const ImageGray& img, int out_h, int out_w) {
    if (img.h < 1 || img.w < 1) throw ShapeError("resize: empty source image");
    if (out_h < 1 || out_w < 1) throw ShapeError("resize: target size must be >= 1");

    // Separable: rows first, then columns.
    const std::vector<AxisTap> row_taps = make_axis_taps(img.h, out_h);
    const std::vector<AxisTap> col_taps = make_axis_taps(img.w, out_w);

    ImageGray mid(out_h, img.w);
    for (int y = 0; y < out_h; ++y) {
        const AxisTap& tap = row_taps[y];
        for (int x = 0; x < img.w; ++x) {
            double acc = 0.0;
            for (std::size_t k = 0; k < tap.weights.size(); ++k) {
                const int src = std::clamp(tap.begin + static_cast<int>(k), 0, img.h - 1);
                acc += tap.weights[k] * img.at(src, x);
            }
            mid.at(y, x) = acc;
        }
    }

    ImageGray out(out_h, out_w);
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            const AxisTap& tap = col_taps[x];
            double acc = 0.0;
            for (std::size_t k = 0; k < tap.weights.size(); ++k) {
                const int src = std::clamp(tap.begin + static_cast<int>(k), 0, img.w - 1);
                acc += tap.weights[k] * mid.at(y, src);
            }
            out.at(y, x) = acc;
        }
    }
    return out;
}

ImageGray degrade_sr(const ImageGray& img, int scale) {
    if (scale < 2) throw ConfigError("sr scale must be >= 2");
    if (img.h < 4 * scale || img.w < 4 * scale) {
        throw DataError("image " + std::to_string(img.h) + "x" + std::to_string(img.w) +
                        " too small for scale-" + std::to_string(scale) +
                        " degradation (needs at least " + std::to_string(4 * scale) +
                        " per side)");
    }
    const int low_h = (img.h + scale - 1) / scale;
    const int low_w = (img.w + scale - 1) / scale;
    const ImageGray low = resize_bicubic(img, low_h, low_w);
    // Upsample back to the original grid; the lost high frequencies are
    // what the network learns to restore. Values stay unclipped.
    return resize_bicubic(low, img.h, img.w);
}

PatchSet make_dataset(std::span<const ImageGray> images, const CorruptionSpec& corruption,
                      int patch, int count, std::uint64_t seed,
                      std::span<const std::string> names) {
    corruption.validate();
    if (images.empty()) throw DataError("no images to build a dataset from");
    if (corruption.kind == CorruptionSpec::Kind::sr) {
        for (int s : corruption.scales) {
            if (patch < 4 * s) {
                throw ConfigError("patch size " + std::to_string(patch) +
                                  " too small for sr scale " + std::to_string(s));
            }
        }
    }

    Rng rng(derive_seed(seed, 0x646174617365740aull));  // dataset stream
    std::vector<PatchOrigin> origins;
    std::vector<ImageGray> clean = sample_patches(images, patch, count, rng, &origins, names);

    PatchSet set;
    set.patch_size = patch;
    set.pairs.reserve(clean.size());
    const std::size_t levels = corruption.level_count();
    for (std::size_t i = 0; i < clean.size(); ++i) {
        PatchPair pair;
        pair.origin = origins[i];
        pair.origin.level = static_cast<int>(rng.uniform_index(levels));
        if (corruption.kind == CorruptionSpec::Kind::gaussian) {
            pair.input = corrupt_gaussian(clean[i], corruption.sigmas[pair.origin.level], rng);
        } else {
            pair.input = degrade_sr(clean[i], corruption.scales[pair.origin.level]);
        }
        pair.target = std::move(clean[i]);
        set.pairs.push_back(std::move(pair));
    }
    return set;
}

nlohmann::json dataset_manifest(const PatchSet& set, const CorruptionSpec& corruption,
                                std::uint64_t seed) {
    nlohmann::json j;
    j["patch_size"] = set.patch_size;
    j["count"] = set.pairs.size();
    j["seed"] = seed;
    j["corruption"]["kind"] =
        corruption.kind == CorruptionSpec::Kind::gaussian ? "gaussian" : "sr";
    if (corruption.kind == CorruptionSpec::Kind::gaussian) {
        j["corruption"]["sigmas"] = corruption.sigmas;
    } else {
        j["corruption"]["scales"] = corruption.scales;
    }
    nlohmann::json patches = nlohmann::json::array();
    for (const PatchPair& pair : set.pairs) {
        patches.push_back({{"image", pair.origin.image},
                           {"y", pair.origin.y},
                           {"x", pair.origin.x},
                           {"level", pair.origin.level}});
    }
    j["patches"] = std::move(patches);
    return j;
}

}  // namespace rednet
