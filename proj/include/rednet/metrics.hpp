#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rednet/data.hpp"
#include "rednet/network.hpp"

namespace rednet {

// Peak signal-to-noise ratio in dB for a given peak value (1.0 for the
// [0,1] images used everywhere here). Identical images give +infinity.
double psnr(const ImageGray& a, const ImageGray& b, double peak = 1.0);

// Mean structural similarity: 11x11 Gaussian window (sigma 1.5),
// stabilizers C1 = 0.01^2 and C2 = 0.03^2 for unit peak, averaged over
// valid window positions only. Images must be at least 11x11.
double ssim(const ImageGray& a, const ImageGray& b);

struct MetricRow {
    std::string image;
    std::string level;
    double psnr_db = 0.0;
    double ssim = 0.0;
};

struct LevelSummary {
    std::string level;
    double avg_psnr = 0.0;  // over images with finite PSNR
    double avg_ssim = 0.0;
    int images = 0;
    int psnr_excluded = 0;  // infinite-PSNR images left out of avg_psnr
};

struct MetricReport {
    std::vector<MetricRow> rows;
    std::vector<LevelSummary> summaries;

    // "image,level,psnr_db,ssim" header, one row per image, then one
    // "average" row per level. LF line endings.
    std::string to_csv() const;
};

// Corrupts every clean image at every level (noise drawn from a seed
// derived per image and level), restores it with the network, and scores
// the result against the clean original. Rows appear level-major in input
// order. Infinite PSNR values are excluded from the per-level average with
// a warning on stderr.
MetricReport evaluate(const Network<float>& net, std::span<const ImageGray> clean,
                      std::span<const std::string> names, const CorruptionSpec& levels,
                      std::uint64_t seed, bool ensemble);

}  // namespace rednet
