#include "rednet/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>

#include "rednet/infer.hpp"
#include "rednet/parallel.hpp"
#include "rednet/rng.hpp"

namespace rednet {

double psnr(const ImageGray& a, const ImageGray& b, double peak) {
    if (a.h != b.h || a.w != b.w) {
        throw ShapeError("psnr: image sizes differ (" + std::to_string(a.h) + "x" +
                         std::to_string(a.w) + " vs " + std::to_string(b.h) + "x" +
                         std::to_string(b.w) + ")");
    }
    if (!(peak > 0.0)) throw ConfigError("psnr: peak must be > 0");
    double sq = 0.0;
    for (std::size_t i = 0; i < a.pix.size(); ++i) {
        const double d = a.pix[i] - b.pix[i];
        sq += d * d;
    }
    const double mse = sq / static_cast<double>(a.pix.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

}  // namespace

double ssim(const ImageGray& a, const ImageGray& b) {
    if (a.h != b.h || a.w != b.w) {
        throw ShapeError("ssim: image sizes differ (" + std::to_string(a.h) + "x" +
                         std::to_string(a.w) + " vs " + std::to_string(b.h) + "x" +
                         std::to_string(b.w) + ")");
    }
    if (a.h < kSsimWindow || a.w < kSsimWindow) {
        throw ShapeError("ssim: images must be at least " + std::to_string(kSsimWindow) +
                         "x" + std::to_string(kSsimWindow) + ", got " + std::to_string(a.h) +
                         "x" + std::to_string(a.w));
    }

    // Normalized 11x11 Gaussian window.
    double window[kSsimWindow][kSsimWindow];
    double total = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        for (int j = 0; j < kSsimWindow; ++j) {
            const double dy = i - kSsimWindow / 2;
            const double dx = j - kSsimWindow / 2;
            window[i][j] = std::exp(-(dy * dy + dx * dx) / (2.0 * kSsimSigma * kSsimSigma));
            total += window[i][j];
        }
    }
    for (auto& row : window) {
        for (double& w : row) w /= total;
    }

    // Valid-mode filtering: only windows fully inside the image count.
    const int out_h = a.h - kSsimWindow + 1;
    const int out_w = a.w - kSsimWindow + 1;
    double acc = 0.0;
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
            for (int i = 0; i < kSsimWindow; ++i) {
                for (int j = 0; j < kSsimWindow; ++j) {
                    const double w = window[i][j];
                    const double va = a.at(y + i, x + j);
                    const double vb = b.at(y + i, x + j);
                    mu_a += w * va;
                    mu_b += w * vb;
                    aa += w * va * va;
                    bb += w * vb * vb;
                    ab += w * va * vb;
                }
            }
            const double var_a = aa - mu_a * mu_a;
            const double var_b = bb - mu_b * mu_b;
            const double cov = ab - mu_a * mu_b;
            const double num = (2.0 * mu_a * mu_b + kSsimC1) * (2.0 * cov + kSsimC2);
            const double den =
                (mu_a * mu_a + mu_b * mu_b + kSsimC1) * (var_a + var_b + kSsimC2);
            acc += num / den;
        }
    }
    return acc / (static_cast<double>(out_h) * out_w);
}

namespace {

std::string format_metric(double v) {
    if (std::isinf(v)) return "inf";
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::string MetricReport::to_csv() const {
    std::string out = "image,level,psnr_db,ssim\n";
    for (const MetricRow& row : rows) {
        out += row.image + "," + row.level + "," + format_metric(row.psnr_db) + "," +
               format_metric(row.ssim) + "\n";
    }
    for (const LevelSummary& s : summaries) {
        out += "average," + s.level + "," + format_metric(s.avg_psnr) + "," +
               format_metric(s.avg_ssim) + "\n";
    }
    return out;
}

MetricReport evaluate(const Network<float>& net, std::span<const ImageGray> clean,
                      std::span<const std::string> names, const CorruptionSpec& levels,
                      std::uint64_t seed, bool ensemble) {
    levels.validate();
    if (clean.empty()) throw DataError("no images to evaluate on");

    const std::size_t level_count = levels.level_count();
    const std::size_t total = level_count * clean.size();
    MetricReport report;
    report.rows.resize(total);

    // Every (level, image) cell is independent: its noise comes from its
    // own derived seed, so the schedule cannot change any number.
    parallel_for(total, [&](std::size_t idx) {
        const std::size_t level = idx / clean.size();
        const std::size_t image = idx % clean.size();
        const ImageGray& ref = clean[image];

        ImageGray corrupted;
        if (levels.kind == CorruptionSpec::Kind::gaussian) {
            Rng rng(derive_seed(derive_seed(seed, 0xe7a1000000000000ull + level), image));
            corrupted = corrupt_gaussian(ref, levels.sigmas[level], rng);
        } else {
            corrupted = degrade_sr(ref, levels.scales[level]);
        }
        const ImageGray restored =
            ensemble ? restore_ensemble(net, corrupted) : restore(net, corrupted);

        MetricRow row;
        row.image = image < names.size() ? names[image] : "#" + std::to_string(image);
        row.level = levels.level_label(level);
        row.psnr_db = psnr(restored, ref);
        row.ssim = ssim(restored, ref);
        report.rows[idx] = std::move(row);
    });

    for (std::size_t level = 0; level < level_count; ++level) {
        LevelSummary s;
        s.level = levels.level_label(level);
        double psnr_sum = 0.0, ssim_sum = 0.0;
        int finite = 0;
        for (std::size_t image = 0; image < clean.size(); ++image) {
            const MetricRow& row = report.rows[level * clean.size() + image];
            if (std::isinf(row.psnr_db)) {
                ++s.psnr_excluded;
                std::cerr << "warning: " << row.image << " at " << row.level
                          << ": infinite PSNR excluded from the average\n";
            } else {
                psnr_sum += row.psnr_db;
                ++finite;
            }
            ssim_sum += row.ssim;
            ++s.images;
        }
        s.avg_psnr = finite > 0 ? psnr_sum / finite : std::numeric_limits<double>::infinity();
        s.avg_ssim = ssim_sum / s.images;
        report.summaries.push_back(std::move(s));
    }
    return report;
}

}  // namespace rednet
