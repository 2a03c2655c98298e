#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "instaug/error.hpp"
#include "instaug/image.hpp"

namespace instaug {

// Mean squared error over every channel of every pixel.
inline double mean_squared_error(const ImageRgb& a, const ImageRgb& b) {
    require_same_size(a, b, "mse");
    double sum = 0.0;
    const std::size_t n = a.size();
    const std::uint8_t* pa = a.data();
    const std::uint8_t* pb = b.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
        sum += d * d;
    }
    return sum / static_cast<double>(n);
}

// Peak signal-to-noise ratio in dB for 8-bit images; identical images give
// +infinity (serialized as "inf" wherever curves are written out).
inline double psnr(const ImageRgb& a, const ImageRgb& b) {
    const double mse = mean_squared_error(a, b);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

// PSNR restricted to the pixels selected by `region`.
inline double psnr(const ImageRgb& a, const ImageRgb& b, const Mask& region) {
    require_same_size(a, b, "psnr");
    if (region.width() != a.width() || region.height() != a.height()) {
        throw DimensionError("psnr region mask size does not match the images");
    }
    double sum = 0.0;
    std::int64_t count = 0;
    for (int y = 0; y < a.height(); ++y) {
        const std::uint8_t* m = region.row(y);
        for (int x = 0; x < a.width(); ++x) {
            if (!m[x]) continue;
            for (int c = 0; c < 3; ++c) {
                const double d =
                    static_cast<double>(a.at(x, y, c)) - static_cast<double>(b.at(x, y, c));
                sum += d * d;
            }
            ++count;
        }
    }
    if (count == 0) throw EmptyMaskError("psnr region mask has no set pixels");
    const double mse = sum / static_cast<double>(3 * count);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

namespace detail {

struct SsimKernel {
    // 11x11 Gaussian, sigma 1.5, normalized to sum 1.
    double w[11][11];

    SsimKernel() {
        double sum = 0.0;
        for (int i = 0; i < 11; ++i) {
            for (int j = 0; j < 11; ++j) {
                const double dy = i - 5;
                const double dx = j - 5;
                w[i][j] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
                sum += w[i][j];
            }
        }
        for (auto& row : w) {
            for (double& v : row) v /= sum;
        }
    }
};

}  // namespace detail

// Structural similarity of the luma channels: Gaussian-weighted 11x11
// windows (sigma 1.5), stabilizers K1=0.01 / K2=0.03 at L=255, averaged over
// every window that fits entirely inside the image.
inline double ssim(const ImageRgb& a, const ImageRgb& b) {
    require_same_size(a, b, "ssim");
    if (a.width() < 11 || a.height() < 11) {
        throw DimensionError("ssim needs images at least 11x11");
    }
    static const detail::SsimKernel kernel;
    constexpr double C1 = (0.01 * 255.0) * (0.01 * 255.0);
    constexpr double C2 = (0.03 * 255.0) * (0.03 * 255.0);

    const MapF la = luminance(a);
    const MapF lb = luminance(b);
    double total = 0.0;
    std::int64_t windows = 0;
    for (int y = 0; y + 11 <= a.height(); ++y) {
        for (int x = 0; x + 11 <= a.width(); ++x) {
            double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
            for (int i = 0; i < 11; ++i) {
                for (int j = 0; j < 11; ++j) {
                    const double w = kernel.w[i][j];
                    const double va = la.at(x + j, y + i);
                    const double vb = lb.at(x + j, y + i);
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
            const double num = (2.0 * mu_a * mu_b + C1) * (2.0 * cov + C2);
            const double den = (mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2);
            total += num / den;
            ++windows;
        }
    }
    return total / static_cast<double>(windows);
}

struct DegradationCurve {
    struct Point {
        int step = 0;
        double psnr_db = 0.0;
        double ssim = 0.0;
    };

    std::vector<Point> points;

    std::string to_csv() const {
        const auto fmt = [](double v) {
            if (std::isinf(v)) return std::string("inf");
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.6f", v);
            return std::string(buf);
        };
        std::string out = "step,psnr_db,ssim\n";
        for (const auto& p : points) {
            out += std::to_string(p.step) + "," + fmt(p.psnr_db) + "," + fmt(p.ssim) + "\n";
        }
        return out;
    }
};

// Applies `reencode` repeatedly and measures how far each result has drifted
// from the original. Step 0 is the untouched image (infinite PSNR, SSIM 1).
inline DegradationCurve roundtrip_degradation(
    const ImageRgb& original, const std::function<ImageRgb(const ImageRgb&)>& reencode,
    int steps) {
    if (steps < 1) throw ConfigError("degradation needs at least one step");
    DegradationCurve curve;
    curve.points.push_back({0, std::numeric_limits<double>::infinity(), 1.0});
    ImageRgb current = original;
    for (int i = 1; i <= steps; ++i) {
        current = reencode(current);
        curve.points.push_back({i, psnr(original, current), ssim(original, current)});
    }
    return curve;
}

}  // namespace instaug
