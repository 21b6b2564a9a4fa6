#pragma once

// Gray-level co-occurrence matrices and the Haralick texture descriptors.
// Gray levels enter the formulas 1-based (1..Ng), following Haralick,
// Shanmugam and Dinstein (1973). Natural logarithms throughout; p log p
// terms with p = 0 contribute nothing.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "metmorph/image.hpp"

namespace metmorph {

inline constexpr int kGlcmLevels = 64;

struct GlcmOffset {
    int dr = 0;
    int dc = 0;
};

/// 0, 45, 90 and 135 degrees at distance 1.
inline constexpr std::array<GlcmOffset, 4> kGlcmDirections{{{0, 1}, {-1, 1}, {-1, 0}, {-1, -1}}};

/// Uniform quantization of [0, 256) onto `levels` bins.
inline LevelImage quantize(const GrayImage& gray, int levels = kGlcmLevels)
{
    LevelImage q(gray.height(), gray.width());
    const double scale = static_cast<double>(levels) / 256.0;
    for (int r = 0; r < gray.height(); ++r) {
        for (int c = 0; c < gray.width(); ++c) {
            const double v = std::floor(gray.at(r, c) * scale);
            q.at(r, c) = static_cast<std::uint8_t>(std::clamp(v, 0.0, static_cast<double>(levels - 1)));
        }
    }
    return q;
}

/// Normalized symmetric co-occurrence matrix. Only the level range actually
/// present in the image is iterated when computing features.
class Glcm {
public:
    Glcm(const LevelImage& img, GlcmOffset off, int levels = kGlcmLevels) : levels_(levels)
    {
        lo_ = levels - 1;
        hi_ = -1;
        visit_pairs(img, off, [&](int a, int b) {
            lo_ = std::min({lo_, a, b});
            hi_ = std::max({hi_, a, b});
        });
        if (hi_ < 0) {
            lo_ = 0;
            return;
        }
        span_ = hi_ - lo_ + 1;
        p_.assign(static_cast<std::size_t>(span_) * static_cast<std::size_t>(span_), 0.0);
        visit_pairs(img, off, [&](int a, int b) {
            p_[idx(a, b)] += 1.0;
            p_[idx(b, a)] += 1.0;
            total_ += 2.0;
        });
        for (auto& v : p_) v /= total_;
    }

    int levels() const noexcept { return levels_; }
    double operator()(int i, int j) const noexcept
    {
        return i < lo_ || i > hi_ || j < lo_ || j > hi_ ? 0.0 : p_[idx(i, j)];
    }
    /// Number of counted (ordered) pairs before normalization.
    double total() const noexcept { return total_; }
    int lowest_level() const noexcept { return lo_; }
    int highest_level() const noexcept { return hi_; }

private:
    template <class Fn>
    static void visit_pairs(const LevelImage& img, GlcmOffset off, Fn&& fn)
    {
        for (int r = 0; r < img.height(); ++r) {
            const int r2 = r + off.dr;
            if (r2 < 0 || r2 >= img.height()) continue;
            for (int c = 0; c < img.width(); ++c) {
                const int c2 = c + off.dc;
                if (c2 < 0 || c2 >= img.width()) continue;
                fn(static_cast<int>(img.at(r, c)), static_cast<int>(img.at(r2, c2)));
            }
        }
    }

    std::size_t idx(int i, int j) const noexcept
    {
        return static_cast<std::size_t>(i - lo_) * static_cast<std::size_t>(span_) + static_cast<std::size_t>(j - lo_);
    }

    int levels_;
    std::vector<double> p_; // levels lo..hi only
    double total_ = 0.0;
    int lo_ = 0;
    int hi_ = -1;
    int span_ = 0;
};

struct HaralickFeatures {
    double angular_second_moment = 0;
    double contrast = 0;
    double correlation = 0;
    double sum_of_squares_variance = 0;
    double inverse_difference_moment = 0;
    double sum_average = 0;
    double sum_variance = 0;
    double difference_variance = 0;
    double info_measure_corr_1 = 0;
    double info_measure_corr_2 = 0;

    static constexpr std::size_t size = 10;

    std::array<double, size> values() const
    {
        return {angular_second_moment, contrast, correlation, sum_of_squares_variance,
                inverse_difference_moment, sum_average, sum_variance, difference_variance,
                info_measure_corr_1, info_measure_corr_2};
    }
};

inline HaralickFeatures haralick(const Glcm& g)
{
    HaralickFeatures f;
    const int lo = g.lowest_level();
    const int hi = g.highest_level();
    if (hi < lo) return f;
    const int span = hi - lo + 1;

    std::vector<double> px(span, 0.0), py(span, 0.0);
    std::vector<double> p_sum(2 * span - 1, 0.0);  // index (i + j) - 2 lo
    std::vector<double> p_diff(span, 0.0);         // index |i - j|
    double hxy = 0.0, sum_ij = 0.0, idm = 0.0;
    for (int i = lo; i <= hi; ++i) {
        for (int j = lo; j <= hi; ++j) {
            const double p = g(i, j);
            if (p == 0.0) continue;
            px[i - lo] += p;
            py[j - lo] += p;
            p_sum[i + j - 2 * lo] += p;
            p_diff[std::abs(i - j)] += p;
            f.angular_second_moment += p * p;
            const double li = i + 1.0, lj = j + 1.0;
            sum_ij += li * lj * p;
            idm += p / (1.0 + (li - lj) * (li - lj));
            hxy -= p * std::log(p);
        }
    }
    f.inverse_difference_moment = idm;

    double mux = 0, muy = 0;
    for (int k = 0; k < span; ++k) {
        mux += (k + lo + 1.0) * px[k];
        muy += (k + lo + 1.0) * py[k];
    }
    double vx = 0, vy = 0;
    for (int k = 0; k < span; ++k) {
        const double l = k + lo + 1.0;
        vx += (l - mux) * (l - mux) * px[k];
        vy += (l - muy) * (l - muy) * py[k];
    }
    f.sum_of_squares_variance = vx;
    const double sxsy = std::sqrt(vx) * std::sqrt(vy);
    f.correlation = sxsy > 0.0 ? (sum_ij - mux * muy) / sxsy : 0.0;

    for (int k = 0; k < span; ++k) f.contrast += static_cast<double>(k) * k * p_diff[k];

    // sums i + j of 1-based levels run from 2 (lo + 1) upward
    for (std::size_t k = 0; k < p_sum.size(); ++k) {
        f.sum_average += (k + 2.0 * (lo + 1)) * p_sum[k];
    }
    for (std::size_t k = 0; k < p_sum.size(); ++k) {
        const double d = (k + 2.0 * (lo + 1)) - f.sum_average;
        f.sum_variance += d * d * p_sum[k];
    }

    double mud = 0.0;
    for (int k = 0; k < span; ++k) mud += k * p_diff[k];
    for (int k = 0; k < span; ++k) f.difference_variance += (k - mud) * (k - mud) * p_diff[k];

    std::vector<double> lpx(span, 0.0), lpy(span, 0.0);
    double hx = 0, hy = 0;
    for (int k = 0; k < span; ++k) {
        if (px[k] > 0) lpx[k] = std::log(px[k]);
        if (py[k] > 0) lpy[k] = std::log(py[k]);
        hx -= px[k] * lpx[k];
        hy -= py[k] * lpy[k];
    }
    // log(px py) = log px + log py; px[i] py[j] > 0 wherever g(i, j) > 0
    double hxy1 = 0, hxy2 = 0;
    for (int i = 0; i < span; ++i) {
        if (px[i] <= 0.0) continue;
        for (int j = 0; j < span; ++j) {
            if (py[j] <= 0.0) continue;
            const double lq = lpx[i] + lpy[j];
            hxy1 -= g(i + lo, j + lo) * lq;
            hxy2 -= px[i] * py[j] * lq;
        }
    }
    const double hmax = std::max(hx, hy);
    f.info_measure_corr_1 = hmax > 0.0 ? (hxy - hxy1) / hmax : 0.0;
    f.info_measure_corr_2 = std::sqrt(std::max(0.0, 1.0 - std::exp(-2.0 * (hxy2 - hxy))));
    return f;
}

/// Haralick features averaged over the four standard directions.
inline HaralickFeatures haralick_mean(const LevelImage& img, int levels = kGlcmLevels)
{
    std::array<double, HaralickFeatures::size> acc{};
    for (const auto& off : kGlcmDirections) {
        const auto v = haralick(Glcm(img, off, levels)).values();
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += v[k];
    }
    for (auto& a : acc) a /= static_cast<double>(kGlcmDirections.size());
    return {acc[0], acc[1], acc[2], acc[3], acc[4], acc[5], acc[6], acc[7], acc[8], acc[9]};
}

} // namespace metmorph
