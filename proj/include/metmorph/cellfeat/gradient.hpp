#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "metmorph/image.hpp"
#include "metmorph/numeric.hpp"

namespace metmorph {

namespace detail {

inline double clamped(const GrayImage& g, int r, int c)
{
    r = std::clamp(r, 0, g.height() - 1);
    c = std::clamp(c, 0, g.width() - 1);
    return g.at(r, c);
}

} // namespace detail

struct SobelResult {
    GrayImage gx;
    GrayImage gy;
    GrayImage magnitude;
};

/// 3x3 Sobel derivatives with replicated borders.
inline SobelResult sobel(const GrayImage& g)
{
    SobelResult s{GrayImage(g.height(), g.width()), GrayImage(g.height(), g.width()),
                  GrayImage(g.height(), g.width())};
    for (int r = 0; r < g.height(); ++r) {
        for (int c = 0; c < g.width(); ++c) {
            using detail::clamped;
            const double a = clamped(g, r - 1, c - 1), b = clamped(g, r - 1, c), d = clamped(g, r - 1, c + 1);
            const double e = clamped(g, r, c - 1), f = clamped(g, r, c + 1);
            const double h = clamped(g, r + 1, c - 1), i = clamped(g, r + 1, c), j = clamped(g, r + 1, c + 1);
            const double gx = (d + 2.0 * f + j) - (a + 2.0 * e + h);
            const double gy = (h + 2.0 * i + j) - (a + 2.0 * b + d);
            s.gx.at(r, c) = gx;
            s.gy.at(r, c) = gy;
            s.magnitude.at(r, c) = std::hypot(gx, gy);
        }
    }
    return s;
}

struct CannyParams {
    double sigma = 1.0;
    double low_ratio = 0.1;  // of the maximum gradient magnitude
    double high_ratio = 0.2;
};

/// Separable Gaussian blur, radius ceil(3 sigma), replicated borders.
inline GrayImage gaussian_blur(const GrayImage& g, double sigma)
{
    if (sigma <= 0.0) return g;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double ksum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        ksum += k[i + radius];
    }
    for (auto& v : k) v /= ksum;

    GrayImage tmp(g.height(), g.width()), out(g.height(), g.width());
    for (int r = 0; r < g.height(); ++r)
        for (int c = 0; c < g.width(); ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * detail::clamped(g, r, c + i);
            tmp.at(r, c) = acc;
        }
    for (int r = 0; r < g.height(); ++r)
        for (int c = 0; c < g.width(); ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * detail::clamped(tmp, r + i, c);
            out.at(r, c) = acc;
        }
    return out;
}

/// Canny edge map: Gaussian smoothing, Sobel gradients, non-maximum
/// suppression along the quantized gradient direction, hysteresis with
/// thresholds relative to the largest gradient magnitude.
inline Image<std::uint8_t> canny(const GrayImage& g, const CannyParams& params = {})
{
    const int h = g.height(), w = g.width();
    Image<std::uint8_t> edges(h, w, 0);
    if (h == 0 || w == 0) return edges;

    const SobelResult s = sobel(gaussian_blur(g, params.sigma));
    double max_mag = 0.0;
    for (double v : s.magnitude.data()) max_mag = std::max(max_mag, v);
    if (max_mag <= 0.0) return edges;

    auto mag = [&](int r, int c) {
        return s.magnitude.contains(r, c) ? s.magnitude.at(r, c) : 0.0;
    };
    GrayImage thin(h, w, 0.0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double m = s.magnitude.at(r, c);
            if (m <= 0.0) continue;
            double angle = std::atan2(s.gy.at(r, c), s.gx.at(r, c)) * 180.0 / std::numbers::pi;
            if (angle < 0.0) angle += 180.0;
            int dr, dc; // neighbour offset along the gradient
            if (angle < 22.5 || angle >= 157.5) {
                dr = 0, dc = 1;
            } else if (angle < 67.5) {
                dr = 1, dc = 1;
            } else if (angle < 112.5) {
                dr = 1, dc = 0;
            } else {
                dr = 1, dc = -1;
            }
            if (m > mag(r - dr, c - dc) && m >= mag(r + dr, c + dc)) thin.at(r, c) = m;
        }
    }

    const double low = params.low_ratio * max_mag;
    const double high = params.high_ratio * max_mag;
    std::vector<std::pair<int, int>> stack;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            if (thin.at(r, c) >= high && thin.at(r, c) > 0.0) {
                edges.at(r, c) = 1;
                stack.emplace_back(r, c);
            }
    while (!stack.empty()) {
        const auto [r, c] = stack.back();
        stack.pop_back();
        for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc) {
                const int rr = r + dr, cc = c + dc;
                if (!thin.contains(rr, cc) || edges.at(rr, cc)) continue;
                if (thin.at(rr, cc) >= low && thin.at(rr, cc) > 0.0) {
                    edges.at(rr, cc) = 1;
                    stack.emplace_back(rr, cc);
                }
            }
    }
    return edges;
}

struct GradientFeatures {
    double grad_mean = 0, grad_std = 0, grad_skewness = 0, grad_kurtosis = 0;
    double canny_sum = 0, canny_mean = 0;

    static constexpr std::size_t size = 6;

    std::array<double, size> values() const
    {
        return {grad_mean, grad_std, grad_skewness, grad_kurtosis, canny_sum, canny_mean};
    }
};

inline GradientFeatures gradient_features(const GrayImage& g, const CannyParams& params = {})
{
    GradientFeatures f;
    if (g.empty()) return f;
    const Moments m = moments(sobel(g).magnitude.data());
    f.grad_mean = m.mean;
    f.grad_std = m.std;
    f.grad_skewness = m.skewness;
    f.grad_kurtosis = m.kurtosis;
    const auto edges = canny(g, params);
    double count = 0.0;
    for (auto e : edges.data()) count += e;
    f.canny_sum = count;
    f.canny_mean = count / static_cast<double>(edges.data().size());
    return f;
}

} // namespace metmorph
