#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace metmorph {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Population moments of a sample. Zero variance gives skewness = kurtosis = 0.
struct Moments {
    double mean = 0.0;
    double std = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0; // excess kurtosis, m4 / m2^2 - 3
};

inline Moments moments(std::span<const double> x)
{
    Moments out;
    if (x.empty()) {
        return {kNaN, kNaN, kNaN, kNaN};
    }
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (*lo == *hi) {
        out.mean = *lo;
        return out;
    }
    const double n = static_cast<double>(x.size());
    double sum = 0.0;
    for (double v : x) sum += v;
    out.mean = std::clamp(sum / n, *lo, *hi);

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - out.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    out.std = std::sqrt(m2);
    if (m2 > 0.0) {
        out.skewness = m3 / std::pow(m2, 1.5);
        out.kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return out;
}

/// Percentile `q` in [0, 100] of an ascending-sorted sample, linear
/// interpolation between order statistics (position (n - 1) * q / 100).
inline double percentile_sorted(std::span<const double> sorted, double q)
{
    if (sorted.empty()) return kNaN;
    if (sorted.size() == 1) return sorted.front();
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q / 100.0;
    const double lo = std::floor(h);
    const auto i = static_cast<std::size_t>(lo);
    if (i + 1 >= sorted.size()) return sorted.back();
    return sorted[i] + (h - lo) * (sorted[i + 1] - sorted[i]);
}

inline double percentile(std::span<const double> x, double q)
{
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    return percentile_sorted(s, q);
}

inline double median(std::span<const double> x) { return percentile(x, 50.0); }

/// Raw median absolute deviation (no 1.4826 consistency factor).
inline double mad(std::span<const double> x)
{
    if (x.empty()) return kNaN;
    const double m = median(x);
    std::vector<double> dev;
    dev.reserve(x.size());
    for (double v : x) dev.push_back(std::abs(v - m));
    return median(dev);
}

inline double iqr(std::span<const double> x)
{
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    return percentile_sorted(s, 75.0) - percentile_sorted(s, 25.0);
}

/// Center and scale for robust standardization: median, then MAD with
/// fallback to IQR and finally 1 when both vanish.
struct RobustScale {
    double center = 0.0;
    double scale = 1.0;
    enum class Source { mad, iqr, unit } source = Source::mad;

    double apply(double v) const { return (v - center) / scale; }
};

inline RobustScale robust_scale(std::span<const double> x)
{
    RobustScale r;
    r.center = median(x);
    const double m = mad(x);
    if (m > 0.0) {
        r.scale = m;
        r.source = RobustScale::Source::mad;
        return r;
    }
    const double q = iqr(x);
    if (q > 0.0) {
        r.scale = q;
        r.source = RobustScale::Source::iqr;
        return r;
    }
    r.scale = 1.0;
    r.source = RobustScale::Source::unit;
    return r;
}

/// Correctly rounded sum of finite values (Shewchuk partials with the
/// half-way correction), independent of summation order.
inline double exact_sum(std::span<const double> values)
{
    std::vector<double> partials;
    for (double x : values) {
        std::size_t i = 0;
        for (double y : partials) {
            if (std::abs(x) < std::abs(y)) std::swap(x, y);
            const double hi = x + y;
            const double lo = y - (hi - x);
            if (lo != 0.0) partials[i++] = lo;
            x = hi;
        }
        partials.resize(i);
        partials.push_back(x);
    }
    if (partials.empty()) return 0.0;
    std::size_t n = partials.size();
    double hi = partials[--n], lo = 0.0;
    while (n > 0) {
        const double x = hi, y = partials[--n];
        hi = x + y;
        lo = y - (hi - x);
        if (lo != 0.0) break;
    }
    // round half-way cases the way the exact total dictates
    if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0))) {
        const double y = lo * 2.0, x = hi + y;
        if (y == x - hi) hi = x;
    }
    return hi;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

/// Numerically safe logistic function.
inline double sigmoid(double t)
{
    if (t >= 0.0) {
        return 1.0 / (1.0 + std::exp(-t));
    }
    const double e = std::exp(t);
    return e / (1.0 + e);
}

/// log(1 + exp(t)) without overflow.
inline double log1pexp(double t)
{
    if (t > 0.0) return t + std::log1p(std::exp(-t));
    return std::log1p(std::exp(t));
}

/// Fractional (average) ranks, 1-based.
inline std::vector<double> average_ranks(std::span<const double> x)
{
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && x[order[j]] == x[order[i]]) ++j;
        // ranks i+1 .. j share the average (i + 1 + j) / 2
        const double r = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
        i = j;
    }
    return ranks;
}

} // namespace metmorph
