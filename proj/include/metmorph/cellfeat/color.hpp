#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <vector>

#include "metmorph/cellfeat/cell.hpp"
#include "metmorph/error.hpp"
#include "metmorph/image.hpp"
#include "metmorph/numeric.hpp"

namespace metmorph {

struct Hsv {
    double hue = 0.0;        // [0, 1)
    double saturation = 0.0; // [0, 1]
    double value = 0.0;      // [0, 1]
};

inline Hsv rgb_to_hsv(double r, double g, double b)
{
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double delta = mx - mn;
    Hsv out;
    out.value = mx / 255.0;
    out.saturation = mx > 0.0 ? delta / mx : 0.0;
    if (delta > 0.0) {
        double h;
        if (mx == r) {
            h = (g - b) / delta;
            if (h < 0.0) h += 6.0;
        } else if (mx == g) {
            h = (b - r) / delta + 2.0;
        } else {
            h = (r - g) / delta + 4.0;
        }
        out.hue = h / 6.0;
        if (out.hue >= 1.0) out.hue = 0.0;
    }
    return out;
}

/// ITU-R 601 luma.
inline double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

inline void check_bbox_in_tile(const BoundingBox& box, const RgbImage& tile, std::uint32_t instance_id)
{
    if (box.row_min < 0 || box.col_min < 0 || box.row_max >= tile.height() ||
        box.col_max >= tile.width() || box.row_max < box.row_min || box.col_max < box.col_min) {
        throw SchemaError("instance " + std::to_string(instance_id) +
                          ": bounding box exceeds tile bounds");
    }
}

/// Grayscale crop of the bounding box.
inline GrayImage gray_crop(const RgbImage& tile, const BoundingBox& box)
{
    GrayImage g(box.height(), box.width());
    for (int r = 0; r < box.height(); ++r) {
        for (int c = 0; c < box.width(); ++c) {
            const int tr = box.row_min + r;
            const int tc = box.col_min + c;
            g.at(r, c) = luma(tile.at(tr, tc, 0), tile.at(tr, tc, 1), tile.at(tr, tc, 2));
        }
    }
    return g;
}

struct ColorFeatures {
    // mean and population std of each channel over the bounding box
    double red_mean = 0, red_std = 0;
    double green_mean = 0, green_std = 0;
    double blue_mean = 0, blue_std = 0;
    double hue_mean = 0, hue_std = 0;
    double saturation_mean = 0, saturation_std = 0;
    double intensity_mean = 0, intensity_std = 0; // (R + G + B) / 3

    static constexpr std::size_t size = 12;

    std::array<double, size> values() const
    {
        return {red_mean, red_std, green_mean, green_std, blue_mean, blue_std,
                hue_mean, hue_std, saturation_mean, saturation_std, intensity_mean, intensity_std};
    }
};

inline ColorFeatures extract_color(const BoundingBox& box, const RgbImage& tile)
{
    const std::size_t n = static_cast<std::size_t>(box.area());
    std::array<std::vector<double>, 6> ch;
    for (auto& v : ch) v.reserve(n);
    for (int r = box.row_min; r <= box.row_max; ++r) {
        for (int c = box.col_min; c <= box.col_max; ++c) {
            const double R = tile.at(r, c, 0), G = tile.at(r, c, 1), B = tile.at(r, c, 2);
            const Hsv hsv = rgb_to_hsv(R, G, B);
            ch[0].push_back(R);
            ch[1].push_back(G);
            ch[2].push_back(B);
            ch[3].push_back(hsv.hue);
            ch[4].push_back(hsv.saturation);
            ch[5].push_back((R + G + B) / 3.0);
        }
    }
    std::array<Moments, 6> m;
    for (std::size_t i = 0; i < 6; ++i) m[i] = moments(ch[i]);
    return {m[0].mean, m[0].std, m[1].mean, m[1].std, m[2].mean, m[2].std,
            m[3].mean, m[3].std, m[4].mean, m[4].std, m[5].mean, m[5].std};
}

inline ColorFeatures extract_color(const CellInstance& cell, const RgbImage& tile)
{
    check_bbox_in_tile(cell.bbox, tile, cell.instance_id);
    return extract_color(cell.bbox, tile);
}

struct IntensityFeatures {
    double min = 0, max = 0, mean = 0, std = 0, iqr = 0, skewness = 0, kurtosis = 0;

    static constexpr std::size_t size = 7;

    std::array<double, size> values() const { return {min, max, mean, std, iqr, skewness, kurtosis}; }
};

/// Grayscale statistics of a sample of pixel values.
inline IntensityFeatures intensity_statistics(std::vector<double> gray)
{
    IntensityFeatures f;
    if (gray.empty()) return f;
    const Moments m = moments(gray);
    std::sort(gray.begin(), gray.end());
    f.min = gray.front();
    f.max = gray.back();
    f.mean = m.mean;
    f.std = m.std;
    f.iqr = percentile_sorted(gray, 75.0) - percentile_sorted(gray, 25.0);
    f.skewness = m.skewness;
    f.kurtosis = m.kurtosis;
    return f;
}

inline IntensityFeatures extract_intensity(const GrayImage& gray) { return intensity_statistics(gray.data()); }

inline IntensityFeatures extract_intensity(const CellInstance& cell, const RgbImage& tile)
{
    check_bbox_in_tile(cell.bbox, tile, cell.instance_id);
    return extract_intensity(gray_crop(tile, cell.bbox));
}

} // namespace metmorph
