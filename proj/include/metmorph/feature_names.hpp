#pragma once

// Canonical feature naming shared by every artifact.
//
//   per cell   : {family}.{feature}                e.g. shape.area
//   per slide  : {cell}.{family}.{feature}.{stat}  e.g. lymph.shape.area.skewness
//                global.percent.{name}             e.g. global.percent.til
//
// Slide vectors are ordered: the four percentages, then family by family
// (shape, color, intensity, texture), tumor before lymph, per-cell feature
// order, and the summary statistic order mean, std, skewness, kurtosis.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace metmorph::names {

inline constexpr std::array<std::string_view, 11> kShape{
    "area", "bbox_area", "solidity", "perimeter", "convex_perimeter_ratio", "circularity",
    "aspect_ratio", "equivalent_diameter", "longest_axis", "area_over_bbox", "bbox_aspect_ratio"};

inline constexpr std::array<std::string_view, 12> kColor{
    "red_mean", "red_std", "green_mean", "green_std", "blue_mean", "blue_std",
    "hue_mean", "hue_std", "saturation_mean", "saturation_std", "intensity_mean", "intensity_std"};

inline constexpr std::array<std::string_view, 7> kIntensity{
    "min", "max", "mean", "std", "iqr", "skewness", "kurtosis"};

inline constexpr std::array<std::string_view, 16> kTexture{
    "haralick_angular_second_moment", "haralick_contrast", "haralick_correlation",
    "haralick_sum_of_squares_variance", "haralick_inverse_difference_moment",
    "haralick_sum_average", "haralick_sum_variance", "haralick_difference_variance",
    "haralick_info_measure_corr_1", "haralick_info_measure_corr_2",
    "grad_mean", "grad_std", "grad_skewness", "grad_kurtosis", "canny_sum", "canny_mean"};

inline constexpr std::array<std::string_view, 4> kFamilies{"shape", "color", "intensity", "texture"};
inline constexpr std::array<std::string_view, 2> kCellTypes{"tumor", "lymph"};
inline constexpr std::array<std::string_view, 4> kStats{"mean", "std", "skewness", "kurtosis"};
inline constexpr std::array<std::string_view, 4> kPercentages{
    "tumor", "til", "lymphocyte", "non_tumor_lymphocyte"};

inline constexpr std::size_t kCellFeatureCount = kShape.size() + kColor.size() + kIntensity.size() + kTexture.size();
inline constexpr std::size_t kSlideFeatureCount =
    kPercentages.size() + kCellTypes.size() * kCellFeatureCount * kStats.size();
static_assert(kCellFeatureCount == 46);
static_assert(kSlideFeatureCount == 372);

inline std::vector<std::string_view> family_features(std::string_view family)
{
    if (family == "shape") return {kShape.begin(), kShape.end()};
    if (family == "color") return {kColor.begin(), kColor.end()};
    if (family == "intensity") return {kIntensity.begin(), kIntensity.end()};
    if (family == "texture") return {kTexture.begin(), kTexture.end()};
    return {};
}

/// The 46 per-cell names in record order.
inline const std::vector<std::string>& cell_feature_names()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (auto fam : kFamilies)
            for (auto f : family_features(fam)) out.push_back(std::string(fam) + "." + std::string(f));
        return out;
    }();
    return names;
}

/// The 372 slide-level names in canonical order.
inline const std::vector<std::string>& slide_feature_names()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (auto p : kPercentages) out.push_back("global.percent." + std::string(p));
        for (auto fam : kFamilies)
            for (auto cell : kCellTypes)
                for (auto f : family_features(fam))
                    for (auto s : kStats)
                        out.push_back(std::string(cell) + "." + std::string(fam) + "." +
                                      std::string(f) + "." + std::string(s));
        return out;
    }();
    return names;
}

/// Index of a per-cell feature within a slide summary block.
inline std::size_t slide_index(std::size_t cell_type, std::size_t cell_feature, std::size_t stat)
{
    // families are contiguous blocks of (cell type x family features x stats)
    std::size_t offset = kPercentages.size();
    std::size_t f = cell_feature;
    for (auto fam : kFamilies) {
        const std::size_t nf = family_features(fam).size();
        if (f < nf) {
            return offset + (cell_type * nf + f) * kStats.size() + stat;
        }
        offset += kCellTypes.size() * nf * kStats.size();
        f -= nf;
    }
    return offset;
}

struct FeatureNameParts {
    std::string cell;      // tumor, lymph or global
    std::string family;    // percent, shape, color, intensity, texture
    std::string feature;
    std::string statistic; // mean/std/skewness/kurtosis, "percent" for percentages
};

inline std::optional<FeatureNameParts> parse(std::string_view name)
{
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto dot = name.find('.', start);
        parts.emplace_back(name.substr(start, dot == std::string_view::npos ? dot : dot - start));
        if (dot == std::string_view::npos) break;
        start = dot + 1;
    }
    if (parts.size() == 3 && parts[0] == "global" && parts[1] == "percent") {
        return FeatureNameParts{parts[0], parts[1], parts[2], "percent"};
    }
    if (parts.size() == 4) return FeatureNameParts{parts[0], parts[1], parts[2], parts[3]};
    return std::nullopt;
}

/// Features that are log-transformed before robust scaling: area-type means
/// and every standard-deviation summary.
inline bool is_log_transformed(std::string_view name)
{
    const auto p = parse(name);
    if (!p) return false;
    if (p->statistic == "std") return true;
    return p->statistic == "mean" && p->family == "shape" &&
           (p->feature == "area" || p->feature == "bbox_area");
}

} // namespace metmorph::names
