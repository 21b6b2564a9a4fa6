#pragma once

#include <array>

#include "metmorph/cellfeat/cell.hpp"
#include "metmorph/cellfeat/color.hpp"
#include "metmorph/cellfeat/glcm.hpp"
#include "metmorph/cellfeat/gradient.hpp"

namespace metmorph {

struct TextureFeatures {
    HaralickFeatures haralick;
    GradientFeatures gradient;

    static constexpr std::size_t size = HaralickFeatures::size + GradientFeatures::size;

    std::array<double, size> values() const
    {
        std::array<double, size> out{};
        const auto h = haralick.values();
        const auto g = gradient.values();
        std::copy(h.begin(), h.end(), out.begin());
        std::copy(g.begin(), g.end(), out.begin() + h.size());
        return out;
    }
};

inline TextureFeatures extract_texture(const GrayImage& gray, const CannyParams& canny_params = {})
{
    return {haralick_mean(quantize(gray, kGlcmLevels)), gradient_features(gray, canny_params)};
}

inline TextureFeatures extract_texture(const CellInstance& cell, const RgbImage& tile,
                                       const CannyParams& canny_params = {})
{
    check_bbox_in_tile(cell.bbox, tile, cell.instance_id);
    return extract_texture(gray_crop(tile, cell.bbox), canny_params);
}

} // namespace metmorph
