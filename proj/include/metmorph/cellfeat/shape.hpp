#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "metmorph/cellfeat/cell.hpp"
#include "metmorph/cellfeat/contour.hpp"

namespace metmorph {

struct ShapeFeatures {
    double area = 0.0;             // pixel count
    double bbox_area = 0.0;
    double solidity = 0.0;         // contour area / convex hull area
    double perimeter = 0.0;        // traced contour length
    double convex_perimeter_ratio = 0.0;
    double circularity = 0.0;      // contour area / perimeter^2
    double aspect_ratio = 0.0;     // bbox width / height
    double equivalent_diameter = 0.0;
    double longest_axis = 0.0;     // Feret diameter over contour vertices
    double area_over_bbox = 0.0;
    double bbox_aspect_ratio = 0.0; // max(w, h) / min(w, h)

    static constexpr std::size_t size = 11;

    std::array<double, size> values() const
    {
        return {area, bbox_area, solidity, perimeter, convex_perimeter_ratio, circularity,
                aspect_ratio, equivalent_diameter, longest_axis, area_over_bbox, bbox_aspect_ratio};
    }
};

/// Shape descriptors from the mask and its traced outer contour. The contour is
/// traced here when `cell.outer_contour` is empty.
inline ShapeFeatures extract_shape(const CellInstance& cell)
{
    const auto& contour_pts = cell.outer_contour.empty() ? contour::trace_outer(cell.mask_pixels)
                                                         : cell.outer_contour;
    const auto hull = contour::convex_hull(contour_pts);

    ShapeFeatures f;
    f.area = static_cast<double>(cell.mask_pixels.size());
    const double w = cell.bbox.width();
    const double h = cell.bbox.height();
    f.bbox_area = w * h;

    const double contour_area = contour::polygon_area(contour_pts);
    const double hull_area = contour::polygon_area(hull);
    // zero-area hulls (straight lines) count as convex
    f.solidity = hull_area > 0.0 ? contour_area / hull_area : 1.0;

    f.perimeter = contour::polygon_perimeter(contour_pts);
    const double hull_perimeter = contour::polygon_perimeter(hull);
    f.convex_perimeter_ratio = f.perimeter > 0.0 ? hull_perimeter / f.perimeter : 1.0;
    f.circularity = f.perimeter > 0.0 ? contour_area / (f.perimeter * f.perimeter) : 0.0;

    f.aspect_ratio = w / h;
    f.equivalent_diameter = std::sqrt(4.0 * contour_area / std::numbers::pi);
    f.longest_axis = contour::max_pairwise_distance(hull);
    f.area_over_bbox = f.area / f.bbox_area;
    f.bbox_aspect_ratio = std::max(w, h) / std::min(w, h);
    return f;
}

} // namespace metmorph
