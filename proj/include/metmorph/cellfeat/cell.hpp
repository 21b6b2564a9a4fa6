#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "metmorph/error.hpp"

namespace metmorph {

enum class CellClass { tumor, lymphocyte, other };

inline std::string_view to_string(CellClass c) noexcept
{
    switch (c) {
    case CellClass::tumor: return "tumor";
    case CellClass::lymphocyte: return "lymphocyte";
    case CellClass::other: return "other";
    }
    return "other";
}

inline CellClass parse_cell_class(std::string_view s)
{
    if (s == "tumor") return CellClass::tumor;
    if (s == "lymphocyte" || s == "lymph") return CellClass::lymphocyte;
    if (s == "other") return CellClass::other;
    throw SchemaError("unknown cell_class '" + std::string(s) + "'");
}

struct PixelCoord {
    int row = 0;
    int col = 0;

    friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// Inclusive axis-aligned box.
struct BoundingBox {
    int row_min = 0;
    int col_min = 0;
    int row_max = -1;
    int col_max = -1;

    int height() const noexcept { return row_max - row_min + 1; }
    int width() const noexcept { return col_max - col_min + 1; }
    long long area() const noexcept { return static_cast<long long>(height()) * width(); }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// One segmented nucleus inside a tile.
struct CellInstance {
    std::uint32_t instance_id = 0;
    CellClass cell_class = CellClass::other;
    bool in_tumor_region = false;
    std::vector<PixelCoord> mask_pixels; // raster order
    std::vector<PixelCoord> outer_contour;
    BoundingBox bbox;
};

inline BoundingBox bounding_box(const std::vector<PixelCoord>& pixels)
{
    BoundingBox b{0, 0, -1, -1};
    if (pixels.empty()) return b;
    b = {pixels.front().row, pixels.front().col, pixels.front().row, pixels.front().col};
    for (const auto& p : pixels) {
        if (p.row < b.row_min) b.row_min = p.row;
        if (p.row > b.row_max) b.row_max = p.row;
        if (p.col < b.col_min) b.col_min = p.col;
        if (p.col > b.col_max) b.col_max = p.col;
    }
    return b;
}

} // namespace metmorph
