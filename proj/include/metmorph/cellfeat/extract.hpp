#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <string>
#include <vector>

#include "metmorph/cellfeat/cell.hpp"
#include "metmorph/cellfeat/color.hpp"
#include "metmorph/cellfeat/contour.hpp"
#include "metmorph/cellfeat/shape.hpp"
#include "metmorph/cellfeat/texture.hpp"
#include "metmorph/error.hpp"
#include "metmorph/feature_names.hpp"
#include "metmorph/image.hpp"
#include "metmorph/numeric.hpp"

namespace metmorph {

/// One row of a slide's cells.csv.
struct CellTableRow {
    std::string tile_id;
    std::uint32_t instance_id = 0;
    CellClass cell_class = CellClass::other;
    bool in_tumor_region = false;
};

struct CellFeatureRecord {
    std::string tile_id;
    std::uint32_t instance_id = 0;
    CellClass cell_class = CellClass::other;
    bool in_tumor_region = false;
    bool degenerate = false;
    bool computed = false; // false for cells outside the feature population
    std::array<double, names::kCellFeatureCount> values{};
};

struct ExtractOptions {
    CannyParams canny;
    /// Compute features for every cell, not only tumor cells and
    /// lymphocytes inside the tumor region.
    bool all_cells = false;
};

/// Splits an instance mask into cells and pairs them with their table rows.
/// Every non-zero id must have exactly one row and vice versa.
inline std::vector<CellInstance> instances_from_mask(const LabelImage& mask,
                                                     const std::vector<CellTableRow>& rows,
                                                     const std::string& tile_id = {})
{
    std::map<std::uint32_t, std::size_t> slot;
    std::vector<CellInstance> cells;
    cells.reserve(rows.size());
    for (const auto& row : rows) {
        if (row.instance_id == 0) throw SchemaError("tile " + tile_id + ": instance_id 0 is background");
        if (!slot.emplace(row.instance_id, cells.size()).second) {
            throw SchemaError("tile " + tile_id + ": duplicate instance_id " + std::to_string(row.instance_id));
        }
        CellInstance c;
        c.instance_id = row.instance_id;
        c.cell_class = row.cell_class;
        c.in_tumor_region = row.in_tumor_region;
        cells.push_back(std::move(c));
    }
    std::vector<std::int32_t> lookup(65536, -1);
    for (const auto& [id, i] : slot) {
        if (id > 65535) throw SchemaError("tile " + tile_id + ": instance_id exceeds 16-bit range");
        lookup[id] = static_cast<std::int32_t>(i);
    }
    for (int r = 0; r < mask.height(); ++r) {
        for (int c = 0; c < mask.width(); ++c) {
            const auto id = mask.at(r, c);
            if (id == 0) continue;
            const auto i = lookup[id];
            if (i < 0) {
                throw SchemaError("tile " + tile_id + ": mask instance " + std::to_string(id) +
                                  " missing from cells.csv");
            }
            cells[i].mask_pixels.push_back({r, c});
        }
    }
    for (auto& cell : cells) {
        if (cell.mask_pixels.empty()) {
            throw SchemaError("tile " + tile_id + ": cells.csv instance " +
                              std::to_string(cell.instance_id) + " absent from mask");
        }
        cell.bbox = bounding_box(cell.mask_pixels);
    }
    return cells;
}

inline bool in_feature_population(const CellInstance& cell)
{
    return cell.in_tumor_region &&
           (cell.cell_class == CellClass::tumor || cell.cell_class == CellClass::lymphocyte);
}

/// All 46 per-cell features. Cells with fewer than three pixels or a
/// bounding box narrower than 2x2 are flagged degenerate.
inline CellFeatureRecord extract_cell(CellInstance& cell, const RgbImage& tile, const ExtractOptions& opt = {})
{
    CellFeatureRecord rec;
    rec.instance_id = cell.instance_id;
    rec.cell_class = cell.cell_class;
    rec.in_tumor_region = cell.in_tumor_region;
    rec.values.fill(kNaN);
    rec.computed = true;
    check_bbox_in_tile(cell.bbox, tile, cell.instance_id);

    auto out = rec.values.begin();
    const bool enough_pixels = cell.mask_pixels.size() >= 3;
    if (enough_pixels) {
        if (cell.outer_contour.empty()) cell.outer_contour = contour::trace_outer(cell.mask_pixels);
        const auto v = extract_shape(cell).values();
        std::copy(v.begin(), v.end(), out);
    }
    out += ShapeFeatures::size;

    const auto color = extract_color(cell.bbox, tile).values();
    out = std::copy(color.begin(), color.end(), out);

    const GrayImage gray = gray_crop(tile, cell.bbox);
    const auto inten = extract_intensity(gray).values();
    out = std::copy(inten.begin(), inten.end(), out);

    const bool big_enough = cell.bbox.height() >= 2 && cell.bbox.width() >= 2;
    if (big_enough) {
        const auto tex = extract_texture(gray, opt.canny).values();
        std::copy(tex.begin(), tex.end(), out);
    }
    rec.degenerate = !enough_pixels || !big_enough;
    return rec;
}

/// Features for every cell of one tile, in cells.csv row order.
inline std::vector<CellFeatureRecord> extract_tile(const std::string& tile_id, const RgbImage& tile,
                                                   const LabelImage& mask,
                                                   const std::vector<CellTableRow>& rows,
                                                   const ExtractOptions& opt = {})
{
    if (tile.height() != mask.height() || tile.width() != mask.width()) {
        throw SchemaError("tile " + tile_id + ": mask and RGB dimensions differ");
    }
    auto cells = instances_from_mask(mask, rows, tile_id);
    std::vector<CellFeatureRecord> out;
    out.reserve(cells.size());
    for (auto& cell : cells) {
        CellFeatureRecord rec;
        if (opt.all_cells || in_feature_population(cell)) {
            rec = extract_cell(cell, tile, opt);
        } else {
            rec.instance_id = cell.instance_id;
            rec.cell_class = cell.cell_class;
            rec.in_tumor_region = cell.in_tumor_region;
            rec.values.fill(kNaN);
        }
        rec.tile_id = tile_id;
        out.push_back(std::move(rec));
    }
    return out;
}

} // namespace metmorph
