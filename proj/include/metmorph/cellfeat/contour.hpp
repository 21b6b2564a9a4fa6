#pragma once

// Border following and polygon geometry on pixel-center coordinates.
// The traced contour is the ordered sequence of boundary pixel centers of an
// 8-connected region (the same vertex convention as OpenCV's findContours with
// CHAIN_APPROX_NONE), so one-pixel-wide parts are walked out and back.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "metmorph/cellfeat/cell.hpp"
#include "metmorph/numeric.hpp"

namespace metmorph::contour {

// Clockwise (on screen, rows pointing down) starting east.
inline constexpr std::array<PixelCoord, 8> kNeighbours{{
    {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1},
}};

/// Radial-sweep tracing of the outer border of the region containing the
/// first pixel of `pixels` in raster order. `pixels` must be in raster order.
inline std::vector<PixelCoord> trace_outer(const std::vector<PixelCoord>& pixels)
{
    std::vector<PixelCoord> out;
    if (pixels.empty()) return out;

    const BoundingBox box = bounding_box(pixels);
    // local occupancy grid with a one-pixel background frame
    const int h = box.height() + 2;
    const int w = box.width() + 2;
    std::vector<std::uint8_t> grid(static_cast<std::size_t>(h) * w, 0);
    auto cell = [&](int r, int c) -> std::uint8_t& {
        return grid[static_cast<std::size_t>(r - box.row_min + 1) * w + (c - box.col_min + 1)];
    };
    for (const auto& p : pixels) cell(p.row, p.col) = 1;

    const PixelCoord start = pixels.front();
    out.push_back(start);

    auto find_next = [&](PixelCoord cur, int back_dir, int& found_dir) -> bool {
        for (int k = 1; k <= 8; ++k) {
            const int d = (back_dir + k) % 8;
            const PixelCoord n{cur.row + kNeighbours[d].row, cur.col + kNeighbours[d].col};
            if (cell(n.row, n.col)) {
                found_dir = d;
                return true;
            }
        }
        return false;
    };

    // The raster-first pixel has background to its west.
    int dir = 0;
    if (!find_next(start, 4, dir)) return out; // isolated pixel

    const PixelCoord first_step{start.row + kNeighbours[dir].row, start.col + kNeighbours[dir].col};
    PixelCoord cur = first_step;
    int back = (dir + 4) % 8;
    const std::size_t limit = 4 * pixels.size() + 8;
    while (out.size() <= limit) {
        out.push_back(cur);
        int d = 0;
        find_next(cur, back, d);
        const PixelCoord next{cur.row + kNeighbours[d].row, cur.col + kNeighbours[d].col};
        if (cur == start && next == first_step) {
            out.pop_back(); // closing vertex repeats the start
            break;
        }
        back = (d + 4) % 8;
        cur = next;
    }
    return out;
}

/// Twice the signed shoelace area, exact in integer arithmetic.
inline long long twice_signed_area(std::span<const PixelCoord> poly)
{
    long long acc = 0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = poly[i];
        const auto& b = poly[(i + 1) % n];
        acc += static_cast<long long>(a.col) * b.row - static_cast<long long>(b.col) * a.row;
    }
    return acc;
}

inline double polygon_area(std::span<const PixelCoord> poly)
{
    if (poly.size() < 3) return 0.0;
    return 0.5 * static_cast<double>(std::llabs(twice_signed_area(poly)));
}

/// Length of the closed polygon. Edges are summed exactly so the result does
/// not depend on the starting vertex or orientation.
inline double polygon_perimeter(std::span<const PixelCoord> poly)
{
    const std::size_t n = poly.size();
    if (n < 2) return 0.0;
    std::vector<double> edges(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = poly[i];
        const auto& b = poly[(i + 1) % n];
        const double dc = b.col - a.col, dr = b.row - a.row;
        edges[i] = std::sqrt(dc * dc + dr * dr); // integer radicand, so correctly rounded
    }
    return exact_sum(edges);
}

/// Convex hull by monotone chain; collinear points are dropped.
inline std::vector<PixelCoord> convex_hull(std::span<const PixelCoord> pts)
{
    std::vector<PixelCoord> p(pts.begin(), pts.end());
    std::sort(p.begin(), p.end(), [](const PixelCoord& a, const PixelCoord& b) {
        return a.col != b.col ? a.col < b.col : a.row < b.row;
    });
    p.erase(std::unique(p.begin(), p.end()), p.end());
    if (p.size() < 3) return p;

    auto cross = [](const PixelCoord& o, const PixelCoord& a, const PixelCoord& b) {
        return static_cast<long long>(a.col - o.col) * (b.row - o.row) -
               static_cast<long long>(a.row - o.row) * (b.col - o.col);
    };
    std::vector<PixelCoord> hull(2 * p.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p[i]) <= 0) --k;
        hull[k++] = p[i];
    }
    for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], p[i]) <= 0) --k;
        hull[k++] = p[i];
    }
    hull.resize(k - 1);
    return hull;
}

/// Maximum distance between any two points (Feret diameter).
inline double max_pairwise_distance(std::span<const PixelCoord> pts)
{
    long long best = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            const long long dr = pts[i].row - pts[j].row;
            const long long dc = pts[i].col - pts[j].col;
            best = std::max(best, dr * dr + dc * dc);
        }
    }
    return std::sqrt(static_cast<double>(best));
}

} // namespace metmorph::contour
