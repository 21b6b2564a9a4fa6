#pragma once

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "metmorph/cellfeat/cell.hpp"
#include "metmorph/cellfeat/color.hpp"
#include "metmorph/cellfeat/extract.hpp"
#include "metmorph/cohort.hpp"
#include "metmorph/error.hpp"
#include "metmorph/image.hpp"
#include "metmorph/parallel.hpp"
#include "metmorph/rng.hpp"
#include "metmorph/slideagg/aggregate.hpp"
#include "metmorph/synth/spec.hpp"

namespace metmorph::synth {

struct Ellipse {
    double cy = 0.0, cx = 0.0; // continuous coordinates, pixel (r, c) spans [r, r+1) x [c, c+1)
    double a = 1.0, b = 1.0;   // semi-axes, a along theta
    double theta = 0.0;
};

/// Pixels whose centers lie inside the ellipse, in raster order.
inline std::vector<PixelCoord> rasterize_ellipse(const Ellipse& e, int height, int width)
{
    std::vector<PixelCoord> out;
    const double ct = std::cos(e.theta), st = std::sin(e.theta);
    const int r0 = std::max(0, static_cast<int>(std::floor(e.cy - e.a - 1)));
    const int r1 = std::min(height - 1, static_cast<int>(std::ceil(e.cy + e.a + 1)));
    const int c0 = std::max(0, static_cast<int>(std::floor(e.cx - e.a - 1)));
    const int c1 = std::min(width - 1, static_cast<int>(std::ceil(e.cx + e.a + 1)));
    for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
            const double dx = c + 0.5 - e.cx, dy = r + 0.5 - e.cy;
            const double u = dx * ct + dy * st;
            const double v = -dx * st + dy * ct;
            if ((u * u) / (e.a * e.a) + (v * v) / (e.b * e.b) <= 1.0) out.push_back({r, c});
        }
    }
    return out;
}

inline std::array<double, 3> rotate_hue(const std::array<double, 3>& rgb, double turns)
{
    const Hsv hsv = rgb_to_hsv(rgb[0], rgb[1], rgb[2]);
    double h = std::fmod(hsv.hue + turns, 1.0);
    if (h < 0) h += 1.0;
    const double v = hsv.value * 255.0, s = hsv.saturation;
    const double h6 = h * 6.0;
    const int sector = static_cast<int>(std::floor(h6)) % 6;
    const double f = h6 - std::floor(h6);
    const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
    switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
    }
}

struct SlidePlan {
    std::size_t index = 0;
    std::string slide_id;
    MetLabel label = MetLabel::wild_type;
};

/// Slide ids S0001... assigned label block by label block.
inline std::vector<SlidePlan> plan_slides(const GeneratorSpec& spec)
{
    std::vector<SlidePlan> out;
    const int width = std::max<int>(4, static_cast<int>(std::to_string(spec.total_slides()).size()));
    for (std::size_t l = 0; l < kAllLabels.size(); ++l) {
        for (std::size_t k = 0; k < spec.n_slides[l]; ++k) {
            SlidePlan p;
            p.index = out.size();
            char buf[32];
            std::snprintf(buf, sizeof buf, "S%0*zu", width, p.index + 1);
            p.slide_id = buf;
            p.label = kAllLabels[l];
            out.push_back(std::move(p));
        }
    }
    return out;
}

inline constexpr std::array<const char*, 3> kGeneratedTypes{"tumor", "lymph", "other"};

/// Latent value per (cell type, knob) for one slide.
using SlideLatents = std::array<std::array<double, kKnobs.size()>, 3>;

inline SlideLatents sample_latents(const GeneratorSpec& spec, MetLabel label, Rng& rng)
{
    SlideLatents out{};
    const auto effects = spec.effects_for(label);
    for (std::size_t t = 0; t < 3; ++t) {
        const auto& m = spec.morphology(kGeneratedTypes[t]);
        for (std::size_t k = 0; k < kKnobs.size(); ++k) {
            const Latent& l = m.latent(kKnobs[k]);
            double v = l.mean + l.slide_sd * rng.normal();
            for (const auto& e : effects)
                if (e.knob == kKnobs[k] && e.cell_type == kGeneratedTypes[t]) v += e.effect_mad * kGaussianMad * l.slide_sd;
            out[t][k] = v;
        }
    }
    return out;
}

struct GeneratedTile {
    std::string tile_id;
    RgbImage rgb;
    LabelImage mask;
};

struct GeneratedSlide {
    SlidePlan plan;
    std::uint64_t seed = 0;
    std::string procedure_type;
    SlideLatents latents{};
    std::vector<GeneratedTile> tiles;
    std::vector<CellTableRow> cells;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::uint8_t to_u8(double v) { return static_cast<std::uint8_t>(std::floor(std::clamp(v, 0.0, 255.0) + 0.5)); }

struct CellDraw {
    CellClass cls = CellClass::tumor;
    bool in_region = true;
    Ellipse shape;
    std::array<double, 3> rgb{};
    double texture_sd = 0.0;
};

struct TileCanvas {
    GeneratedTile tile;
    std::vector<std::array<double, 3>> circles; // cy, cx, radius
    std::uint16_t next_id = 1;
};

/// Standard normal quantiles at the midpoints of 4096 equal-probability
/// bins. Background pixels index it with 12 random bits, five per draw.
inline const std::array<double, 4096>& normal_table()
{
    static const auto table = [] {
        std::array<double, 4096> t{};
        const boost::math::normal_distribution<double> z;
        for (std::size_t k = 0; k < t.size(); ++k) t[k] = boost::math::quantile(z, (k + 0.5) / 4096.0);
        return t;
    }();
    return table;
}

inline TileCanvas new_canvas(const GeneratorSpec& spec, std::size_t index, Rng& rng)
{
    TileCanvas c;
    char buf[32];
    std::snprintf(buf, sizeof buf, "tile_%03zu", index);
    c.tile.tile_id = buf;
    c.tile.rgb = RgbImage(spec.tile_size, spec.tile_size);
    c.tile.mask = LabelImage(spec.tile_size, spec.tile_size, 0);
    const auto& table = normal_table();
    auto& px = c.tile.rgb.data();
    std::uint64_t bits = 0;
    int left = 0;
    for (std::size_t i = 0; i < px.size(); ++i) {
        if (left == 0) {
            bits = rng.next();
            left = 5;
        }
        const double z = table[bits & 4095u];
        bits >>= 12;
        --left;
        px[i] = to_u8(spec.background_rgb[i % 3] + spec.background_noise_sd * z);
    }
    return c;
}

inline bool try_place(TileCanvas& canvas, CellDraw& cell, int size, int attempts, Rng& rng)
{
    const double r = cell.shape.a;
    const double lo = r + 1.0, hi = size - r - 1.0;
    if (hi <= lo) return false;
    for (int k = 0; k < attempts; ++k) {
        const double cy = rng.uniform(lo, hi), cx = rng.uniform(lo, hi);
        bool clear = true;
        for (const auto& o : canvas.circles) {
            const double need = o[2] + r + 1.0;
            const double dy = o[0] - cy, dx = o[1] - cx;
            if (dy * dy + dx * dx < need * need) {
                clear = false;
                break;
            }
        }
        if (!clear) continue;
        cell.shape.cy = cy;
        cell.shape.cx = cx;
        canvas.circles.push_back({cy, cx, r});
        return true;
    }
    return false;
}

inline void paint(TileCanvas& canvas, const CellDraw& cell, std::uint16_t id, Rng& rng)
{
    auto& img = canvas.tile.rgb;
    const auto pixels = rasterize_ellipse(cell.shape, img.height(), img.width());
    for (const auto& p : pixels) {
        canvas.tile.mask.at(p.row, p.col) = id;
        const double noise = cell.texture_sd * rng.normal();
        for (int ch = 0; ch < 3; ++ch) img.at(p.row, p.col, ch) = to_u8(cell.rgb[ch] + noise);
    }
}

} // namespace detail

/// Renders one slide. Everything derives from (spec seed, slide index).
inline GeneratedSlide generate_slide(const GeneratorSpec& spec, const SlidePlan& plan)
{
    GeneratedSlide s;
    s.plan = plan;
    s.seed = derive_seed(spec.seed, plan.index);
    Rng rng(s.seed);

    double u = rng.uniform(), acc = 0.0, total_p = 0.0;
    for (const auto& pt : spec.procedure_types) total_p += pt.second;
    s.procedure_type = spec.procedure_types.back().first;
    for (const auto& pt : spec.procedure_types) {
        acc += pt.second / total_p;
        if (u < acc) {
            s.procedure_type = pt.first;
            break;
        }
    }
    s.latents = sample_latents(spec, plan.label, rng);

    const auto n = static_cast<int>(rng.between(spec.cells_min, spec.cells_max));
    const double ft = std::clamp(spec.tumor_fraction + spec.tumor_fraction_sd * rng.normal(), 0.05, 0.95);
    const double fl = std::clamp(spec.lymph_fraction + spec.lymph_fraction_sd * rng.normal(), 0.02, 1.0 - ft);
    const double til = std::clamp(spec.til_fraction + spec.til_fraction_sd * rng.normal(), 0.0, 1.0);
    const int nt = static_cast<int>(std::lround(n * ft));
    const int nl = std::min(n - nt, static_cast<int>(std::lround(n * fl)));
    std::vector<CellClass> classes;
    classes.insert(classes.end(), static_cast<std::size_t>(nt), CellClass::tumor);
    classes.insert(classes.end(), static_cast<std::size_t>(nl), CellClass::lymphocyte);
    classes.insert(classes.end(), static_cast<std::size_t>(n - nt - nl), CellClass::other);
    shuffle(std::span<CellClass>(classes), rng);

    std::vector<detail::TileCanvas> done;
    detail::TileCanvas canvas = detail::new_canvas(spec, 0, rng);
    int placed_here = 0;
    for (const CellClass cls : classes) {
        const std::size_t t = cls == CellClass::tumor ? 0 : cls == CellClass::lymphocyte ? 1 : 2;
        const auto& m = spec.morphology(kGeneratedTypes[t]);
        const auto& lat = s.latents[t];
        auto knob = [&](Knob k) { return lat[static_cast<std::size_t>(k)]; };

        detail::CellDraw cell;
        cell.cls = cls;
        cell.in_region = cls == CellClass::tumor || rng.bernoulli(cls == CellClass::lymphocyte ? til : spec.other_in_region);
        const double radius = std::exp(knob(Knob::size) + std::exp(knob(Knob::size_skew)) * rng.normal());
        const double log_q = std::max(0.0, knob(Knob::elongation) + m.elongation_cell_sd * rng.normal());
        const double q = std::exp(log_q);
        cell.shape.a = std::clamp(radius * std::sqrt(q), 1.6, 0.25 * spec.tile_size);
        cell.shape.b = std::clamp(radius / std::sqrt(q), 1.6, cell.shape.a);
        cell.shape.theta = rng.uniform(0.0, std::numbers::pi);
        cell.rgb = rotate_hue(m.base_rgb, knob(Knob::hue));
        cell.rgb[0] += knob(Knob::red);
        const double jitter = m.color_jitter_sd * rng.normal();
        for (auto& ch : cell.rgb) ch += jitter;
        cell.texture_sd = std::exp(knob(Knob::texture));

        if (placed_here >= spec.cells_per_tile ||
            !detail::try_place(canvas, cell, spec.tile_size, spec.placement_attempts, rng)) {
            if (placed_here < spec.cells_per_tile)
                s.warnings.push_back(canvas.tile.tile_id + ": placement failed after " + std::to_string(placed_here) +
                                     " cells, density reduced");
            done.push_back(std::move(canvas));
            canvas = detail::new_canvas(spec, done.size(), rng);
            placed_here = 0;
            if (!detail::try_place(canvas, cell, spec.tile_size, spec.placement_attempts, rng))
                throw Error("generator: cannot place a cell on an empty tile; cells too large for tile_size");
        }
        const auto id = canvas.next_id++;
        detail::paint(canvas, cell, id, rng);
        s.cells.push_back({canvas.tile.tile_id, id, cls, cell.in_region});
        ++placed_here;
    }
    done.push_back(std::move(canvas));
    for (auto& c : done) s.tiles.push_back(std::move(c.tile));
    return s;
}

/// Cell features for every tile of a generated slide, as extraction from
/// disk would produce them.
inline std::vector<CellFeatureRecord> extract_generated(const GeneratedSlide& s, const ExtractOptions& opt = {})
{
    std::vector<CellFeatureRecord> out;
    for (const auto& tile : s.tiles) {
        std::vector<CellTableRow> rows;
        for (const auto& c : s.cells)
            if (c.tile_id == tile.tile_id) rows.push_back(c);
        auto recs = extract_tile(tile.tile_id, tile.rgb, tile.mask, rows, opt);
        out.insert(out.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
    }
    return out;
}

struct SynthCohort {
    Cohort cohort;
    std::vector<ManifestRow> manifest;
    std::vector<std::string> warnings;
};

/// Generates, extracts and aggregates every slide without touching disk.
inline SynthCohort synthesize_cohort(const GeneratorSpec& spec, const AggregationConfig& agg = {},
                                     const ExtractOptions& opt = {}, unsigned jobs = 1)
{
    spec.validate();
    const auto plans = plan_slides(spec);
    std::vector<SlideFeatureVector> slides(plans.size());
    std::vector<std::string> procedures(plans.size());
    std::vector<std::vector<std::string>> warnings(plans.size());
    parallel_for(plans.size(), jobs, [&](std::size_t i) {
        auto g = generate_slide(spec, plans[i]);
        const auto records = extract_generated(g, opt);
        slides[i] = aggregate_slide(g.plan.slide_id, records, agg);
        slides[i].label = g.plan.label;
        procedures[i] = g.procedure_type;
        warnings[i] = std::move(g.warnings);
    });
    SynthCohort out;
    for (std::size_t i = 0; i < plans.size(); ++i) {
        out.manifest.push_back({plans[i].slide_id, plans[i].label, procedures[i], Split::unassigned});
        for (auto& w : warnings[i]) out.warnings.push_back(plans[i].slide_id + ": " + w);
        out.cohort.slides.push_back(std::move(slides[i]));
    }
    return out;
}

} // namespace metmorph::synth
