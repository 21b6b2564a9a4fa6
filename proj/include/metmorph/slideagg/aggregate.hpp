#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "metmorph/cellfeat/extract.hpp"
#include "metmorph/cohort.hpp"
#include "metmorph/error.hpp"
#include "metmorph/feature_names.hpp"
#include "metmorph/numeric.hpp"
#include "metmorph/rng.hpp"

namespace metmorph {

struct AggregationConfig {
    double subsample_fraction = 0.2;
    std::size_t min_cells_full_use = 50;
    double clip_low = 1.0;   // percentile
    double clip_high = 99.0; // percentile
    std::uint64_t seed = 0;
    std::size_t min_usable_cells = 3;

    void validate() const
    {
        if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0))
            throw std::invalid_argument("subsample fraction must be in (0, 1]");
        if (!(clip_low >= 0.0 && clip_low < clip_high && clip_high <= 100.0))
            throw std::invalid_argument("clip percentiles must satisfy 0 <= low < high <= 100");
    }
};

struct Percentages {
    double tumor = 0.0;
    double til = 0.0;
    double lymphocyte = 0.0;
    double non_tumor_lymphocyte = 0.0;
    std::vector<std::string> warnings;

    std::array<double, 4> values() const { return {tumor, til, lymphocyte, non_tumor_lymphocyte}; }
};

/// Cell-type percentages. `cells` is any range of objects exposing
/// `cell_class` and `in_tumor_region`. The TIL percentage is relative to the
/// tumor-cell count and can exceed 1.
template <class Range>
Percentages compute_percentages(const Range& cells)
{
    double total = 0, tumor = 0, lymph = 0, lymph_in_tumor = 0, other = 0;
    for (const auto& c : cells) {
        total += 1;
        switch (c.cell_class) {
        case CellClass::tumor: tumor += 1; break;
        case CellClass::lymphocyte:
            lymph += 1;
            if (c.in_tumor_region) lymph_in_tumor += 1;
            break;
        case CellClass::other: other += 1; break;
        }
    }
    Percentages p;
    if (total > 0) {
        p.tumor = tumor / total;
        p.lymphocyte = lymph / total;
        p.non_tumor_lymphocyte = other / total;
    } else {
        p.warnings.emplace_back("no cells: percentages set to 0");
    }
    if (tumor > 0) {
        p.til = lymph_in_tumor / tumor;
    } else {
        p.warnings.emplace_back("no tumor cells: til percent set to 0");
    }
    return p;
}

/// Clip to the [low, high] percentiles of the sample, then summarize.
inline Moments clipped_moments(std::vector<double> values, double clip_low, double clip_high)
{
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const double lo = percentile_sorted(sorted, clip_low);
    const double hi = percentile_sorted(sorted, clip_high);
    for (auto& v : values) v = std::clamp(v, lo, hi);
    return moments(values);
}

/// Indices of floor(fraction * n) items drawn without replacement, ascending.
/// All items are kept when n < min_full_use or the fraction is 1.
inline std::vector<std::size_t> subsample_indices(std::size_t n, double fraction, std::size_t min_full_use,
                                                  Rng& rng)
{
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (n < min_full_use || fraction >= 1.0) return idx;
    const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
    // partial Fisher-Yates
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

inline std::uint64_t slide_subsample_seed(std::uint64_t seed, std::string_view slide_id)
{
    return derive_seed(seed, hash_string(slide_id));
}

/// Builds the 372-feature slide vector from all per-cell records of a slide.
inline SlideFeatureVector aggregate_slide(const std::string& slide_id,
                                          std::span<const CellFeatureRecord> records,
                                          const AggregationConfig& cfg)
{
    cfg.validate();
    SlideFeatureVector out;
    out.slide_id = slide_id;
    out.values.assign(names::kSlideFeatureCount, kNaN);
    auto& prov = out.provenance;
    prov.subsample_seed = slide_subsample_seed(cfg.seed, slide_id);
    prov.subsample_fraction = cfg.subsample_fraction;

    const Percentages pct = compute_percentages(records);
    const auto pv = pct.values();
    std::copy(pv.begin(), pv.end(), out.values.begin());
    prov.warnings = pct.warnings;

    std::size_t n_tumor = 0, n_lymph = 0, n_other = 0, n_degenerate = 0;
    for (const auto& r : records) {
        if (r.cell_class == CellClass::tumor) ++n_tumor;
        else if (r.cell_class == CellClass::lymphocyte) ++n_lymph;
        else ++n_other;
        if (r.degenerate) ++n_degenerate;
    }
    prov.cell_counts["tumor"] = n_tumor;
    prov.cell_counts["lymphocyte"] = n_lymph;
    prov.cell_counts["other"] = n_other;
    prov.cell_counts["degenerate"] = n_degenerate;

    Rng rng(prov.subsample_seed);
    const std::array<CellClass, 2> types{CellClass::tumor, CellClass::lymphocyte};
    for (std::size_t t = 0; t < types.size(); ++t) {
        std::vector<const CellFeatureRecord*> usable;
        for (const auto& r : records) {
            if (r.cell_class == types[t] && r.in_tumor_region && r.computed && !r.degenerate)
                usable.push_back(&r);
        }
        const auto picked = subsample_indices(usable.size(), cfg.subsample_fraction,
                                              cfg.min_cells_full_use, rng);
        const std::string type_name(names::kCellTypes[t]);
        prov.cell_counts[type_name + "_usable"] = usable.size();
        prov.cell_counts[type_name + "_sampled"] = picked.size();
        if (picked.size() < cfg.min_usable_cells) {
            prov.warnings.push_back(type_name + ": fewer than " + std::to_string(cfg.min_usable_cells) +
                                    " usable cells, summaries missing");
            continue;
        }
        std::vector<double> column(picked.size());
        for (std::size_t f = 0; f < names::kCellFeatureCount; ++f) {
            for (std::size_t i = 0; i < picked.size(); ++i) column[i] = usable[picked[i]]->values[f];
            const Moments m = clipped_moments(column, cfg.clip_low, cfg.clip_high);
            const std::array<double, 4> stats{m.mean, m.std, m.skewness, m.kurtosis};
            for (std::size_t s = 0; s < stats.size(); ++s)
                out.values[names::slide_index(t, f, s)] = stats[s];
        }
    }
    return out;
}

} // namespace metmorph
