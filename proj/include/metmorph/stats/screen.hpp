#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "metmorph/cohort.hpp"
#include "metmorph/error.hpp"
#include "metmorph/numeric.hpp"
#include "metmorph/stats/fdr.hpp"
#include "metmorph/stats/mann_whitney.hpp"

namespace metmorph {

enum class Comparison { wt_vs_amp, wt_vs_exon14 };
inline constexpr std::array<Comparison, 2> kComparisons{Comparison::wt_vs_amp, Comparison::wt_vs_exon14};

inline std::string_view to_string(Comparison c) noexcept
{
    return c == Comparison::wt_vs_amp ? "wt_vs_amp" : "wt_vs_exon14";
}

enum class Direction { increased, decreased };

inline std::string_view to_string(Direction d) noexcept
{
    return d == Direction::increased ? "increased" : "decreased";
}

struct UnivariateResult {
    std::string feature_name;
    Comparison comparison = Comparison::wt_vs_amp;
    double u_statistic = kNaN;
    double p_value = 1.0;
    double q_value = 1.0;
    Direction direction = Direction::increased; // altered group relative to wild type
    bool significant = false;
    std::size_t n_wild_type = 0;
    std::size_t n_altered = 0;
};

enum class HeatmapBand { amp_only, both, exon14_only };

inline std::string_view to_string(HeatmapBand b) noexcept
{
    switch (b) {
    case HeatmapBand::amp_only: return "amp_only";
    case HeatmapBand::both: return "both";
    case HeatmapBand::exon14_only: return "exon14_only";
    }
    return "both";
}

/// Group medians of one significant feature after scaling by the wild-type
/// median and MAD (wild-type median is therefore exactly 0).
struct HeatmapRow {
    std::string feature_name;
    HeatmapBand band = HeatmapBand::both;
    double wild_type = 0.0;
    double amplified = kNaN;
    double exon14 = kNaN;
    RobustScale::Source scale_source = RobustScale::Source::mad;
};

struct ScreenConfig {
    bool include_dual = false; // dual-alteration slides join both altered groups
    double alpha = 0.05;
    MwuMode mode = MwuMode::automatic;
    std::size_t min_group_size = 3;
};

struct ScreenResult {
    std::vector<UnivariateResult> results; // feature-major, comparisons in kComparisons order
    std::vector<HeatmapRow> heatmap;
    std::vector<std::string> warnings;
    std::array<bool, 2> ran{false, false};

    const UnivariateResult* find(std::string_view feature, Comparison c) const
    {
        for (const auto& r : results)
            if (r.feature_name == feature && r.comparison == c) return &r;
        return nullptr;
    }
};

namespace detail {

inline bool in_altered_group(MetLabel l, Comparison c, bool include_dual)
{
    if (l == MetLabel::amplified_and_exon14) return include_dual;
    return c == Comparison::wt_vs_amp ? l == MetLabel::amplified : l == MetLabel::exon14;
}

inline std::vector<double> column(const Cohort& cohort, std::size_t f, const std::vector<std::size_t>& rows)
{
    std::vector<double> out;
    out.reserve(rows.size());
    for (auto r : rows) {
        const double v = cohort.slides[r].values[f];
        if (!std::isnan(v)) out.push_back(v);
    }
    return out;
}

} // namespace detail

/// Mann-Whitney screen of every feature for wild type against each altered
/// group, BH-corrected per comparison across features.
inline ScreenResult run_univariate_screen(const Cohort& cohort, const ScreenConfig& cfg = {})
{
    ScreenResult out;
    const std::size_t m = cohort.feature_names.size();
    std::vector<std::size_t> wt;
    std::array<std::vector<std::size_t>, 2> alt;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        const auto& s = cohort.slides[i];
        if (!s.label) throw SchemaError("slide " + s.slide_id + " has no label");
        if (s.values.size() != m) throw SchemaError("slide " + s.slide_id + " has the wrong feature count");
        if (*s.label == MetLabel::wild_type) wt.push_back(i);
        for (std::size_t c = 0; c < 2; ++c)
            if (detail::in_altered_group(*s.label, kComparisons[c], cfg.include_dual)) alt[c].push_back(i);
    }
    if (wt.size() < cfg.min_group_size) throw SchemaError("univariate screen needs at least 3 wild-type slides");

    std::vector<UnivariateResult> per[2];
    for (std::size_t c = 0; c < 2; ++c) {
        if (alt[c].size() < cfg.min_group_size) {
            out.warnings.push_back(std::string(to_string(kComparisons[c])) + ": fewer than " +
                                   std::to_string(cfg.min_group_size) + " altered slides, comparison skipped");
            continue;
        }
        out.ran[c] = true;
        per[c].resize(m);
        std::vector<double> p(m);
        for (std::size_t f = 0; f < m; ++f) {
            auto& r = per[c][f];
            r.feature_name = cohort.feature_names[f];
            r.comparison = kComparisons[c];
            const auto a = detail::column(cohort, f, wt);
            const auto b = detail::column(cohort, f, alt[c]);
            r.n_wild_type = a.size();
            r.n_altered = b.size();
            if (a.size() < cfg.min_group_size || b.size() < cfg.min_group_size) {
                out.warnings.push_back(r.feature_name + ": too few non-missing values for " +
                                       std::string(to_string(kComparisons[c])));
                p[f] = 1.0;
                continue;
            }
            // U counts altered-over-wild-type pairs, so U > n_a n_b / 2 means increased.
            const auto res = mann_whitney_u(b, a, cfg.mode);
            r.u_statistic = res.u;
            r.p_value = res.p_value;
            p[f] = res.p_value;
            const double diff = median(b) - median(a);
            if (diff != 0.0)
                r.direction = diff > 0.0 ? Direction::increased : Direction::decreased;
            else
                r.direction = res.u >= 0.5 * static_cast<double>(a.size() * b.size()) ? Direction::increased
                                                                                       : Direction::decreased;
        }
        const auto q = benjamini_hochberg(p);
        for (std::size_t f = 0; f < m; ++f) {
            per[c][f].q_value = q[f];
            per[c][f].significant = q[f] < cfg.alpha;
        }
    }

    for (std::size_t f = 0; f < m; ++f)
        for (std::size_t c = 0; c < 2; ++c)
            if (out.ran[c]) out.results.push_back(per[c][f]);

    // Heatmap: significant features only, grouped in three bands.
    for (std::size_t f = 0; f < m; ++f) {
        const bool sa = out.ran[0] && per[0][f].significant;
        const bool se = out.ran[1] && per[1][f].significant;
        if (!sa && !se) continue;
        HeatmapRow row;
        row.feature_name = cohort.feature_names[f];
        row.band = sa && se ? HeatmapBand::both : (sa ? HeatmapBand::amp_only : HeatmapBand::exon14_only);
        const auto w = detail::column(cohort, f, wt);
        const auto scale = robust_scale(w);
        row.scale_source = scale.source;
        row.wild_type = 0.0;
        for (std::size_t c = 0; c < 2; ++c) {
            if (alt[c].empty()) continue;
            const auto g = detail::column(cohort, f, alt[c]);
            if (g.empty()) continue;
            (c == 0 ? row.amplified : row.exon14) = scale.apply(median(g));
        }
        out.heatmap.push_back(std::move(row));
    }
    // Within a band, order by the normalized median of the altered group(s).
    auto key = [](const HeatmapRow& r) {
        double k = 0.5 * (r.amplified + r.exon14);
        if (r.band == HeatmapBand::amp_only) k = r.amplified;
        if (r.band == HeatmapBand::exon14_only) k = r.exon14;
        return std::isnan(k) ? -std::numeric_limits<double>::infinity() : k;
    };
    std::stable_sort(out.heatmap.begin(), out.heatmap.end(), [&](const HeatmapRow& a, const HeatmapRow& b) {
        if (a.band != b.band) return static_cast<int>(a.band) < static_cast<int>(b.band);
        return key(a) > key(b);
    });
    return out;
}

} // namespace metmorph
