#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "metmorph/error.hpp"
#include "metmorph/feature_names.hpp"

namespace metmorph {

enum class MetLabel { wild_type, amplified, exon14, amplified_and_exon14 };

inline constexpr std::array<MetLabel, 4> kAllLabels{MetLabel::wild_type, MetLabel::amplified,
                                                    MetLabel::exon14, MetLabel::amplified_and_exon14};

inline std::string_view to_string(MetLabel l) noexcept
{
    switch (l) {
    case MetLabel::wild_type: return "wild_type";
    case MetLabel::amplified: return "amplified";
    case MetLabel::exon14: return "exon14";
    case MetLabel::amplified_and_exon14: return "amplified_and_exon14";
    }
    return "wild_type";
}

inline MetLabel parse_label(std::string_view s)
{
    for (auto l : kAllLabels)
        if (to_string(l) == s) return l;
    throw SchemaError("unknown MET label '" + std::string(s) + "'");
}

/// Binary modelling target: 0 = wild type, 1 = any MET alteration.
inline int is_altered(MetLabel l) noexcept { return l == MetLabel::wild_type ? 0 : 1; }

struct SlideProvenance {
    std::uint64_t subsample_seed = 0;
    double subsample_fraction = 0.0;
    std::map<std::string, std::size_t> cell_counts; // per class, plus sampled counts
    std::vector<std::string> warnings;
};

/// Slide-level feature vector; missing summaries are NaN.
struct SlideFeatureVector {
    std::string slide_id;
    std::optional<MetLabel> label;
    std::vector<double> values;
    SlideProvenance provenance;
};

enum class Split { train, holdout, unassigned };

inline std::string_view to_string(Split s) noexcept
{
    switch (s) {
    case Split::train: return "train";
    case Split::holdout: return "holdout";
    case Split::unassigned: return "unassigned";
    }
    return "unassigned";
}

inline Split parse_split(std::string_view s)
{
    if (s == "train") return Split::train;
    if (s == "holdout") return Split::holdout;
    if (s == "unassigned" || s.empty()) return Split::unassigned;
    throw SchemaError("unknown split '" + std::string(s) + "'");
}

/// One row of the label manifest.
struct ManifestRow {
    std::string slide_id;
    MetLabel label = MetLabel::wild_type;
    std::string procedure_type;
    Split split = Split::unassigned;
};

/// A set of slides sharing one feature-name list.
struct Cohort {
    std::vector<std::string> feature_names = names::slide_feature_names();
    std::vector<SlideFeatureVector> slides;

    std::size_t size() const noexcept { return slides.size(); }

    std::optional<std::size_t> feature_index(std::string_view name) const
    {
        for (std::size_t i = 0; i < feature_names.size(); ++i)
            if (feature_names[i] == name) return i;
        return std::nullopt;
    }

    Cohort subset(const std::vector<std::size_t>& rows) const
    {
        Cohort out;
        out.feature_names = feature_names;
        out.slides.reserve(rows.size());
        for (auto r : rows) out.slides.push_back(slides[r]);
        return out;
    }

    /// Binary targets; every slide must be labelled.
    std::vector<int> binary_labels() const
    {
        std::vector<int> y;
        y.reserve(slides.size());
        for (const auto& s : slides) {
            if (!s.label) throw SchemaError("slide " + s.slide_id + " has no label");
            y.push_back(is_altered(*s.label));
        }
        return y;
    }
};

} // namespace metmorph
