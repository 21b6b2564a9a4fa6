#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "metmorph/model/cv.hpp"
#include "metmorph/numeric.hpp"

namespace metmorph {

struct StabilityEntry {
    std::string feature_name;
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
    bool selected = false;
    int sign = 0; // +1 altered-associated, -1 wild-type-associated, 0 unselected
};

/// Quartiles of one feature's coefficients across folds; stable when the
/// interquartile interval excludes zero strictly.
inline StabilityEntry coefficient_stability(std::string name, std::vector<double> coefficients)
{
    std::sort(coefficients.begin(), coefficients.end());
    StabilityEntry e;
    e.feature_name = std::move(name);
    e.q25 = percentile_sorted(coefficients, 25.0);
    e.median = percentile_sorted(coefficients, 50.0);
    e.q75 = percentile_sorted(coefficients, 75.0);
    if (e.q25 > 0.0) e.sign = 1;
    if (e.q75 < 0.0) e.sign = -1;
    e.selected = e.sign != 0;
    return e;
}

inline std::vector<StabilityEntry> stability_select(const CvReport& report)
{
    if (report.folds.size() < 4) throw std::invalid_argument("stability selection needs at least 4 folds");
    std::vector<StabilityEntry> out;
    out.reserve(report.feature_names.size());
    std::vector<double> col(report.folds.size());
    for (std::size_t j = 0; j < report.feature_names.size(); ++j) {
        for (std::size_t f = 0; f < report.folds.size(); ++f) col[f] = report.folds[f].coefficients[j];
        out.push_back(coefficient_stability(report.feature_names[j], col));
    }
    return out;
}

} // namespace metmorph
