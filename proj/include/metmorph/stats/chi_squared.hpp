#pragma once

#include <boost/math/special_functions/gamma.hpp>

#include <stdexcept>
#include <vector>

#include "metmorph/error.hpp"

namespace metmorph {

struct ChiSquaredResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

/// Upper tail of the chi-squared distribution.
inline double chi_squared_sf(double x, int dof)
{
    if (dof <= 0) throw std::invalid_argument("chi_squared_sf: dof must be positive");
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

/// Pearson chi-squared test of independence on an r x c table of counts.
inline ChiSquaredResult chi_squared_independence(const std::vector<std::vector<double>>& table)
{
    const std::size_t r = table.size();
    if (r < 2) throw std::invalid_argument("chi-squared: need at least 2 rows");
    const std::size_t c = table.front().size();
    if (c < 2) throw std::invalid_argument("chi-squared: need at least 2 columns");
    std::vector<double> row(r, 0.0), col(c, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        if (table[i].size() != c) throw std::invalid_argument("chi-squared: ragged table");
        for (std::size_t j = 0; j < c; ++j) {
            if (!(table[i][j] >= 0.0)) throw std::invalid_argument("chi-squared: negative count");
            row[i] += table[i][j];
            col[j] += table[i][j];
            total += table[i][j];
        }
    }
    for (double v : row)
        if (v <= 0.0) throw NumericalError("chi-squared: zero row marginal");
    for (double v : col)
        if (v <= 0.0) throw NumericalError("chi-squared: zero column marginal");

    ChiSquaredResult res;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            const double expected = row[i] * col[j] / total;
            const double d = table[i][j] - expected;
            res.statistic += d * d / expected;
        }
    res.dof = static_cast<int>((r - 1) * (c - 1));
    res.p_value = chi_squared_sf(res.statistic, res.dof);
    return res;
}

} // namespace metmorph
