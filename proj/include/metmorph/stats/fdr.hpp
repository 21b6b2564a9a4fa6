#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace metmorph {

/// Benjamini-Hochberg step-up q-values, returned in input order:
/// q_(i) = min_{j >= i} p_(j) m / j, capped at 1.
inline std::vector<double> benjamini_hochberg(std::span<const double> p)
{
    const std::size_t m = p.size();
    std::vector<double> q(m);
    if (m == 0) return q;
    for (double v : p)
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("benjamini_hochberg: p outside [0, 1]");

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });

    double running = 1.0;
    for (std::size_t k = m; k-- > 0;) {
        // p m / m can round below p, so the top rank uses p itself
        const double term = k + 1 == m ? p[order[k]] : p[order[k]] * static_cast<double>(m) / static_cast<double>(k + 1);
        running = std::min(running, term);
        q[order[k]] = running;
    }
    return q;
}

} // namespace metmorph
