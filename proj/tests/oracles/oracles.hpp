#pragma once

// Independent reference implementations used only by tests. They favour
// directness over speed and share no code with the library beyond plain
// data types.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "metmorph/image.hpp"

namespace oracle {

// Haralick ------------------------------------------------------------------

/// Full Ng x Ng symmetric co-occurrence probabilities for one offset.
inline std::vector<std::vector<double>> glcm(const metmorph::LevelImage& img, int dr, int dc, int levels)
{
    std::vector<std::vector<double>> p(levels, std::vector<double>(levels, 0.0));
    double total = 0.0;
    for (int r = 0; r < img.height(); ++r)
        for (int c = 0; c < img.width(); ++c) {
            const int r2 = r + dr, c2 = c + dc;
            if (r2 < 0 || c2 < 0 || r2 >= img.height() || c2 >= img.width()) continue;
            const int a = img.at(r, c), b = img.at(r2, c2);
            p[a][b] += 1.0;
            p[b][a] += 1.0;
            total += 2.0;
        }
    if (total > 0)
        for (auto& row : p)
            for (auto& v : row) v /= total;
    return p;
}

inline double xlogx(double v) { return v > 0.0 ? v * std::log(v) : 0.0; }

/// The ten Haralick quantities straight from their definitions, levels 1..Ng.
inline std::array<double, 10> haralick(const std::vector<std::vector<double>>& p)
{
    const int L = static_cast<int>(p.size());
    std::vector<double> px(L, 0.0), py(L, 0.0), psum(2 * L + 1, 0.0), pdiff(L, 0.0);
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < L; ++j) {
            px[i] += p[i][j];
            py[j] += p[i][j];
            psum[(i + 1) + (j + 1)] += p[i][j];
            pdiff[std::abs(i - j)] += p[i][j];
        }
    double mux = 0, muy = 0;
    for (int i = 0; i < L; ++i) {
        mux += (i + 1) * px[i];
        muy += (i + 1) * py[i];
    }
    double vx = 0, vy = 0;
    for (int i = 0; i < L; ++i) {
        vx += (i + 1 - mux) * (i + 1 - mux) * px[i];
        vy += (i + 1 - muy) * (i + 1 - muy) * py[i];
    }
    double asm_ = 0, contrast = 0, sij = 0, idm = 0, hxy = 0, hxy1 = 0, hxy2 = 0;
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < L; ++j) {
            const double v = p[i][j];
            asm_ += v * v;
            contrast += double(i - j) * double(i - j) * v;
            sij += double(i + 1) * double(j + 1) * v;
            idm += v / (1.0 + double(i - j) * double(i - j));
            hxy -= xlogx(v);
            const double q = px[i] * py[j];
            if (q > 0) {
                hxy1 -= v * std::log(q);
                hxy2 -= q * std::log(q);
            }
        }
    const double sd = std::sqrt(vx) * std::sqrt(vy);
    double sa = 0, sv = 0, mud = 0, dv = 0, hx = 0, hy = 0;
    for (int k = 2; k <= 2 * L; ++k) sa += k * psum[k];
    for (int k = 2; k <= 2 * L; ++k) sv += (k - sa) * (k - sa) * psum[k];
    for (int k = 0; k < L; ++k) mud += k * pdiff[k];
    for (int k = 0; k < L; ++k) dv += (k - mud) * (k - mud) * pdiff[k];
    for (int k = 0; k < L; ++k) {
        hx -= xlogx(px[k]);
        hy -= xlogx(py[k]);
    }
    const double hmax = std::max(hx, hy);
    return {asm_,
            contrast,
            sd > 0 ? (sij - mux * muy) / sd : 0.0,
            vx,
            idm,
            sa,
            sv,
            dv,
            hmax > 0 ? (hxy - hxy1) / hmax : 0.0,
            std::sqrt(std::max(0.0, 1.0 - std::exp(-2.0 * (hxy2 - hxy))))};
}

/// Average over 0, 45, 90 and 135 degrees at distance 1.
inline std::array<double, 10> haralick_mean(const metmorph::LevelImage& img, int levels = 64)
{
    const int offsets[4][2] = {{0, 1}, {-1, 1}, {-1, 0}, {-1, -1}};
    std::array<double, 10> acc{};
    for (const auto& o : offsets) {
        const auto v = haralick(glcm(img, o[0], o[1], levels));
        for (int k = 0; k < 10; ++k) acc[k] += v[k] / 4.0;
    }
    return acc;
}

// Mann-Whitney ---------------------------------------------------------------

/// 2U of a against b by pair counting (ties count one half).
inline long long twice_u(const std::vector<double>& a, const std::vector<double>& b)
{
    long long s = 0;
    for (double x : a)
        for (double y : b) s += x > y ? 2 : (x == y ? 1 : 0);
    return s;
}

/// Exact two-sided p-values for every split of a pooled sample, by
/// enumerating all subsets. Index by subset bitmask (bit i: pooled[i] in a).
inline std::vector<double> exhaustive_split_p(const std::vector<double>& pooled)
{
    const int n = static_cast<int>(pooled.size());
    const std::uint32_t full = (1u << n);
    std::vector<long long> tu(full, 0);
    std::vector<std::map<long long, double>> hist(n + 1);
    for (std::uint32_t m = 0; m < full; ++m) {
        std::vector<double> a, b;
        for (int i = 0; i < n; ++i) ((m >> i) & 1u ? a : b).push_back(pooled[i]);
        tu[m] = twice_u(a, b);
        hist[std::popcount(m)][tu[m]] += 1.0;
    }
    std::vector<double> p(full, 1.0);
    for (std::uint32_t m = 1; m + 1 < full; ++m) {
        const int na = std::popcount(m);
        const long long center = static_cast<long long>(na) * (n - na);
        const long long obs = std::llabs(tu[m] - center);
        double ext = 0, tot = 0;
        for (const auto& [u, c] : hist[na]) {
            tot += c;
            if (std::llabs(u - center) >= obs) ext += c;
        }
        p[m] = ext / tot;
    }
    return p;
}

// Multiple testing -------------------------------------------------------------

/// q_i = min over all j with p_j >= p_i of p_j m / rank_j, capped at 1; ranks
/// by stable ascending order. Quadratic on purpose.
inline std::vector<double> bh_min_over_suffix(const std::vector<double>& p)
{
    const std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
    std::vector<double> q(m);
    for (std::size_t k = 0; k < m; ++k) {
        double best = 1.0;
        for (std::size_t j = k; j < m; ++j) best = std::min(best, p[order[j]] * double(m) / double(j + 1));
        q[order[k]] = best;
    }
    return q;
}

// Percentiles ------------------------------------------------------------------

/// Linear interpolation between order statistics at position q/100 (n - 1).
inline double percentile(std::vector<double> v, double q)
{
    std::sort(v.begin(), v.end());
    const double pos = q / 100.0 * double(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - double(lo)) * (v[hi] - v[lo]);
}

// Logistic regression ------------------------------------------------------------

struct L1Problem {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;  // 0/1
    Eigen::VectorXd w;  // normalized to sum 1
};

inline double sigmoid(double t) { return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t)); }
inline double softplus(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

inline double loss(const L1Problem& pr, const Eigen::VectorXd& beta, double b0)
{
    double s = 0;
    for (Eigen::Index i = 0; i < pr.x.rows(); ++i) {
        const double eta = pr.x.row(i).dot(beta) + b0;
        s += pr.w[i] * (softplus(eta) - pr.y[i] * eta);
    }
    return s;
}

/// Gradient of the weighted mean loss; the last entry is the intercept.
inline Eigen::VectorXd gradient(const L1Problem& pr, const Eigen::VectorXd& beta, double b0)
{
    const Eigen::Index p = pr.x.cols();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p + 1);
    for (Eigen::Index i = 0; i < pr.x.rows(); ++i) {
        const double r = pr.w[i] * (sigmoid(pr.x.row(i).dot(beta) + b0) - pr.y[i]);
        g.head(p) += r * pr.x.row(i).transpose();
        g[p] += r;
    }
    return g;
}

/// Accelerated projected gradient on the split form beta = u - v, u, v >= 0,
/// which turns the L1 penalty into a linear term. Fixed step 1/L with
/// L = 0.25 * ||[X 1]||^2 (an upper bound on the loss curvature).
inline std::pair<Eigen::VectorXd, double> projected_gradient_l1(const L1Problem& pr, double lambda,
                                                                int max_iter = 2000000, double tol = 1e-13)
{
    const Eigen::Index p = pr.x.cols();
    Eigen::MatrixXd xa(pr.x.rows(), p + 1);
    xa << pr.x, Eigen::VectorXd::Ones(pr.x.rows());
    Eigen::MatrixXd xw = xa;
    for (Eigen::Index i = 0; i < xa.rows(); ++i) xw.row(i) *= std::sqrt(pr.w[i]);
    const double L = 0.25 * xw.squaredNorm() + 1e-12; // Frobenius bound on the spectral norm
    // z = [u, v, b0]
    Eigen::VectorXd z = Eigen::VectorXd::Zero(2 * p + 1), z_prev = z, yk = z;
    double t = 1.0;
    auto grad_z = [&](const Eigen::VectorXd& zz) {
        const Eigen::VectorXd beta = zz.head(p) - zz.segment(p, p);
        const Eigen::VectorXd g = gradient(pr, beta, zz[2 * p]);
        Eigen::VectorXd out(2 * p + 1);
        out.head(p) = g.head(p).array() + lambda;
        out.segment(p, p) = -g.head(p).array() + lambda;
        out[2 * p] = g[p];
        return out;
    };
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd next = yk - grad_z(yk) / L;
        next.head(2 * p) = next.head(2 * p).cwiseMax(0.0);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double change = (next - z).cwiseAbs().maxCoeff();
        z_prev = z;
        z = next;
        yk = z + ((t - 1.0) / t_next) * (z - z_prev);
        t = t_next;
        if (it % 1000 == 999) t = 1.0; // periodic restart keeps the iteration monotone enough
        if (change < tol && it > 10) break;
    }
    return {z.head(p) - z.segment(p, p), z[2 * p]};
}

/// Unpenalized weighted logistic fit by damped Newton iterations.
inline std::pair<Eigen::VectorXd, double> newton_unpenalized(const L1Problem& pr, int iters = 100)
{
    const Eigen::Index p = pr.x.cols(), n = pr.x.rows();
    Eigen::MatrixXd xa(n, p + 1);
    xa << pr.x, Eigen::VectorXd::Ones(n);
    Eigen::VectorXd th = Eigen::VectorXd::Zero(p + 1);
    for (int it = 0; it < iters; ++it) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(p + 1);
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(p + 1, p + 1);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mu = sigmoid(xa.row(i).dot(th));
            g += pr.w[i] * (mu - pr.y[i]) * xa.row(i).transpose();
            h += pr.w[i] * mu * (1 - mu) * xa.row(i).transpose() * xa.row(i);
        }
        const Eigen::VectorXd step = h.ldlt().solve(g);
        const auto obj = [&](const Eigen::VectorXd& v) { return loss(pr, v.head(p), v[p]); };
        double a = 1.0;
        const double f0 = obj(th);
        while (a > 1e-10 && obj(th - a * step) > f0) a *= 0.5;
        th -= a * step;
        if (step.cwiseAbs().maxCoeff() < 1e-14) break;
    }
    return {th.head(p), th[p]};
}

} // namespace oracle
