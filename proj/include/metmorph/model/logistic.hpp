#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "metmorph/error.hpp"
#include "metmorph/numeric.hpp"

namespace metmorph {

struct SolverOptions {
    double tol = 1e-7;          // max coefficient change per sweep
    int max_sweeps = 10000;
    bool record_objective = false;
    double separation_ratio = 0.999; // deviance ratio treated as (quasi-)separation
};

struct LogisticFit {
    Eigen::VectorXd beta;
    double intercept = 0.0;
    double lambda = 0.0;
    int sweeps = 0;
    double deviance_ratio = 0.0;
    std::vector<double> objective_trace; // objective before each sweep, then the final value

    std::size_t active_count() const
    {
        std::size_t k = 0;
        for (Eigen::Index j = 0; j < beta.size(); ++j) k += beta[j] != 0.0;
        return k;
    }
};

class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, LogisticFit last) : NumericalError(what), last_(std::move(last)) {}
    const LogisticFit& last_iterate() const noexcept { return last_; }
    int sweeps() const noexcept { return last_.sweeps; }

private:
    LogisticFit last_;
};

/// The weighted fit explains (almost) all deviance: coefficients diverge.
class SeparationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

inline double soft_threshold(double z, double t)
{
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

/// Design, binary targets and normalized weights, plus per-column quantities
/// reused across a lambda path.
class LogisticData {
public:
    LogisticData(const Eigen::MatrixXd& x, std::span<const int> y, const Eigen::VectorXd& w) : x_(x)
    {
        const auto n = x.rows();
        if (static_cast<std::size_t>(n) != y.size() || w.size() != n)
            throw std::invalid_argument("logistic: X, y and weights disagree in length");
        if (n == 0) throw std::invalid_argument("logistic: empty problem");
        if (!x.allFinite()) throw NumericalError("logistic: non-finite design value");
        labels_.assign(y.begin(), y.end());
        y_.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int v = y[static_cast<std::size_t>(i)];
            if (v != 0 && v != 1) throw std::invalid_argument("logistic: labels must be 0/1");
            y_[i] = v;
        }
        if (!w.allFinite() || (w.array() <= 0.0).any()) throw NumericalError("logistic: weights must be positive");
        wn_ = w / w.sum();
        s1_ = (wn_.array() * y_.array()).sum();
        s0_ = (wn_.array() * (1.0 - y_.array())).sum();
        if (!(s1_ > 0.0 && s0_ > 0.0)) throw NumericalError("logistic: both classes must be present");
        const double b0 = null_intercept();
        null_loss_ = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) null_loss_ += wn_[i] * (log1pexp(b0) - y_[i] * b0);
    }

    const Eigen::MatrixXd& x() const noexcept { return x_; }
    const Eigen::VectorXd& y() const noexcept { return y_; }
    std::span<const int> labels() const noexcept { return labels_; }
    const Eigen::VectorXd& weights() const noexcept { return wn_; }
    Eigen::Index rows() const noexcept { return x_.rows(); }
    Eigen::Index cols() const noexcept { return x_.cols(); }
    double null_loss() const noexcept { return null_loss_; }

    /// Logit of the weighted prevalence: the optimal intercept when beta = 0.
    double null_intercept() const { return std::log(s1_ / s0_); }

    /// Smallest lambda whose solution is all-zero.
    double lambda_max() const
    {
        const double p0 = s1_ / (s1_ + s0_);
        const Eigen::VectorXd r = wn_.array() * (p0 - y_.array());
        return x_.cols() ? (x_.transpose() * r).cwiseAbs().maxCoeff() : 0.0;
    }

private:
    const Eigen::MatrixXd& x_;
    std::vector<int> labels_;
    Eigen::VectorXd y_, wn_;
    double s1_ = 0.0, s0_ = 0.0, null_loss_ = 0.0;
};

/// Weighted mean logistic loss.
inline double logistic_loss(const LogisticData& d, const Eigen::VectorXd& beta, double b0)
{
    const Eigen::VectorXd eta = (d.x() * beta).array() + b0;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i)
        loss += d.weights()[i] * (log1pexp(eta[i]) - d.y()[i] * eta[i]);
    return loss;
}

inline double l1_objective(const LogisticData& d, const Eigen::VectorXd& beta, double b0, double lambda)
{
    return logistic_loss(d, beta, b0) + lambda * beta.lpNorm<1>();
}

struct LossGradient {
    Eigen::VectorXd beta;
    double intercept = 0.0;
};

inline LossGradient logistic_gradient(const LogisticData& d, const Eigen::VectorXd& beta, double b0)
{
    const Eigen::VectorXd eta = (d.x() * beta).array() + b0;
    Eigen::VectorXd r(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) r[i] = d.weights()[i] * (sigmoid(eta[i]) - d.y()[i]);
    return {d.x().transpose() * r, r.sum()};
}

inline LogisticFit null_fit(const LogisticData& d, double lambda)
{
    LogisticFit f;
    f.beta = Eigen::VectorXd::Zero(d.cols());
    f.intercept = d.null_intercept();
    f.lambda = lambda;
    return f;
}

namespace detail {

// Per-sweep objective change allowed for rounding noise.
inline bool non_increasing(double prev, double next)
{
    return next <= prev + 8.0 * std::numeric_limits<double>::epsilon() * std::abs(prev);
}

} // namespace detail

/// L1-penalized weighted logistic regression by proximal Newton. Each sweep
/// builds the second-order model of the loss at the current point, solves the
/// penalized quadratic by coordinate descent (active set, then a full pass),
/// and backtracks along the resulting direction until the objective drops
/// by an Armijo fraction. A sweep that moves no coefficient by more than
/// tol ends the fit.
inline LogisticFit fit_l1_logistic(const LogisticData& d, double lambda, const SolverOptions& opt = {},
                                   const LogisticFit* warm = nullptr)
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be finite and >= 0");
    const Eigen::Index n = d.rows(), p = d.cols();
    if (lambda >= d.lambda_max()) return null_fit(d, lambda);

    LogisticFit f;
    f.lambda = lambda;
    if (warm && warm->beta.size() == p) {
        f.beta = warm->beta;
        f.intercept = warm->intercept;
    } else {
        f.beta = Eigen::VectorXd::Zero(p);
        f.intercept = d.null_intercept();
    }
    const auto& x = d.x();
    const auto& wn = d.weights();
    const auto& y = d.y();

    auto loss_at = [&](const Eigen::VectorXd& eta) {
        double loss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) loss += wn[i] * (log1pexp(eta[i]) - y[i] * eta[i]);
        return loss;
    };

    Eigen::VectorXd eta = (x * f.beta).array() + f.intercept;
    double loss = loss_at(eta);
    double objective = loss + lambda * f.beta.lpNorm<1>();
    Eigen::VectorXd g(n), w(n), r(n), xd(n), eta_try(n), hess(p);
    Eigen::VectorXd trial(p);
    std::vector<char> hess_ready(static_cast<std::size_t>(p));
    std::vector<Eigen::Index> active;
    std::vector<Eigen::Index> slot(static_cast<std::size_t>(p));
    Eigen::MatrixXd xs, gram;
    double last_change = 1.0;

    while (true) {
        if (opt.record_objective) f.objective_trace.push_back(objective);
        f.deviance_ratio = 1.0 - loss / d.null_loss();
        if (!std::isfinite(objective)) throw NumericalError("logistic: objective is not finite");
        if (f.deviance_ratio >= opt.separation_ratio)
            throw SeparationError("logistic: classes are (quasi-)separated at lambda " + std::to_string(lambda));
        if (++f.sweeps > opt.max_sweeps)
            throw ConvergenceError("logistic: no convergence after " + std::to_string(opt.max_sweeps) + " sweeps", f);

        double wsum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double pi = sigmoid(eta[i]);
            g[i] = wn[i] * (pi - y[i]);
            w[i] = wn[i] * std::max(pi * (1.0 - pi), 1e-5);
            wsum += w[i];
        }
        std::fill(hess_ready.begin(), hess_ready.end(), 0);

        // Coordinate descent on the quadratic model; r is its gradient in eta.
        // The model is solved more precisely as the outer steps shrink.
        const double inner_tol = std::max(0.1 * opt.tol, 1e-2 * last_change);
        trial = f.beta;
        double b0 = f.intercept;
        r = g;
        auto pass = [&](bool full) {
            const double d0 = -r.sum() / wsum;
            b0 += d0;
            r += d0 * w;
            double change = std::abs(d0);
            auto visit = [&](Eigen::Index j) {
                if (!hess_ready[static_cast<std::size_t>(j)]) {
                    hess[j] = (w.array() * x.col(j).array().square()).sum();
                    hess_ready[static_cast<std::size_t>(j)] = 1;
                }
                const double h = hess[j];
                if (h <= 0.0) return;
                const double old = trial[j];
                const double next = soft_threshold(h * old - x.col(j).dot(r), lambda) / h;
                const double delta = next - old;
                if (delta == 0.0) return;
                trial[j] = next;
                r.array() += delta * w.array() * x.col(j).array();
                change = std::max(change, std::abs(delta));
            };
            if (full) {
                for (Eigen::Index j = 0; j < p; ++j) visit(j);
            } else {
                for (auto j : active) visit(j);
            }
            return change;
        };
        // Gram entries under this sweep's weights, grown as features enter.
        // Slot 0 is the intercept.
        std::fill(slot.begin(), slot.end(), -1);
        xs.resize(n, 1);
        xs.col(0).setOnes();
        gram.resize(1, 1);
        gram(0, 0) = wsum;
        auto extend_gram = [&](const std::vector<Eigen::Index>& wanted) {
            std::vector<Eigen::Index> fresh;
            for (auto j : wanted)
                if (slot[static_cast<std::size_t>(j)] < 0) fresh.push_back(j);
            if (fresh.empty()) return;
            const Eigen::Index old = xs.cols(), add = static_cast<Eigen::Index>(fresh.size());
            xs.conservativeResize(n, old + add);
            for (Eigen::Index k = 0; k < add; ++k) {
                xs.col(old + k) = x.col(fresh[static_cast<std::size_t>(k)]);
                slot[static_cast<std::size_t>(fresh[static_cast<std::size_t>(k)])] = old + k;
            }
            const Eigen::MatrixXd cross = xs.transpose() * (w.asDiagonal() * xs.rightCols(add));
            gram.conservativeResize(old + add, old + add);
            gram.rightCols(add) = cross;
            gram.bottomRows(add) = cross.transpose();
        };

        // With the sign pattern of the active set held fixed the model is an
        // unconstrained quadratic. Step toward its minimizer, stopping at the
        // first coefficient that would cross zero and dropping it, until a
        // full step keeps every sign. The following full pass checks the
        // inactive set.
        auto direct_solve = [&] {
            extend_gram(active);
            for (int round = 0; round < 64; ++round) {
                const auto m = static_cast<Eigen::Index>(active.size());
                if (m == 0 || m + 1 >= n) return false;
                std::vector<Eigen::Index> idx{0};
                Eigen::VectorXd grad(m + 1);
                grad[0] = r.sum();
                for (Eigen::Index k = 0; k < m; ++k) {
                    const auto j = active[static_cast<std::size_t>(k)];
                    idx.push_back(slot[static_cast<std::size_t>(j)]);
                    grad[k + 1] = x.col(j).dot(r) + lambda * (trial[j] > 0.0 ? 1.0 : -1.0);
                }
                const Eigen::MatrixXd hm = gram(idx, idx);
                const Eigen::LDLT<Eigen::MatrixXd> ldlt(hm);
                if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
                const Eigen::VectorXd step = ldlt.solve(-grad);
                if (!step.allFinite()) return false;
                double t = 1.0;
                Eigen::Index hit = -1;
                for (Eigen::Index k = 0; k < m; ++k) {
                    const double v = trial[active[static_cast<std::size_t>(k)]], sk = step[k + 1];
                    if (v * sk < 0.0 && -v / sk < t) {
                        t = -v / sk;
                        hit = k;
                    }
                }
                b0 += t * step[0];
                xd.setConstant(step[0]);
                for (Eigen::Index k = 0; k < m; ++k) {
                    const auto j = active[static_cast<std::size_t>(k)];
                    trial[j] += t * step[k + 1];
                    xd += step[k + 1] * x.col(j);
                }
                r.array() += t * w.array() * xd.array();
                if (hit < 0) return true;
                const auto j = active[static_cast<std::size_t>(hit)];
                r.array() -= trial[j] * w.array() * x.col(j).array();
                trial[j] = 0.0;
                active.erase(active.begin() + hit);
            }
            return false;
        };
        for (int inner = 0; inner < opt.max_sweeps;) {
            ++inner;
            if (pass(true) < inner_tol) break;
            active.clear();
            for (Eigen::Index j = 0; j < p; ++j)
                if (trial[j] != 0.0) active.push_back(j);
            if (direct_solve()) continue;
            while (inner < opt.max_sweeps && pass(false) >= inner_tol) ++inner;
        }

        // Backtracking along the Newton direction.
        const Eigen::VectorXd dir = trial - f.beta;
        const double dir0 = b0 - f.intercept;
        xd = x * dir;
        xd.array() += dir0;
        const double l1_now = f.beta.lpNorm<1>();
        const double descent = g.dot(xd) + lambda * (trial.lpNorm<1>() - l1_now);
        double step = 1.0, next_loss = loss, next_objective = objective;
        bool moved = false;
        for (int k = 0; k < 60; ++k, step *= 0.5) {
            eta_try = eta + step * xd;
            const double l = loss_at(eta_try);
            const double o = l + lambda * (f.beta + step * dir).lpNorm<1>();
            if (o <= objective + 1e-4 * step * std::min(descent, 0.0) && detail::non_increasing(objective, o)) {
                next_loss = l;
                next_objective = o;
                moved = true;
                break;
            }
        }
        const double change = moved ? step * std::max(dir.cwiseAbs().maxCoeff(), std::abs(dir0)) : 0.0;
        if (moved) {
            f.beta += step * dir;
            f.intercept += step * dir0;
            eta = eta_try;
            loss = next_loss;
            objective = next_objective;
        }
        if (change < opt.tol && inner_tol <= 0.1 * opt.tol) break;
        last_change = change;
    }
    if (opt.record_objective) f.objective_trace.push_back(objective);
    f.deviance_ratio = 1.0 - loss / d.null_loss();
    return f;
}

/// 'count' log-spaced values from lambda_max down to ratio * lambda_max.
inline std::vector<double> lambda_path(double lambda_max, std::size_t count = 50, double ratio = 1e-3)
{
    const double top = lambda_max > 0.0 ? lambda_max : std::numeric_limits<double>::min();
    std::vector<double> out(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double t = count > 1 ? static_cast<double>(k) / static_cast<double>(count - 1) : 0.0;
        out[k] = k == 0 ? top : top * std::pow(ratio, t);
    }
    return out;
}

struct PathResult {
    std::vector<double> lambdas;
    std::vector<LogisticFit> fits; // fits[k] for lambdas[k]; shorter when the path stopped early
    std::string stop_reason;
};

/// Warm-started fits along a descending path. The path stops at the first
/// lambda where the solver reports separation or fails to converge.
inline PathResult fit_path(const LogisticData& d, const std::vector<double>& lambdas, const SolverOptions& opt = {})
{
    PathResult out;
    out.lambdas = lambdas;
    out.fits.reserve(lambdas.size());
    for (double lambda : lambdas) {
        try {
            out.fits.push_back(fit_l1_logistic(d, lambda, opt, out.fits.empty() ? nullptr : &out.fits.back()));
        } catch (const NumericalError& e) {
            out.stop_reason = e.what();
            break;
        }
    }
    return out;
}

inline Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta, double b0)
{
    return (x * beta).array() + b0;
}

inline Eigen::VectorXd predict_probability(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta, double b0)
{
    Eigen::VectorXd eta = linear_predictor(x, beta, b0);
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = sigmoid(eta[i]);
    return eta;
}

} // namespace metmorph
