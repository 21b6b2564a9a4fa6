#pragma once

#include <Eigen/Dense>

#include <array>
#include <vector>

#include "metmorph/model/logistic.hpp"

namespace metmorph {

/// Penalty multipliers tried for the relaxed refit; 1 is the plain lasso.
inline constexpr std::array<double, 5> kRelaxGammas{0.0, 0.25, 0.5, 0.75, 1.0};

inline std::vector<Eigen::Index> active_set(const Eigen::VectorXd& beta)
{
    std::vector<Eigen::Index> out;
    for (Eigen::Index j = 0; j < beta.size(); ++j)
        if (beta[j] != 0.0) out.push_back(j);
    return out;
}

/// Relaxed lasso: refit on the lasso's active set with penalty gamma * lambda.
/// `lasso` may carry a fit already computed at this lambda (e.g. from a path).
inline LogisticFit fit_relaxed_l1(const LogisticData& d, double lambda, double gamma, const SolverOptions& opt = {},
                                  const LogisticFit* lasso = nullptr)
{
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("relaxed: gamma must be in [0, 1]");
    LogisticFit base = lasso ? *lasso : fit_l1_logistic(d, lambda, opt);
    if (gamma == 1.0) return base;
    const auto act = active_set(base.beta);
    if (act.empty()) return null_fit(d, lambda);

    Eigen::MatrixXd xa(d.rows(), static_cast<Eigen::Index>(act.size()));
    LogisticFit warm;
    warm.beta.resize(xa.cols());
    for (std::size_t k = 0; k < act.size(); ++k) {
        xa.col(static_cast<Eigen::Index>(k)) = d.x().col(act[k]);
        warm.beta[static_cast<Eigen::Index>(k)] = base.beta[act[k]];
    }
    warm.intercept = base.intercept;
    const LogisticData da(xa, d.labels(), d.weights());
    const LogisticFit sub = fit_l1_logistic(da, gamma * lambda, opt, &warm);

    LogisticFit out = sub;
    out.lambda = lambda;
    out.beta = Eigen::VectorXd::Zero(d.cols());
    for (std::size_t k = 0; k < act.size(); ++k) out.beta[act[k]] = sub.beta[static_cast<Eigen::Index>(k)];
    return out;
}

} // namespace metmorph
