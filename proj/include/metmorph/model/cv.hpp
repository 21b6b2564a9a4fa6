#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "metmorph/cohort.hpp"
#include "metmorph/error.hpp"
#include "metmorph/model/class_weights.hpp"
#include "metmorph/model/logistic.hpp"
#include "metmorph/model/metrics.hpp"
#include "metmorph/model/relaxed.hpp"
#include "metmorph/model/split.hpp"
#include "metmorph/model/transform.hpp"
#include "metmorph/parallel.hpp"
#include "metmorph/rng.hpp"

namespace metmorph {

/// Repeated k-fold layout, written "RxK".
struct CvDesign {
    int repeats = 10;
    int folds = 10;

    std::string to_string() const { return std::to_string(repeats) + "x" + std::to_string(folds); }

    static CvDesign parse(std::string_view s)
    {
        const auto x = s.find_first_of("xX");
        CvDesign d;
        try {
            if (x == std::string_view::npos) throw std::invalid_argument("no x");
            std::size_t used = 0;
            const std::string r(s.substr(0, x)), k(s.substr(x + 1));
            d.repeats = std::stoi(r, &used);
            if (used != r.size()) throw std::invalid_argument("trailing");
            d.folds = std::stoi(k, &used);
            if (used != k.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw SchemaError("cannot parse CV design '" + std::string(s) + "' (expected RxK)");
        }
        if (d.repeats < 1 || d.folds < 2) throw SchemaError("CV design needs R >= 1 and K >= 2");
        return d;
    }

    friend bool operator==(const CvDesign&, const CvDesign&) = default;
};

struct Candidate {
    bool relaxed = false;
    ClassWeightSpec weights;

    std::string name() const { return std::string(relaxed ? "relaxed" : "lasso") + "|" + weights.to_string(); }
};

/// {lasso, relaxed} x {balanced, (0.3, 0.7), (0.5, 0.5)}.
inline std::vector<Candidate> default_candidates()
{
    std::vector<Candidate> out;
    for (bool relaxed : {false, true})
        for (const auto& w : {ClassWeightSpec::make_balanced(), ClassWeightSpec::fixed(0.3, 0.7),
                              ClassWeightSpec::fixed(0.5, 0.5)})
            out.push_back({relaxed, w});
    return out;
}

struct TuningConfig {
    CvDesign inner{5, 5};
    std::size_t n_lambda = 50;
    double lambda_ratio = 1e-3;
    std::vector<double> gammas{kRelaxGammas.begin(), kRelaxGammas.end()};
    TransformOptions transform;
    SolverOptions solver;
};

struct TuningResult {
    std::vector<double> lambdas;
    std::vector<double> gammas;
    std::vector<std::vector<double>> mean_auc; // [lambda][gamma]; NaN = excluded
    std::size_t lambda_index = 0;
    double lambda = 0.0;
    double gamma = 1.0;
    double inner_auc = 0.5;
};

/// Transform, design and weights fitted on one training portion.
struct PreparedSplit {
    TransformParams transform;
    Eigen::MatrixXd x;
    std::vector<int> y;
    Eigen::VectorXd w;
};

inline PreparedSplit prepare_split(const Cohort& train, const Candidate& c, const TransformOptions& topt)
{
    PreparedSplit s;
    s.transform = fit_transform(train, topt);
    s.x = apply_transform(s.transform, train);
    s.y = train.binary_labels();
    s.w = sample_weights(s.y, c.weights);
    return s;
}

inline std::vector<double> linear_scores(const Eigen::MatrixXd& x, const LogisticFit& f)
{
    const Eigen::VectorXd eta = linear_predictor(x, f.beta, f.intercept);
    return {eta.data(), eta.data() + eta.size()};
}

namespace detail {

inline std::vector<std::size_t> rows_where(const std::vector<int>& fold, int k, bool equal)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold.size(); ++i)
        if ((fold[i] == k) == equal) out.push_back(i);
    return out;
}

/// Validation AUC on a (lambda, gamma) grid for one inner split.
inline std::vector<std::vector<double>> inner_grid(const Cohort& tr, const Cohort& va, const Candidate& c,
                                                   const TuningConfig& cfg, const std::vector<double>& lambdas,
                                                   const std::vector<double>& gammas)
{
    std::vector<std::vector<double>> auc(lambdas.size(), std::vector<double>(gammas.size(), kNaN));
    const auto s = prepare_split(tr, c, cfg.transform);
    const Eigen::MatrixXd xv = apply_transform(s.transform, va);
    const auto yv = va.binary_labels();
    const LogisticData d(s.x, s.y, s.w);
    const auto path = fit_path(d, lambdas, cfg.solver);
    for (std::size_t k = 0; k < path.fits.size(); ++k) {
        for (std::size_t g = 0; g < gammas.size(); ++g) {
            if (gammas[g] == 1.0) {
                auc[k][g] = roc_auc(linear_scores(xv, path.fits[k]), yv);
                continue;
            }
            try {
                const auto f = fit_relaxed_l1(d, lambdas[k], gammas[g], cfg.solver, &path.fits[k]);
                auc[k][g] = roc_auc(linear_scores(xv, f), yv);
            } catch (const NumericalError&) {
                // separated or unconverged refit: excluded from tuning
            }
        }
    }
    return auc;
}

} // namespace detail

/// Inner repeated stratified CV over a fixed lambda path (and gamma grid for
/// the relaxed family). A grid cell that fails in any inner split is
/// excluded. Ties prefer the larger lambda, then the larger gamma.
inline TuningResult tune_hyperparameters(const Cohort& train, const Candidate& c, const TuningConfig& cfg,
                                         const std::vector<double>& lambdas, std::uint64_t seed)
{
    TuningResult out;
    out.lambdas = lambdas;
    out.gammas = c.relaxed ? cfg.gammas : std::vector<double>{1.0};
    const std::size_t nl = lambdas.size(), ng = out.gammas.size();
    std::vector<std::vector<double>> sum(nl, std::vector<double>(ng, 0.0));
    const auto y = train.binary_labels();
    int splits = 0;
    for (int r = 0; r < cfg.inner.repeats; ++r) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        const auto fold = stratified_folds(y, cfg.inner.folds, rng);
        for (int k = 0; k < cfg.inner.folds; ++k) {
            const auto tr = train.subset(detail::rows_where(fold, k, false));
            const auto va = train.subset(detail::rows_where(fold, k, true));
            const auto auc = detail::inner_grid(tr, va, c, cfg, lambdas, out.gammas);
            for (std::size_t a = 0; a < nl; ++a)
                for (std::size_t g = 0; g < ng; ++g) sum[a][g] += auc[a][g]; // NaN sticks
            ++splits;
        }
    }
    out.mean_auc = sum;
    bool found = false;
    for (std::size_t a = 0; a < nl; ++a) {
        for (std::size_t g = ng; g-- > 0;) {
            auto& v = out.mean_auc[a][g];
            v /= splits;
            if (std::isnan(v)) continue;
            if (!found || v > out.inner_auc) {
                found = true;
                out.inner_auc = v;
                out.lambda_index = a;
                out.lambda = lambdas[a];
                out.gamma = out.gammas[g];
            }
        }
    }
    if (!found) throw NumericalError("tuning: every lambda/gamma combination failed");
    return out;
}

/// A tuned model refit on a whole training portion.
struct FittedModel {
    Candidate candidate;
    TransformParams transform;
    std::vector<std::string> feature_names; // retained features, matching fit.beta
    LogisticFit fit;
    TuningResult tuning;
    std::vector<std::string> warnings;
};

inline FittedModel fit_tuned(const Cohort& train, const Candidate& c, const TuningConfig& cfg, std::uint64_t seed)
{
    FittedModel m;
    m.candidate = c;
    auto s = prepare_split(train, c, cfg.transform);
    m.transform = s.transform;
    m.feature_names = s.transform.retained_names();
    const LogisticData d(s.x, s.y, s.w);
    const auto lambdas = lambda_path(d.lambda_max(), cfg.n_lambda, cfg.lambda_ratio);
    m.tuning = tune_hyperparameters(train, c, cfg, lambdas, seed);

    std::vector<double> head(lambdas.begin(), lambdas.begin() + static_cast<std::ptrdiff_t>(m.tuning.lambda_index) + 1);
    const auto path = fit_path(d, head, cfg.solver);
    if (path.fits.size() < head.size())
        m.warnings.push_back("refit path stopped before the tuned lambda (" + path.stop_reason + "); using lambda " +
                             std::to_string(head[path.fits.size() - 1]));
    const LogisticFit& lasso = path.fits.back();
    m.fit = lasso;
    if (c.relaxed && m.tuning.gamma != 1.0) {
        try {
            m.fit = fit_relaxed_l1(d, lasso.lambda, m.tuning.gamma, cfg.solver, &lasso);
        } catch (const NumericalError& e) {
            m.warnings.push_back(std::string("relaxed refit failed, using the lasso fit: ") + e.what());
        }
    }
    return m;
}

inline std::vector<double> score_linear(const FittedModel& m, const Cohort& cohort)
{
    return linear_scores(apply_transform(m.transform, cohort), m.fit);
}

struct OuterFoldResult {
    int repeat = 0;
    int fold = 0;
    double lambda = 0.0;
    double gamma = 1.0;
    double inner_auc = kNaN;
    double auc = kNaN;
    double intercept = 0.0;
    std::vector<double> coefficients; // one per cohort feature, 0 where dropped
    TransformParams transform;
    std::size_t n_train = 0;
    std::size_t n_validation = 0;
    std::vector<std::string> warnings;
};

struct CvReport {
    Candidate candidate;
    CvDesign outer;
    CvDesign inner;
    std::vector<std::string> feature_names;
    std::vector<OuterFoldResult> folds; // ordered by (repeat, fold)
    double mean_auc = kNaN;
    double sd_auc = kNaN;
};

struct NestedCvConfig {
    CvDesign outer{10, 10};
    TuningConfig tuning;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
};

struct NestedCvResult {
    std::vector<CvReport> reports;
    std::size_t winner = 0;
};

inline void summarize(CvReport& r)
{
    double s = 0.0;
    for (const auto& f : r.folds) s += f.auc;
    const double n = static_cast<double>(r.folds.size());
    r.mean_auc = s / n;
    double ss = 0.0;
    for (const auto& f : r.folds) ss += (f.auc - r.mean_auc) * (f.auc - r.mean_auc);
    r.sd_auc = r.folds.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
}

/// Outer repeated stratified CV around inner tuning, for every candidate.
/// All candidates see the same outer and inner splits. Winner: highest mean
/// outer AUC, earlier candidate on ties.
inline NestedCvResult nested_cv(const Cohort& cohort, const std::vector<Candidate>& candidates,
                                const NestedCvConfig& cfg)
{
    if (candidates.empty()) throw std::invalid_argument("nested_cv: no candidates");
    const auto y = cohort.binary_labels();
    const auto R = static_cast<std::size_t>(cfg.outer.repeats), K = static_cast<std::size_t>(cfg.outer.folds);
    std::vector<std::vector<int>> outer_folds(R);
    for (std::size_t r = 0; r < R; ++r) {
        Rng rng(derive_seed(cfg.seed, r));
        outer_folds[r] = stratified_folds(y, cfg.outer.folds, rng);
    }

    const std::size_t per = R * K;
    std::vector<OuterFoldResult> results(candidates.size() * per);
    parallel_for(results.size(), cfg.jobs, [&](std::size_t task) {
        const std::size_t c = task / per, r = (task % per) / K, k = task % K;
        const auto& fold = outer_folds[r];
        const auto train = cohort.subset(detail::rows_where(fold, static_cast<int>(k), false));
        const auto valid = cohort.subset(detail::rows_where(fold, static_cast<int>(k), true));
        const std::uint64_t inner_seed = derive_seed(derive_seed(cfg.seed ^ 0x9e3779b97f4a7c15ULL, r), k);
        const auto m = fit_tuned(train, candidates[c], cfg.tuning, inner_seed);

        OuterFoldResult& out = results[task];
        out.repeat = static_cast<int>(r);
        out.fold = static_cast<int>(k);
        out.lambda = m.fit.lambda;
        out.gamma = m.tuning.gamma;
        out.inner_auc = m.tuning.inner_auc;
        out.auc = roc_auc(score_linear(m, valid), valid.binary_labels());
        out.intercept = m.fit.intercept;
        out.coefficients.assign(cohort.feature_names.size(), 0.0);
        const auto kept = m.transform.retained();
        for (std::size_t j = 0; j < kept.size(); ++j) out.coefficients[kept[j]] = m.fit.beta[static_cast<Eigen::Index>(j)];
        out.transform = m.transform;
        out.n_train = train.size();
        out.n_validation = valid.size();
        out.warnings = m.warnings;
    });

    NestedCvResult out;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        CvReport rep;
        rep.candidate = candidates[c];
        rep.outer = cfg.outer;
        rep.inner = cfg.tuning.inner;
        rep.feature_names = cohort.feature_names;
        rep.folds.assign(std::make_move_iterator(results.begin() + static_cast<std::ptrdiff_t>(c * per)),
                         std::make_move_iterator(results.begin() + static_cast<std::ptrdiff_t>((c + 1) * per)));
        summarize(rep);
        out.reports.push_back(std::move(rep));
        if (out.reports[c].mean_auc > out.reports[out.winner].mean_auc) out.winner = c;
    }
    return out;
}

} // namespace metmorph
