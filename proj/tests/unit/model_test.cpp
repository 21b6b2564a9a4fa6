#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "metmorph/model/class_weights.hpp"
#include "metmorph/model/cv.hpp"
#include "metmorph/model/logistic.hpp"
#include "metmorph/model/metrics.hpp"
#include "metmorph/model/relaxed.hpp"
#include "metmorph/model/sparse_model.hpp"
#include "metmorph/model/split.hpp"
#include "metmorph/model/stability.hpp"
#include "metmorph/model/transform.hpp"
#include "metmorph/stats/mann_whitney.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace metmorph;

namespace {

struct Problem {
    Eigen::MatrixXd x;
    std::vector<int> y;
    Eigen::VectorXd w;
};

Problem random_problem(Rng& rng, int n, int p, bool weighted)
{
    Problem pr{Eigen::MatrixXd(n, p), std::vector<int>(static_cast<std::size_t>(n)), Eigen::VectorXd::Ones(n)};
    Eigen::VectorXd beta(p);
    for (int j = 0; j < p; ++j) beta[j] = j < 3 ? 1.5 * rng.normal() : 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) pr.x(i, j) = rng.normal();
        pr.y[static_cast<std::size_t>(i)] = rng.uniform() < sigmoid(pr.x.row(i).dot(beta) - 0.3) ? 1 : 0;
        if (weighted) pr.w[i] = 0.2 + rng.uniform();
    }
    pr.y[0] = 0; // both classes present
    pr.y[1] = 1;
    return pr;
}

oracle::L1Problem as_oracle(const Problem& p)
{
    oracle::L1Problem o;
    o.x = p.x;
    o.y = Eigen::VectorXd(p.x.rows());
    for (Eigen::Index i = 0; i < p.x.rows(); ++i) o.y[i] = p.y[static_cast<std::size_t>(i)];
    o.w = p.w / p.w.sum();
    return o;
}

double kkt_residual(const LogisticData& d, const LogisticFit& f, double lambda)
{
    const auto g = logistic_gradient(d, f.beta, f.intercept);
    double worst = std::abs(g.intercept);
    for (Eigen::Index j = 0; j < f.beta.size(); ++j) {
        const double r = f.beta[j] == 0.0 ? std::max(0.0, std::abs(g.beta[j]) - lambda)
                                          : std::abs(g.beta[j] + lambda * (f.beta[j] > 0 ? 1.0 : -1.0));
        worst = std::max(worst, r);
    }
    return worst;
}

Cohort single_feature_cohort(const std::string& name, const std::vector<double>& values)
{
    Cohort c;
    c.feature_names = {name};
    for (std::size_t i = 0; i < values.size(); ++i) {
        SlideFeatureVector s;
        s.slide_id = "S" + std::to_string(i);
        s.label = i % 2 ? MetLabel::amplified : MetLabel::wild_type;
        s.values = {values[i]};
        c.slides.push_back(s);
    }
    return c;
}

TuningConfig quick_tuning()
{
    TuningConfig t;
    t.inner = {1, 3};
    t.n_lambda = 15;
    return t;
}

} // namespace

// Transform and class weights -------------------------------------------------------

TEST(Transform, GeometricTripleUnderLog)
{
    const auto c = single_feature_cohort("tumor.shape.area.mean", {1, 10, 100});
    TransformOptions opt;
    opt.min_unique = 3;
    const auto params = fit_transform(c, opt);
    ASSERT_FALSE(params.features[0].dropped);
    EXPECT_TRUE(params.features[0].log_flag);
    const auto x = apply_transform(params, c);
    EXPECT_NEAR(x(0, 0), -1.0, 1e-8);
    EXPECT_NEAR(x(1, 0), 0.0, 1e-8);
    EXPECT_NEAR(x(2, 0), 1.0, 1e-8);
}

TEST(Transform, TrainingMedianMapsToZero)
{
    const Cohort c = testutil::noise_cohort(31, 20, 3);
    const auto params = fit_transform(c);
    const auto x = apply_transform(params, c);
    ASSERT_GT(x.cols(), 300);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        std::vector<double> col(x.col(j).data(), x.col(j).data() + x.rows());
        EXPECT_NEAR(median(col), 0.0, 1e-12);
    }
}

TEST(Transform, FewUniqueValuesDropped)
{
    std::vector<double> v(40);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i % 2);
    const auto params = fit_transform(single_feature_cohort("tumor.color.red_mean.mean", v));
    EXPECT_TRUE(params.features[0].dropped);
    EXPECT_EQ(params.features[0].drop_reason, "few_unique");
}

TEST(Transform, MissingModelColumnsAreListed)
{
    const Cohort c = testutil::noise_cohort(20, 20, 4);
    const auto params = fit_transform(c);
    Cohort fewer = c;
    fewer.feature_names.pop_back();
    for (auto& s : fewer.slides) s.values.pop_back();
    try {
        apply_transform(params, fewer);
        FAIL() << "expected a schema error";
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find(c.feature_names.back()), std::string::npos);
    }
}

TEST(ClassWeights, Examples)
{
    std::vector<int> y(528, 0);
    std::fill(y.begin(), y.begin() + 103, 1);
    const auto w = compute_class_weights(y, ClassWeightSpec::make_balanced());
    EXPECT_NEAR(w.negative, 0.62118, 5e-6);
    EXPECT_NEAR(w.positive, 2.56311, 5e-6);
    const std::vector<int> even{0, 1, 0, 1};
    const auto e = compute_class_weights(even, ClassWeightSpec::make_balanced());
    EXPECT_EQ(e.negative, 1.0);
    EXPECT_EQ(e.positive, 1.0);
    const auto fixed = sample_weights(even, parse_class_weights("0.3,0.7"));
    EXPECT_EQ(fixed[0], 0.3);
    EXPECT_EQ(fixed[1], 0.7);
    EXPECT_THROW(compute_class_weights(std::vector<int>{0, 0}, ClassWeightSpec::make_balanced()), SchemaError);
}

// Solver ------------------------------------------------------------------------

TEST(Solver, SoftThreshold)
{
    EXPECT_EQ(soft_threshold(3, 1), 2.0);
    EXPECT_EQ(soft_threshold(-0.5, 1), 0.0);
    EXPECT_EQ(soft_threshold(-3, 1), -2.0);
}

TEST(Solver, NullModelAtLambdaMax)
{
    Eigen::MatrixXd x(4, 2);
    x << 1, 0, -1, 2, 0.5, -1, 2, 1;
    const std::vector<int> y{1, 1, 1, 0};
    const LogisticData d(x, y, Eigen::VectorXd::Ones(4));
    const auto f = fit_l1_logistic(d, d.lambda_max());
    EXPECT_EQ(f.active_count(), 0u);
    EXPECT_NEAR(f.intercept, std::log(3.0), 1e-10);
    EXPECT_GE(fit_l1_logistic(d, 0.999 * d.lambda_max()).active_count(), 1u);
}

TEST(Solver, WeightedNullInterceptIsPrevalenceLogit)
{
    Rng rng(1);
    for (int t = 0; t < 20; ++t) {
        const auto p = random_problem(rng, 30, 5, true);
        const LogisticData d(p.x, p.y, p.w);
        double s1 = 0, s0 = 0;
        for (std::size_t i = 0; i < p.y.size(); ++i) (p.y[i] ? s1 : s0) += p.w[static_cast<Eigen::Index>(i)];
        const auto f = fit_l1_logistic(d, 1.5 * d.lambda_max());
        EXPECT_EQ(f.active_count(), 0u);
        EXPECT_NEAR(f.intercept, std::log(s1 / s0), 1e-10);
    }
}

TEST(Solver, KktAndReferenceAgreement)
{
    Rng rng(2);
    for (int t = 0; t < 50; ++t) {
        const auto p = random_problem(rng, 40, 8, t % 2 == 1);
        const LogisticData d(p.x, p.y, p.w);
        const double lambda = t < 10 ? 0.05 : d.lambda_max() * (0.05 + 0.5 * rng.uniform());
        const auto f = fit_l1_logistic(d, lambda);
        EXPECT_LE(kkt_residual(d, f, lambda), 1e-6) << "problem " << t;
        const auto [beta, b0] = oracle::projected_gradient_l1(as_oracle(p), lambda);
        EXPECT_NEAR(f.intercept, b0, 1e-4);
        for (Eigen::Index j = 0; j < beta.size(); ++j) EXPECT_NEAR(f.beta[j], beta[j], 1e-4) << "problem " << t;
    }
}

TEST(Solver, GradientMatchesCentralDifferences)
{
    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
        const auto p = random_problem(rng, 25, 6, true);
        const LogisticData d(p.x, p.y, p.w);
        Eigen::VectorXd beta(6);
        for (int j = 0; j < 6; ++j) beta[j] = 0.5 * rng.normal();
        const double b0 = 0.3 * rng.normal();
        const auto g = logistic_gradient(d, beta, b0);
        const double h = 1e-5;
        for (int j = 0; j < 6; ++j) {
            Eigen::VectorXd up = beta, dn = beta;
            up[j] += h;
            dn[j] -= h;
            const double fd = (logistic_loss(d, up, b0) - logistic_loss(d, dn, b0)) / (2 * h);
            EXPECT_LT(std::abs(fd - g.beta[j]), 1e-6 * std::max(1.0, std::abs(g.beta[j])));
        }
        const double fd0 = (logistic_loss(d, beta, b0 + h) - logistic_loss(d, beta, b0 - h)) / (2 * h);
        EXPECT_LT(std::abs(fd0 - g.intercept), 1e-6 * std::max(1.0, std::abs(g.intercept)));
        // independent loss and gradient oracle
        const auto o = as_oracle(p);
        EXPECT_NEAR(oracle::loss(o, beta, b0), logistic_loss(d, beta, b0), 1e-12);
        const auto og = oracle::gradient(o, beta, b0);
        EXPECT_NEAR(og[6], g.intercept, 1e-12);
        for (int j = 0; j < 6; ++j) EXPECT_NEAR(og[j], g.beta[j], 1e-12);
    }
}

TEST(Solver, ObjectiveNonIncreasingPerSweep)
{
    Rng rng(4);
    SolverOptions opt;
    opt.record_objective = true;
    for (int t = 0; t < 20; ++t) {
        const auto p = random_problem(rng, 60, 12, t % 2 == 0);
        const LogisticData d(p.x, p.y, p.w);
        const auto f = fit_l1_logistic(d, 0.02 * d.lambda_max(), opt);
        ASSERT_GE(f.objective_trace.size(), 2u);
        for (std::size_t k = 1; k < f.objective_trace.size(); ++k) EXPECT_LE(f.objective_trace[k], f.objective_trace[k - 1]);
    }
}

TEST(Solver, DoublingWeightsLeavesFitUnchanged)
{
    Rng rng(5);
    const auto p = random_problem(rng, 50, 7, true);
    const LogisticData d1(p.x, p.y, p.w);
    const Eigen::VectorXd w2 = 2.0 * p.w;
    const LogisticData d2(p.x, p.y, w2);
    const double lambda = 0.1 * d1.lambda_max();
    const auto a = fit_l1_logistic(d1, lambda), b = fit_l1_logistic(d2, lambda);
    EXPECT_NEAR(a.intercept, b.intercept, 1e-12);
    for (Eigen::Index j = 0; j < a.beta.size(); ++j) EXPECT_NEAR(a.beta[j], b.beta[j], 1e-12);
}

TEST(Solver, NonFiniteDesignRejected)
{
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 2);
    x(1, 1) = std::nan("");
    const std::vector<int> y{0, 1, 1};
    EXPECT_THROW(LogisticData(x, y, Eigen::VectorXd::Ones(3)), std::exception);
}

TEST(Relaxed, GammaOneIsLasso)
{
    Rng rng(6);
    const auto p = random_problem(rng, 50, 8, false);
    const LogisticData d(p.x, p.y, p.w);
    const double lambda = 0.1 * d.lambda_max();
    const auto a = fit_l1_logistic(d, lambda), b = fit_relaxed_l1(d, lambda, 1.0);
    EXPECT_NEAR(a.intercept, b.intercept, 1e-9);
    for (Eigen::Index j = 0; j < a.beta.size(); ++j) EXPECT_NEAR(a.beta[j], b.beta[j], 1e-9);
}

TEST(Relaxed, GammaZeroIsUnpenalizedRefitOnActiveSet)
{
    Rng rng(7);
    for (int t = 0; t < 10; ++t) {
        const auto p = random_problem(rng, 80, 8, t % 2 == 0);
        const LogisticData d(p.x, p.y, p.w);
        const double lambda = 0.15 * d.lambda_max();
        const auto lasso = fit_l1_logistic(d, lambda);
        const auto relaxed = fit_relaxed_l1(d, lambda, 0.0);
        std::vector<Eigen::Index> act;
        for (Eigen::Index j = 0; j < lasso.beta.size(); ++j)
            if (lasso.beta[j] != 0.0) act.push_back(j);
        ASSERT_FALSE(act.empty());
        auto sub = as_oracle(p);
        sub.x = Eigen::MatrixXd(p.x.rows(), static_cast<Eigen::Index>(act.size()));
        for (std::size_t k = 0; k < act.size(); ++k) sub.x.col(static_cast<Eigen::Index>(k)) = p.x.col(act[k]);
        const auto [beta, b0] = oracle::newton_unpenalized(sub);
        EXPECT_NEAR(relaxed.intercept, b0, 1e-6);
        for (std::size_t k = 0; k < act.size(); ++k)
            EXPECT_NEAR(relaxed.beta[act[k]], beta[static_cast<Eigen::Index>(k)], 1e-6);
        for (Eigen::Index j = 0; j < lasso.beta.size(); ++j)
            if (lasso.beta[j] == 0.0) {
                EXPECT_EQ(relaxed.beta[j], 0.0);
            }
    }
}

TEST(Relaxed, EmptyActiveSetGivesInterceptOnly)
{
    Rng rng(8);
    const auto p = random_problem(rng, 30, 4, false);
    const LogisticData d(p.x, p.y, p.w);
    const auto f = fit_relaxed_l1(d, 2 * d.lambda_max(), 0.5);
    EXPECT_EQ(f.active_count(), 0u);
    EXPECT_NEAR(f.intercept, d.null_intercept(), 1e-10);
}

// Stability and metrics ------------------------------------------------------------

TEST(Stability, Examples)
{
    const auto pos = coefficient_stability("a", {0.1, 0.2, 0.3, 0.4, 0.5});
    EXPECT_TRUE(pos.selected);
    EXPECT_EQ(pos.sign, 1);
    EXPECT_FALSE(coefficient_stability("b", {-0.2, 0, 0.1, 0.3}).selected);
    const auto zero = coefficient_stability("c", {0, 0, 0, 0});
    EXPECT_FALSE(zero.selected);
    EXPECT_EQ(zero.sign, 0);
    EXPECT_EQ(coefficient_stability("d", {-0.5, -0.4, -0.3, -0.1}).sign, -1);
    CvReport tiny;
    tiny.folds.resize(3);
    EXPECT_THROW(stability_select(tiny), std::invalid_argument);
}

TEST(Metrics, AucExamples)
{
    const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
    const std::vector<int> y{0, 0, 1, 1};
    EXPECT_DOUBLE_EQ(roc_auc(s, y), 0.75);
    const std::vector<double> sep{0.1, 0.2, 0.8, 0.9};
    EXPECT_EQ(roc_auc(sep, y), 1.0);
    EXPECT_EQ(pr_curve(sep, y).average_precision, 1.0);
    EXPECT_EQ(roc_auc(std::vector<double>(4, 0.3), y), 0.5);
    EXPECT_THROW(roc_auc(s, std::vector<int>{1, 1, 1, 1}), std::exception);
}

TEST(Metrics, AucTimesPairsEqualsU)
{
    Rng rng(9);
    for (int t = 0; t < 500; ++t) {
        const std::size_t n = 2 + rng.below(40);
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = t % 2 ? static_cast<double>(rng.below(5)) : rng.normal();
            y[i] = rng.uniform() < 0.4;
        }
        y[0] = 0;
        y[1] = 1;
        std::vector<double> pos, neg;
        for (std::size_t i = 0; i < n; ++i) (y[i] ? pos : neg).push_back(s[i]);
        const double u = mann_whitney_u(pos, neg).u;
        // the pair count is exact and the AUC is its correctly rounded quotient;
        // scaling back by n0 n1 can round one ulp away from U
        const double pairs = static_cast<double>(pos.size() * neg.size());
        EXPECT_EQ(static_cast<double>(twice_auc_pairs(s, y)), 2.0 * u);
        EXPECT_EQ(roc_auc(s, y), u / pairs);
        EXPECT_DOUBLE_EQ(roc_auc(s, y) * pairs, u);
    }
}

TEST(Metrics, RankInvariance)
{
    Rng rng(10);
    std::vector<double> s(50);
    std::vector<int> y(50);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = rng.normal();
        y[i] = i % 3 == 0;
    }
    std::vector<double> t = s;
    for (auto& v : t) v = std::exp(3 * v) - 7;
    EXPECT_EQ(roc_auc(s, y), roc_auc(t, y));
    EXPECT_EQ(pr_curve(s, y).average_precision, pr_curve(t, y).average_precision);
}

TEST(Metrics, AveragePrecisionByHand)
{
    // descending: 1 (R .5 P 1), 0, 1 (R 1 P 2/3)
    const std::vector<double> s{0.9, 0.8, 0.7};
    const std::vector<int> y{1, 0, 1};
    EXPECT_NEAR(pr_curve(s, y).average_precision, 0.5 * 1.0 + 0.5 * 2.0 / 3.0, 1e-15);
}

// Split ---------------------------------------------------------------------------

TEST(Split, CohortScaleProportions)
{
    std::vector<ManifestRow> rows;
    Rng rng(11);
    const std::array<const char*, 3> procedures{"biopsy", "resection", "cytology"};
    for (int i = 0; i < 704; ++i) {
        ManifestRow r;
        r.slide_id = "S" + std::to_string(i);
        const double u = rng.uniform();
        r.label = u < 0.8 ? MetLabel::wild_type : u < 0.9 ? MetLabel::amplified : u < 0.99 ? MetLabel::exon14
                                                                                       : MetLabel::amplified_and_exon14;
        r.procedure_type = procedures[rng.below(3)];
        rows.push_back(r);
    }
    const auto s = stratified_split(rows, 0.75, 3);
    EXPECT_EQ(s.train.size() + s.holdout.size(), 704u);
    std::map<std::string, int> strata;
    for (const auto& r : rows) strata[split_stratum(r)]++;
    EXPECT_LE(std::abs(static_cast<int>(s.train.size()) - 528), static_cast<int>(strata.size()));
    std::map<std::string, int> in_train;
    for (auto i : s.train) in_train[split_stratum(rows[i])]++;
    for (const auto& [k, n] : strata) EXPECT_LE(std::abs(in_train[k] - 0.75 * n), 1.0) << k;
    const auto again = stratified_split(rows, 0.75, 3);
    EXPECT_EQ(again.train, s.train);
    EXPECT_NE(stratified_split(rows, 0.75, 4).train, s.train);
    EXPECT_THROW(stratified_split(rows, 1.0, 3), SchemaError);
}

TEST(Split, FoldsContainBothClasses)
{
    Rng rng(12);
    std::vector<int> y(60, 0);
    for (std::size_t i = 0; i < 12; ++i) y[i] = 1;
    const auto fold = stratified_folds(y, 10, rng);
    for (int k = 0; k < 10; ++k) {
        int pos = 0, neg = 0;
        for (std::size_t i = 0; i < y.size(); ++i)
            if (fold[i] == k) {
                (y[i] ? pos : neg)++;
            }
        EXPECT_GT(pos, 0);
        EXPECT_GT(neg, 0);
    }
}

// Nested CV and the model file -------------------------------------------------------

TEST(NestedCv, LabelFeatureIsFound)
{
    Cohort c = testutil::noise_cohort(40, 40, 13);
    for (auto& s : c.slides) s.values[50] = is_altered(*s.label) + 0.01 * s.values[51];
    NestedCvConfig cfg;
    cfg.outer = {1, 4};
    cfg.tuning = quick_tuning();
    const auto res = nested_cv(c, {Candidate{false, ClassWeightSpec::make_balanced()}}, cfg);
    EXPECT_GT(res.reports[0].mean_auc, 0.95);
    // every outer fold fits its own transform
    std::set<double> centers;
    for (const auto& f : res.reports[0].folds) centers.insert(f.transform.features[3].center);
    EXPECT_EQ(centers.size(), res.reports[0].folds.size());
}

TEST(NestedCv, ValidationOnlyLeakCannotBeExploited)
{
    // the leak column is pure noise on the training portion and equals the
    // label only on the validation slides
    Cohort train = testutil::noise_cohort(40, 40, 14), valid = testutil::noise_cohort(20, 20, 15);
    for (auto& s : valid.slides) s.values[50] = is_altered(*s.label);
    const auto m = fit_tuned(train, Candidate{false, ClassWeightSpec::make_balanced()}, quick_tuning(), 1);
    const auto pos = std::find(m.feature_names.begin(), m.feature_names.end(), train.feature_names[50]);
    ASSERT_NE(pos, m.feature_names.end());
    EXPECT_EQ(m.fit.beta[pos - m.feature_names.begin()], 0.0);
}

TEST(SparseModelFile, RoundTripIsBitIdentical)
{
    Cohort c = testutil::noise_cohort(40, 40, 16, 20, 1.5);
    const auto cfg = quick_tuning();
    const auto fitted = fit_tuned(c, Candidate{true, ClassWeightSpec::fixed(0.3, 0.7)}, cfg, 2);
    const auto model = make_sparse_model(fitted, cfg, c);
    const auto back = model_from_json(nlohmann::ordered_json::parse(to_json(model).dump()));
    const auto a = model.predict(c), b = back.predict(c);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
    EXPECT_EQ(to_json(back).dump(), to_json(model).dump());
    for (double p : a) {
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
    }
}

TEST(SparseModelFile, HoldoutOverlapAndSubgroups)
{
    Cohort c = testutil::noise_cohort(40, 40, 17, 20, 1.5);
    const auto cfg = quick_tuning();
    const auto model = make_sparse_model(fit_tuned(c, Candidate{}, cfg, 3), cfg, c);
    EXPECT_THROW(evaluate_holdout(model, c.subset({0, 1, 45})), SchemaError);

    Cohort holdout = testutil::noise_cohort(20, 20, 18, 20, 1.5);
    for (auto& s : holdout.slides) s.slide_id = "H" + s.slide_id;
    const auto r = evaluate_holdout(model, holdout);
    EXPECT_TRUE(r.auc_amplified.has_value());
    EXPECT_FALSE(r.auc_exon14.has_value());
    EXPECT_EQ(r.n_exon14, 0u);
    EXPECT_EQ(*r.auc_amplified, r.auc);
}
