#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "metmorph/stats/chi_squared.hpp"
#include "metmorph/stats/correlation.hpp"
#include "metmorph/stats/fdr.hpp"
#include "metmorph/stats/mann_whitney.hpp"
#include "metmorph/stats/screen.hpp"
#include "metmorph/synth/generator.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace metmorph;

namespace {

std::vector<double> sample(Rng& rng, std::size_t n, int distinct = 0)
{
    std::vector<double> v(n);
    for (auto& x : v) x = distinct > 0 ? static_cast<double>(rng.below(static_cast<std::uint64_t>(distinct))) : rng.normal();
    return v;
}

} // namespace

// Mann-Whitney ----------------------------------------------------------------

TEST(MannWhitney, SeparatedTriples)
{
    const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
    const auto r = mann_whitney_u(a, b, MwuMode::exact);
    EXPECT_EQ(r.u, 0.0);
    EXPECT_NEAR(r.p_value, 0.1, 1e-15);
    EXPECT_TRUE(r.exact);
}

TEST(MannWhitney, IdenticalSamples)
{
    const std::vector<double> a{3, 1, 4, 1, 5}, b{5, 4, 3, 1, 1};
    for (auto mode : {MwuMode::exact, MwuMode::normal_approx, MwuMode::automatic})
        EXPECT_DOUBLE_EQ(mann_whitney_u(a, b, mode).p_value, 1.0);
    EXPECT_EQ(mann_whitney_u(std::vector<double>(4, 2.0), std::vector<double>(7, 2.0)).p_value, 1.0);
}

TEST(MannWhitney, UStatisticsSumToProduct)
{
    Rng rng(1);
    for (int t = 0; t < 300; ++t) {
        const auto a = sample(rng, 1 + rng.below(25), t % 3 ? 0 : 4);
        const auto b = sample(rng, 1 + rng.below(25), t % 3 ? 0 : 4);
        const double sum = mann_whitney_u(a, b).u + mann_whitney_u(b, a).u;
        EXPECT_EQ(sum, static_cast<double>(a.size() * b.size()));
        EXPECT_EQ(2.0 * mann_whitney_u(a, b).u, static_cast<double>(oracle::twice_u(a, b)));
    }
}

TEST(MannWhitney, ExactMatchesExhaustiveEnumeration)
{
    Rng rng(2);
    for (int n : {6, 9, 12}) {
        for (int distinct : {0, 3, 5}) {
            const auto pooled = sample(rng, static_cast<std::size_t>(n), distinct);
            const auto want = oracle::exhaustive_split_p(pooled);
            for (std::uint32_t m = 1; m + 1 < (1u << n); ++m) {
                std::vector<double> a, b;
                for (int i = 0; i < n; ++i) ((m >> i) & 1u ? a : b).push_back(pooled[static_cast<std::size_t>(i)]);
                ASSERT_NEAR(mann_whitney_u(a, b, MwuMode::exact).p_value, want[m], 1e-9) << "n " << n << " mask " << m;
            }
        }
    }
}

TEST(MannWhitney, NormalApproximationCloseToExact)
{
    Rng rng(3);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const auto a = sample(rng, 10), b = sample(rng, 10);
        const double d = mann_whitney_u(a, b, MwuMode::exact).p_value - mann_whitney_u(a, b, MwuMode::normal_approx).p_value;
        worst = std::max(worst, std::abs(d));
    }
    EXPECT_LE(worst, 0.02);
}

TEST(MannWhitney, RankInvariance)
{
    Rng rng(4);
    for (int t = 0; t < 50; ++t) {
        auto a = sample(rng, 12, t % 2 ? 6 : 0), b = sample(rng, 15, t % 2 ? 6 : 0);
        const auto before = mann_whitney_u(a, b);
        const double k = 0.5 + rng.uniform();
        auto f = [k](double v) { return std::exp(k * v) + v * v * v; };
        std::transform(a.begin(), a.end(), a.begin(), f);
        std::transform(b.begin(), b.end(), b.begin(), f);
        const auto after = mann_whitney_u(a, b);
        EXPECT_EQ(before.u, after.u);
        EXPECT_EQ(before.p_value, after.p_value);
    }
}

TEST(MannWhitney, NullPValuesUniform)
{
    Rng rng(5);
    std::vector<double> p;
    for (int t = 0; t < 10000; ++t) {
        const auto a = sample(rng, 30), b = sample(rng, 30);
        p.push_back(mann_whitney_u(a, b).p_value);
    }
    std::sort(p.begin(), p.end());
    double ks = 0.0;
    const double n = static_cast<double>(p.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        ks = std::max({ks, std::abs(static_cast<double>(i + 1) / n - p[i]), std::abs(p[i] - static_cast<double>(i) / n)});
    EXPECT_LE(ks, 0.02);
}

// Benjamini-Hochberg -------------------------------------------------------------

TEST(BenjaminiHochberg, Examples)
{
    const std::vector<double> p{0.01, 0.02, 0.03, 0.04};
    for (double q : benjamini_hochberg(p)) EXPECT_DOUBLE_EQ(q, 0.04);
    EXPECT_EQ(benjamini_hochberg(std::vector<double>{0.5}), std::vector<double>{0.5});
    EXPECT_TRUE(benjamini_hochberg(std::vector<double>{}).empty());
}

TEST(BenjaminiHochberg, MatchesSuffixMinimumOracle)
{
    Rng rng(6);
    for (int t = 0; t < 300; ++t) {
        std::vector<double> p(1 + rng.below(60));
        for (auto& v : p) v = t % 4 == 0 ? std::round(rng.uniform() * 10) / 10 : std::pow(rng.uniform(), 3);
        const auto q = benjamini_hochberg(p);
        const auto want = oracle::bh_min_over_suffix(p);
        for (std::size_t i = 0; i < p.size(); ++i) {
            EXPECT_NEAR(q[i], want[i], 1e-12);
            EXPECT_GE(q[i], p[i]);
            EXPECT_LE(q[i], 1.0);
        }
        for (std::size_t i = 0; i < p.size(); ++i)
            for (std::size_t j = 0; j < p.size(); ++j)
                if (p[i] < p[j]) {
                    EXPECT_LE(q[i], q[j]);
                }
    }
}

TEST(BenjaminiHochberg, PermutationEquivariant)
{
    Rng rng(7);
    std::vector<double> p(40);
    for (auto& v : p) v = rng.uniform();
    const auto q = benjamini_hochberg(p);
    std::vector<std::size_t> perm(p.size());
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(std::span<std::size_t>(perm), rng);
    std::vector<double> pp(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) pp[i] = p[perm[i]];
    const auto qq = benjamini_hochberg(pp);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(qq[i], q[perm[i]]);
}

// Correlation and chi-squared -------------------------------------------------------

TEST(Spearman, Examples)
{
    const std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 4};
    EXPECT_NEAR(*spearman_rho(x, y), 0.8, 1e-15);
    const std::vector<double> up{0.1, 5, 7, 100}, down{9, 8, -1, -50};
    EXPECT_DOUBLE_EQ(*spearman_rho(x, up), 1.0);
    EXPECT_DOUBLE_EQ(*spearman_rho(x, down), -1.0);
    EXPECT_FALSE(spearman_rho(x, std::vector<double>(4, 1.0)).has_value());
}

TEST(ChiSquared, Examples)
{
    const auto indep = chi_squared_independence({{10, 10}, {10, 10}});
    EXPECT_EQ(indep.statistic, 0.0);
    EXPECT_DOUBLE_EQ(indep.p_value, 1.0);
    const auto dep = chi_squared_independence({{20, 0}, {0, 20}});
    EXPECT_DOUBLE_EQ(dep.statistic, 40.0);
    EXPECT_EQ(dep.dof, 1);
    EXPECT_NEAR(chi_squared_sf(3.841, 1), 0.05, 1e-3);
    EXPECT_THROW(chi_squared_independence({{0, 0}, {3, 4}}), std::exception);
}

// Screen ----------------------------------------------------------------------

TEST(Screen, PlantedShiftIsFlagged)
{
    Cohort c = testutil::noise_cohort(80, 40, 11, 100, 1.5);
    const auto r = run_univariate_screen(c);
    const auto* hit = r.find(c.feature_names[100], Comparison::wt_vs_amp);
    ASSERT_NE(hit, nullptr);
    EXPECT_TRUE(hit->significant);
    EXPECT_EQ(hit->direction, Direction::increased);
    EXPECT_FALSE(r.ran[1]); // no exon14 slides
    EXPECT_FALSE(r.warnings.empty());
}

TEST(Screen, HeatmapWildTypeMedianIsZero)
{
    Cohort c = testutil::noise_cohort(60, 30, 12, 7, 2.0);
    for (std::size_t i = 0; i < c.slides.size(); ++i) {
        for (auto& v : c.slides[i].values) v = v * 3.0 + 10.0;
        if (i % 2 == 1 && i >= 60) c.slides[i].label = MetLabel::exon14;
    }
    const auto r = run_univariate_screen(c);
    ASSERT_FALSE(r.heatmap.empty());
    for (const auto& h : r.heatmap) EXPECT_EQ(h.wild_type, 0.0);
}

TEST(Screen, WildTypeVersusWildTypeNull)
{
    std::vector<std::size_t> hits;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Cohort c = testutil::noise_cohort(60, 60, 100 + seed);
        std::size_t n = 0;
        for (const auto& res : run_univariate_screen(c).results) n += res.significant;
        hits.push_back(n);
    }
    std::sort(hits.begin(), hits.end());
    EXPECT_EQ(hits[2], 0u);
}

TEST(Screen, LymphAreaSkewnessShiftOnGeneratedCohort)
{
    synth::GeneratorSpec s;
    s.n_slides = {400, 60, 0, 0};
    s.seed = 1;
    s.effects = {{synth::Knob::size_skew, "lymph", MetLabel::amplified, 1.5}};
    const auto gen = synth::synthesize_cohort(s);
    const auto r = run_univariate_screen(gen.cohort);
    const auto* hit = r.find("lymph.shape.area.skewness", Comparison::wt_vs_amp);
    ASSERT_NE(hit, nullptr);
    EXPECT_LT(hit->q_value, 0.05);
}
