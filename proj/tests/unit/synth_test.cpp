#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "metmorph/io/files.hpp"
#include "metmorph/stats/screen.hpp"
#include "metmorph/synth/bayes.hpp"
#include "metmorph/synth/corpus.hpp"
#include "metmorph/synth/generator.hpp"
#include "test_util.hpp"

using namespace metmorph;
using namespace metmorph::synth;

namespace {

std::map<std::string, std::string> tree_hashes(const std::filesystem::path& root)
{
    std::map<std::string, std::string> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[std::filesystem::relative(e.path(), root).string()] = io::sha256_file(e.path());
    return out;
}

std::vector<double> column(const Cohort& c, const std::string& name, MetLabel label)
{
    const auto f = *c.feature_index(name);
    std::vector<double> out;
    for (const auto& s : c.slides)
        if (*s.label == label && !std::isnan(s.values[f])) out.push_back(s.values[f]);
    return out;
}

} // namespace

TEST(Generator, MaskAndTableAgree)
{
    GeneratorSpec spec;
    spec.n_slides = {2, 1, 1, 0};
    for (const auto& plan : plan_slides(spec)) {
        const auto g = generate_slide(spec, plan);
        ASSERT_FALSE(g.tiles.empty());
        for (const auto& t : g.tiles) {
            std::set<std::uint32_t> in_mask, in_table;
            for (auto v : t.mask.data())
                if (v) in_mask.insert(v);
            std::size_t rows = 0;
            for (const auto& c : g.cells)
                if (c.tile_id == t.tile_id) {
                    in_table.insert(c.instance_id);
                    ++rows;
                }
            EXPECT_EQ(in_mask, in_table) << plan.slide_id << "/" << t.tile_id;
            EXPECT_EQ(rows, in_table.size());
        }
    }
}

TEST(Generator, DefaultDensityHasNoDegenerateCells)
{
    GeneratorSpec spec;
    spec.n_slides = {3, 1, 1, 0};
    std::size_t n = 0;
    for (const auto& plan : plan_slides(spec)) {
        const auto g = generate_slide(spec, plan);
        EXPECT_TRUE(g.warnings.empty());
        for (const auto& r : extract_generated(g, ExtractOptions{{}, true})) {
            EXPECT_FALSE(r.degenerate) << plan.slide_id << " cell " << r.instance_id;
            ++n;
        }
    }
    EXPECT_GT(n, 1000u);
}

TEST(Generator, SameSeedSameFiles)
{
    GeneratorSpec spec;
    spec.n_slides = {2, 1, 0, 0};
    spec.effects = {{Knob::size, "tumor", MetLabel::amplified, 1.0}};
    const auto a = testutil::scratch_dir("synth_a"), b = testutil::scratch_dir("synth_b"),
               c = testutil::scratch_dir("synth_c");
    write_corpus(spec, a);
    write_corpus(spec, b);
    spec.seed = 2;
    write_corpus(spec, c);
    const auto ha = tree_hashes(a), hb = tree_hashes(b), hc = tree_hashes(c);
    EXPECT_GT(ha.size(), 10u);
    EXPECT_EQ(ha, hb);
    EXPECT_NE(ha.at("manifest.csv") + ha.at("truth.json"), hc.at("manifest.csv") + hc.at("truth.json"));
}

TEST(Generator, SpecJsonRoundTrip)
{
    GeneratorSpec spec;
    spec.seed = 99;
    spec.n_slides = {5, 6, 7, 1};
    spec.effects = {{Knob::hue, "tumor", MetLabel::exon14, -0.75}, {Knob::texture, "lymph", MetLabel::amplified, 2.0}};
    spec.lymph.log_radius.mean = 1.7;
    const auto j = to_json(spec);
    EXPECT_EQ(to_json(spec_from_json(nlohmann::ordered_json::parse(j.dump()))).dump(), j.dump());
}

TEST(BayesOracle, ZeroEffectsIsChance)
{
    GeneratorSpec spec;
    EXPECT_EQ(oracle_bayes_auc(spec, 1000), 0.5);
}

TEST(BayesOracle, SingleShiftClosedForm)
{
    for (double e : {0.5, 1.5, 3.0}) {
        GeneratorSpec spec;
        spec.effects = {{Knob::size, "tumor", MetLabel::amplified, e}};
        spec.n_slides = {50, 50, 0, 0};
        const double d = e * kGaussianMad;
        // 1e5 draws per side: AUC standard error is below 2e-3
        EXPECT_NEAR(oracle_bayes_auc(spec, 100000), normal_cdf(d / std::sqrt(2.0)), 6e-3) << e;
    }
}

TEST(Cohort, PlantedEffectShiftsGroupMedians)
{
    GeneratorSpec spec;
    spec.n_slides = {60, 60, 0, 0};
    spec.seed = 3;
    spec.effects = {{Knob::size_skew, "lymph", MetLabel::amplified, 1.5}};
    const auto c = synthesize_cohort(spec).cohort;
    const std::string f = planted_feature(Knob::size_skew, "lymph");
    EXPECT_EQ(f, "lymph.shape.area.skewness");
    EXPECT_GT(median(column(c, f, MetLabel::amplified)), median(column(c, f, MetLabel::wild_type)));
}

TEST(Cohort, NullGeneratorHasNoSignificantFeatures)
{
    GeneratorSpec spec;
    spec.n_slides = {50, 50, 0, 0};
    spec.seed = 4;
    const auto r = run_univariate_screen(synthesize_cohort(spec).cohort);
    std::size_t hits = 0;
    for (const auto& u : r.results) hits += u.significant;
    EXPECT_LE(hits, 2u);
}

TEST(Cohort, DoublingSlidesKeepsMeansStable)
{
    GeneratorSpec small;
    small.n_slides = {30, 0, 0, 0};
    small.seed = 5;
    GeneratorSpec large = small;
    large.n_slides = {60, 0, 0, 0};
    large.seed = 6;
    const auto a = synthesize_cohort(small).cohort, b = synthesize_cohort(large).cohort;
    for (const auto* name : {"global.percent.tumor", "tumor.shape.area.mean", "lymph.shape.area.skewness",
                             "tumor.color.red_mean.mean", "tumor.color.hue_mean.mean",
                             "tumor.shape.bbox_aspect_ratio.mean", "tumor.texture.haralick_contrast.mean"}) {
        const auto x = column(a, name, MetLabel::wild_type), y = column(b, name, MetLabel::wild_type);
        const auto mx = moments(x), my = moments(y);
        const double se = std::sqrt(mx.std * mx.std / static_cast<double>(x.size()) +
                                    my.std * my.std / static_cast<double>(y.size()));
        EXPECT_LE(std::abs(mx.mean - my.mean), 3.0 * se) << name;
    }
}
