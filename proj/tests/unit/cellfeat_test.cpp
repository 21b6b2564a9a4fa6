#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "metmorph/cellfeat/color.hpp"
#include "metmorph/cellfeat/extract.hpp"
#include "metmorph/cellfeat/glcm.hpp"
#include "metmorph/cellfeat/shape.hpp"
#include "metmorph/cellfeat/texture.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace metmorph;

namespace {

std::vector<std::string> filled(int h, int w) { return std::vector<std::string>(h, std::string(w, '#')); }

RgbImage uniform_tile(int h, int w, std::array<std::uint8_t, 3> rgb)
{
    RgbImage t(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            for (int k = 0; k < 3; ++k) t.at(r, c, k) = rgb[k];
    return t;
}

GrayImage gray_from_json(const nlohmann::json& rows)
{
    GrayImage g(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (int r = 0; r < g.height(); ++r)
        for (int c = 0; c < g.width(); ++c) g.at(r, c) = rows[r][c].get<double>();
    return g;
}

} // namespace

// Shape -----------------------------------------------------------------------

TEST(Shape, FilledSquareTrivialValues)
{
    const auto f = extract_shape(testutil::cell_from_rows(filled(10, 10)));
    EXPECT_EQ(f.area, 100.0);
    EXPECT_EQ(f.bbox_area, 100.0);
    EXPECT_EQ(f.aspect_ratio, 1.0);
    EXPECT_EQ(f.area_over_bbox, 1.0);
    EXPECT_EQ(f.solidity, 1.0);
}

TEST(Shape, RectangleAspectRatios)
{
    const auto f = extract_shape(testutil::cell_from_rows(filled(10, 20)));
    EXPECT_EQ(f.aspect_ratio, 2.0);
    EXPECT_EQ(f.bbox_aspect_ratio, 2.0);
}

TEST(Shape, MatchesContourOracleGoldens)
{
    const auto g = testutil::read_golden("shape_golden.json");
    ASSERT_EQ(g["masks"].size(), 12u);
    for (const auto& m : g["masks"]) {
        const auto f = extract_shape(testutil::cell_from_rows(m["rows"].get<std::vector<std::string>>())).values();
        for (std::size_t k = 0; k < names::kShape.size(); ++k) {
            const double want = m["features"][std::string(names::kShape[k])].get<double>();
            EXPECT_EQ(f[k], want) << m["name"] << " " << names::kShape[k];
        }
    }
}

TEST(Shape, TranslationInvariantExactly)
{
    const auto g = testutil::read_golden("shape_golden.json");
    for (const auto& m : g["masks"]) {
        const auto rows = m["rows"].get<std::vector<std::string>>();
        const auto base = extract_shape(testutil::cell_from_rows(rows)).values();
        for (auto [dr, dc] : {std::pair{3, 7}, std::pair{41, 2}, std::pair{250, 199}}) {
            const auto moved = extract_shape(testutil::cell_from_rows(rows, dr, dc)).values();
            for (std::size_t k = 0; k < base.size(); ++k) EXPECT_EQ(base[k], moved[k]) << m["name"];
        }
    }
}

TEST(Shape, BoundedRatiosOnDisks)
{
    for (int r = 2; r <= 20; ++r) {
        std::vector<std::string> rows;
        for (int y = -r; y <= r; ++y) {
            std::string s;
            for (int x = -r; x <= r; ++x) s += x * x + y * y <= r * r ? '#' : '.';
            rows.push_back(s);
        }
        const auto f = extract_shape(testutil::cell_from_rows(rows));
        EXPECT_GT(f.solidity, 0.0);
        EXPECT_LE(f.solidity, 1.0);
        EXPECT_GT(f.convex_perimeter_ratio, 0.0);
        EXPECT_LE(f.convex_perimeter_ratio, 1.0);
        EXPECT_GT(f.circularity, 0.0);
        EXPECT_LE(f.circularity, 1.0 / (4.0 * std::numbers::pi) + 1e-12);
    }
}

// Color and intensity -----------------------------------------------------------

TEST(Color, UniformPatch)
{
    const auto tile = uniform_tile(6, 5, {120, 60, 30});
    const auto f = extract_color(BoundingBox{0, 0, 5, 4}, tile);
    EXPECT_DOUBLE_EQ(f.red_mean, 120.0);
    EXPECT_DOUBLE_EQ(f.intensity_mean, 70.0);
    for (double s : {f.red_std, f.green_std, f.blue_std, f.hue_std, f.saturation_std, f.intensity_std}) EXPECT_EQ(s, 0.0);
}

TEST(Color, PureRedHsv)
{
    const auto f = extract_color(BoundingBox{0, 0, 2, 2}, uniform_tile(3, 3, {255, 0, 0}));
    EXPECT_EQ(f.hue_mean, 0.0);
    EXPECT_EQ(f.saturation_mean, 1.0);
}

TEST(Color, TwoPixelBox)
{
    RgbImage t(1, 2);
    for (int k = 0; k < 3; ++k) t.at(0, 1, k) = 255;
    const auto f = extract_color(BoundingBox{0, 0, 0, 1}, t);
    EXPECT_DOUBLE_EQ(f.red_mean, 127.5);
    EXPECT_DOUBLE_EQ(f.red_std, 127.5);
}

TEST(Intensity, SymmetricTwoPoint)
{
    const auto f = intensity_statistics({0, 0, 255, 255});
    EXPECT_EQ(f.min, 0.0);
    EXPECT_EQ(f.max, 255.0);
    EXPECT_DOUBLE_EQ(f.mean, 127.5);
    EXPECT_DOUBLE_EQ(f.std, 127.5);
    EXPECT_NEAR(f.skewness, 0.0, 1e-15);
    EXPECT_NEAR(f.kurtosis, -2.0, 1e-12);
}

TEST(Intensity, ConstantPatch)
{
    const auto f = intensity_statistics(std::vector<double>(9, 80.0));
    EXPECT_EQ(f.min, 80.0);
    EXPECT_EQ(f.max, 80.0);
    EXPECT_EQ(f.mean, 80.0);
    EXPECT_EQ(f.std, 0.0);
    EXPECT_EQ(f.skewness, 0.0);
    EXPECT_EQ(f.kurtosis, 0.0);
}

TEST(Intensity, SkewedThreeToOne)
{
    // Bernoulli(1/4) scaled by 255: g1 = (1 - 2p) / sqrt(p (1 - p)) = 2 / sqrt(3)
    const auto f = intensity_statistics({0, 0, 0, 255});
    EXPECT_NEAR(f.skewness, 2.0 / std::sqrt(3.0), 1e-12);
}

TEST(Moments, MatchDirectCentralMoments)
{
    Rng rng(4);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> x(5 + t);
        for (auto& v : x) v = std::exp(rng.normal());
        double mean = 0;
        for (double v : x) mean += v / static_cast<double>(x.size());
        double m2 = 0, m3 = 0, m4 = 0;
        for (double v : x) {
            m2 += std::pow(v - mean, 2) / static_cast<double>(x.size());
            m3 += std::pow(v - mean, 3) / static_cast<double>(x.size());
            m4 += std::pow(v - mean, 4) / static_cast<double>(x.size());
        }
        const auto m = moments(x);
        EXPECT_NEAR(m.skewness, m3 / std::pow(m2, 1.5), 1e-12);
        EXPECT_NEAR(m.kurtosis, m4 / (m2 * m2) - 3.0, 1e-12);
    }
}

// Texture ---------------------------------------------------------------------

TEST(Texture, ConstantPatch)
{
    GrayImage g(8, 8, 100.0);
    const auto f = extract_texture(g);
    EXPECT_DOUBLE_EQ(f.haralick.angular_second_moment, 1.0);
    EXPECT_EQ(f.haralick.contrast, 0.0);
    EXPECT_DOUBLE_EQ(f.haralick.inverse_difference_moment, 1.0);
    EXPECT_EQ(f.haralick.correlation, 0.0);
    EXPECT_EQ(f.gradient.grad_mean, 0.0);
    EXPECT_EQ(f.gradient.canny_sum, 0.0);
}

TEST(Texture, CheckerboardHorizontalContrastIsOne)
{
    LevelImage img(8, 8);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) img.at(r, c) = static_cast<std::uint8_t>((r + c) % 2);
    EXPECT_DOUBLE_EQ(haralick(Glcm(img, kGlcmDirections[0])).contrast, 1.0);
    EXPECT_DOUBLE_EQ(oracle::haralick(oracle::glcm(img, 0, 1, kGlcmLevels))[1], 1.0);
}

TEST(Texture, GoldenImages)
{
    const auto g = testutil::read_golden("haralick_golden.json");
    for (const auto& im : g["images"]) {
        const auto f = haralick_mean(quantize(gray_from_json(im["gray"]))).values();
        for (std::size_t k = 0; k < f.size(); ++k) {
            const auto key = std::string(names::kTexture[k]).substr(std::string("haralick_").size());
            EXPECT_NEAR(f[k], im["averaged"][key].get<double>(), 1e-10) << im["name"] << " " << key;
        }
    }
}

TEST(Texture, MatchesBruteForceGlcm)
{
    Rng rng(17);
    for (int t = 0; t < 40; ++t) {
        const int h = 4 + static_cast<int>(rng.below(13)), w = 4 + static_cast<int>(rng.below(13));
        const int levels = t % 2 ? 64 : 2 + static_cast<int>(rng.below(8));
        const auto img = testutil::random_levels(h, w, levels, rng);
        const auto got = haralick_mean(img).values();
        const auto want = oracle::haralick_mean(img);
        for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got[k], want[k], 1e-10) << "image " << t << " k " << k;
        EXPECT_LE(got[0], 1.0);
    }
}

TEST(Texture, AsmIsOneOnlyForSingleEntry)
{
    Rng rng(3);
    LevelImage flat(5, 5, 7);
    EXPECT_DOUBLE_EQ(haralick(Glcm(flat, kGlcmDirections[0])).angular_second_moment, 1.0);
    const auto img = testutil::random_levels(6, 6, 4, rng);
    EXPECT_LT(haralick(Glcm(img, kGlcmDirections[0])).angular_second_moment, 1.0);
}

TEST(Texture, TransposeInvariantAverage)
{
    Rng rng(8);
    for (int t = 0; t < 10; ++t) {
        const auto img = testutil::random_levels(7, 11, 16, rng);
        LevelImage tr(img.width(), img.height());
        for (int r = 0; r < img.height(); ++r)
            for (int c = 0; c < img.width(); ++c) tr.at(c, r) = img.at(r, c);
        const auto a = haralick_mean(img).values(), b = haralick_mean(tr).values();
        for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
    }
}

// Whole-cell extraction -----------------------------------------------------------

TEST(Extract, RepeatedCallsBitIdentical)
{
    RgbImage tile(32, 32);
    Rng rng(2);
    for (auto& v : tile.data()) v = static_cast<std::uint8_t>(rng.below(256));
    LabelImage mask(32, 32);
    for (int r = 8; r < 20; ++r)
        for (int c = 5; c < 22; ++c) mask.at(r, c) = 3;
    const std::vector<CellTableRow> rows{{"t", 3, CellClass::tumor, true}};
    const auto a = extract_tile("t", tile, mask, rows), b = extract_tile("t", tile, mask, rows);
    ASSERT_EQ(a.size(), 1u);
    EXPECT_TRUE(a[0].computed);
    EXPECT_FALSE(a[0].degenerate);
    EXPECT_EQ(a[0].values, b[0].values);
    for (double v : a[0].values) EXPECT_TRUE(std::isfinite(v));
}

TEST(Extract, MaskAndTableMustAgree)
{
    RgbImage tile(8, 8);
    LabelImage mask(8, 8);
    mask.at(2, 2) = 5;
    EXPECT_THROW(extract_tile("t", tile, mask, {}), SchemaError);
    EXPECT_THROW(extract_tile("t", tile, mask, {{"t", 5, CellClass::tumor, true}, {"t", 6, CellClass::tumor, true}}),
                 SchemaError);
}
