#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "safbage/safbage.hpp"

using namespace safbage;

TEST(Normalize, MinMaxAndConstantRule) {
    SaliencyMap m(2, 1);
    m.values = {0.2, 0.7};
    EXPECT_EQ(normalize(m).values, (std::vector<double>{0.0, 1.0}));
    SaliencyMap flat(3, 3, 0.5);
    for (double v : normalize(flat).values) EXPECT_EQ(v, 0.0);
}

TEST(Normalize, RoundOffSpreadCountsAsConstant) {
    SaliencyMap m(2, 2, 0.4);
    m.values[3] += 1e-15;
    for (double v : normalize(m).values) EXPECT_EQ(v, 0.0);
}

TEST(Normalize, IdempotentAndOrderPreserving) {
    std::mt19937_64 gen(11);
    for (int t = 0; t < 20; ++t) {
        SaliencyMap m = oracle::random_map(gen, 6, 5);
        for (double& v : m.values) v = 3.0 * v - 1.0;
        const SaliencyMap once = normalize(m);
        EXPECT_EQ(normalize(once), once);
        std::vector<std::size_t> a(m.values.size()), b(m.values.size());
        std::iota(a.begin(), a.end(), 0);
        std::iota(b.begin(), b.end(), 0);
        std::stable_sort(a.begin(), a.end(), [&](auto i, auto j) { return m.values[i] < m.values[j]; });
        std::stable_sort(b.begin(), b.end(), [&](auto i, auto j) { return once.values[i] < once.values[j]; });
        EXPECT_EQ(a, b);
    }
}

TEST(FrequencyTuned, MatchesStraightLoopOracle) {
    std::mt19937_64 gen(12);
    for (int t = 0; t < 50; ++t) {
        const Image img = oracle::random_image(gen, 8, 8, 3);
        const auto expect = oracle::frequency_tuned(img);
        const SaliencyMap got = frequency_tuned(img);
        ASSERT_EQ(got.values.size(), expect.size());
        for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_NEAR(got.values[i], expect[i], 1e-6);
    }
}

TEST(FrequencyTuned, ConstantImageGivesZeros) {
    for (double level : {0.0, 0.3, 1.0}) {
        const SaliencyMap m = frequency_tuned(Image(8, 8, 3, level));
        for (double v : m.values) EXPECT_EQ(v, 0.0);
    }
}

TEST(FrequencyTuned, RawMapIgnoresUniformShift) {
    std::mt19937_64 gen(13);
    Image img = oracle::random_image(gen, 8, 8, 3);
    for (double& v : img.data) v = 0.1 + 0.6 * v;
    Image shifted = img;
    for (double& v : shifted.data) v += 0.25;
    const auto a = frequency_tuned_raw(img).values;
    const auto b = frequency_tuned_raw(shifted).values;
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-6);
}

TEST(FrequencyTuned, HalfSplitIsMirrorSymmetricWithOuterMaxima) {
    Image img(8, 8, 1, 0.0);
    for (int y = 0; y < 8; ++y)
        for (int x = 4; x < 8; ++x) img.at(0, y, x) = 1.0;
    const SaliencyMap m = frequency_tuned(img);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 4; ++x) EXPECT_NEAR(m.at(y, x), m.at(y, 7 - x), 1e-12);
    for (int y = 0; y < 8; ++y) {
        EXPECT_NEAR(m.at(y, 0), 1.0, 1e-12);
        EXPECT_NEAR(m.at(y, 7), 1.0, 1e-12);
        EXPECT_LT(m.at(y, 3), m.at(y, 0));
    }
}

TEST(CenterSurround, ConstantImageAndOutputShape) {
    const SaliencyMap flat = center_surround(Image(16, 12, 3, 0.4), 2);
    EXPECT_EQ(flat.width, 16);
    EXPECT_EQ(flat.height, 12);
    for (double v : flat.values) EXPECT_EQ(v, 0.0);
    std::mt19937_64 gen(14);
    const SaliencyMap m = center_surround(oracle::random_image(gen, 40, 33, 3), 5);
    EXPECT_EQ(m.width, 40);
    EXPECT_EQ(m.height, 33);
    for (double v : m.values) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(CenterSurround, BrightPixelIsThePeak) {
    Image img(16, 16, 1, 0.1);
    img.at(0, 6, 10) = 1.0;
    const SaliencyMap m = center_surround(img, 2);
    const auto it = std::max_element(m.values.begin(), m.values.end());
    const int idx = static_cast<int>(it - m.values.begin());
    EXPECT_LE(std::abs(idx / 16 - 6), 1);
    EXPECT_LE(std::abs(idx % 16 - 10), 1);
}

TEST(CenterSurround, RejectsBadLevels) {
    EXPECT_THROW((void)center_surround(Image(16, 16, 1), 1), ConfigError);
    EXPECT_THROW((void)center_surround(Image(16, 16, 1), 6), ConfigError);
    EXPECT_THROW((void)center_surround(Image(16, 7, 1), 3), ConfigError);
}

TEST(ExternalMap, IdentityAtTargetSize) {
    std::string pgm = "P5\n2 2\n255\n";
    for (int v : {0, 51, 255, 102}) pgm.push_back(static_cast<char>(v));
    const std::vector<std::uint8_t> bytes(pgm.begin(), pgm.end());
    const SaliencyMap m = load_external_map(bytes, 2, 2);
    EXPECT_DOUBLE_EQ(m.values[0], 0.0);
    EXPECT_DOUBLE_EQ(m.values[1], 0.2);
    EXPECT_DOUBLE_EQ(m.values[2], 1.0);
    EXPECT_DOUBLE_EQ(m.values[3], 0.4);
}

TEST(ExternalMap, CheckerboardUpsampleThenNormalize) {
    std::string pgm = "P5\n2 2\n255\n";
    for (int v : {0, 255, 255, 0}) pgm.push_back(static_cast<char>(v));
    const std::vector<std::uint8_t> bytes(pgm.begin(), pgm.end());
    const SaliencyMap m = load_external_map(bytes, 3, 3);
    // corner-aligned bilinear: corners keep their values, edges average two, center averages four
    const std::vector<double> expect{0.0, 0.5, 1.0, 0.5, 0.5, 0.5, 1.0, 0.5, 0.0};
    for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(m.values[i], expect[i], 1e-12);
}

TEST(ExternalMap, ConstantMapAndColorInput) {
    std::string pgm = "P5\n3 1\n255\n\x40\x40\x40";
    const std::vector<std::uint8_t> bytes(pgm.begin(), pgm.end());
    for (double v : load_external_map(bytes, 4, 4).values) EXPECT_EQ(v, 0.0);
    std::string ppm = "P6\n1 1\n255\n\x01\x02\x03";
    const std::vector<std::uint8_t> color(ppm.begin(), ppm.end());
    EXPECT_THROW((void)load_external_map(color, 1, 1), DecodeError);
}

TEST(Backend, NamesRoundTrip) {
    for (auto b : {SaliencyBackend::FrequencyTuned, SaliencyBackend::CenterSurround, SaliencyBackend::External})
        EXPECT_EQ(parse_saliency_backend(to_string(b)), b);
    EXPECT_THROW((void)parse_saliency_backend("mlnet"), ConfigError);
}
