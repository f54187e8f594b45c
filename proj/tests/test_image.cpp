#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <string>

#include "oracles.hpp"
#include "safbage/safbage.hpp"

using namespace safbage;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

std::string decode_message(const std::string& text) {
    try {
        (void)load_pnm(bytes_of(text));
    } catch (const DecodeError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST(Pnm, GrayRoundTripIsByteExact) {
    std::string file = "P5\n3 2\n255\n";
    for (int v : {0, 1, 127, 128, 254, 255}) file.push_back(static_cast<char>(v));
    const auto bytes = bytes_of(file);
    const Image img = load_pnm(bytes);
    EXPECT_EQ(img.width, 3);
    EXPECT_EQ(img.height, 2);
    EXPECT_EQ(img.channels, 1);
    EXPECT_DOUBLE_EQ(img.at(0, 0, 2), 127.0 / 255.0);
    EXPECT_EQ(save_pnm(img), bytes);
}

TEST(Pnm, ColorIsInterleavedOnDiskPlanarInMemory) {
    std::string file = "P6 2 1 255 ";
    for (int v : {10, 20, 30, 40, 50, 60}) file.push_back(static_cast<char>(v));
    const Image img = load_pnm(bytes_of(file));
    ASSERT_EQ(img.channels, 3);
    EXPECT_DOUBLE_EQ(img.at(0, 0, 0), 10 / 255.0);
    EXPECT_DOUBLE_EQ(img.at(1, 0, 0), 20 / 255.0);
    EXPECT_DOUBLE_EQ(img.at(0, 0, 1), 40 / 255.0);
    EXPECT_DOUBLE_EQ(img.at(2, 0, 1), 60 / 255.0);
    const auto out = save_pnm(img);
    EXPECT_EQ(std::string(out.begin(), out.begin() + 11), "P6\n2 1\n255\n");
    EXPECT_EQ(out.back(), 60);
}

TEST(Pnm, HeaderCommentsAreSkipped) {
    std::string file = "P5\n# made by hand\n2 # width\n1\n255\n";
    file += "\x05\x06";
    const Image img = load_pnm(bytes_of(file));
    EXPECT_EQ(img.width, 2);
    EXPECT_DOUBLE_EQ(img.at(0, 0, 1), 6 / 255.0);
}

TEST(Pnm, QuantizeRoundsHalfAwayFromZero) {
    EXPECT_EQ(quantize_255(127.5 / 255.0), 128);
    EXPECT_EQ(quantize_255(0.5 / 255.0), 1);
    EXPECT_EQ(quantize_255(0.49 / 255.0), 0);
    EXPECT_EQ(quantize_255(-0.2), 0);
    EXPECT_EQ(quantize_255(1.7), 255);
}

TEST(Pnm, RejectsBadInput) {
    EXPECT_NE(decode_message("P3\n1 1\n255\n0").find("magic"), std::string::npos);
    EXPECT_NE(decode_message("P5\n0 4\n255\n").find("zero dimension"), std::string::npos);
    EXPECT_NE(decode_message("P5\n1 1\n65535\n\x01\x02").find("maxval"), std::string::npos);
    const std::string truncated = decode_message("P5\n2 2\n255\n\x01\x02\x03");
    EXPECT_NE(truncated.find("expected 4 bytes"), std::string::npos) << truncated;
    EXPECT_NE(decode_message("P5\nxx 2\n255\n").find("offset"), std::string::npos);
}

TEST(Resize, SameSizeIsIdentity) {
    std::mt19937_64 gen(1);
    const Image img = oracle::random_image(gen, 7, 5, 3);
    EXPECT_EQ(resize_bilinear(img, 7, 5), img);
}

TEST(Resize, CornerAlignedUpsample) {
    Image img(2, 2, 1);
    img.data = {0.0, 1.0, 0.5, 0.25};
    const Image up = resize_bilinear(img, 3, 3);
    EXPECT_DOUBLE_EQ(up.at(0, 0, 0), 0.0);
    EXPECT_DOUBLE_EQ(up.at(0, 0, 2), 1.0);
    EXPECT_DOUBLE_EQ(up.at(0, 2, 2), 0.25);
    EXPECT_DOUBLE_EQ(up.at(0, 0, 1), 0.5);
    EXPECT_DOUBLE_EQ(up.at(0, 1, 1), (0.0 + 1.0 + 0.5 + 0.25) / 4.0);
}

TEST(Resize, SinglePixelAxisSamplesCenter) {
    Image img(3, 1, 1);
    img.data = {0.0, 0.4, 1.0};
    EXPECT_DOUBLE_EQ(resize_bilinear(img, 1, 1).at(0, 0, 0), 0.4);
}

TEST(Crop, OutsidePixelsRepeatTheEdge) {
    Image img(2, 2, 1);
    img.data = {0.1, 0.2, 0.3, 0.4};
    const Image c = crop_with_edge_pad(img, {-1, -1, 4, 4});
    EXPECT_DOUBLE_EQ(c.at(0, 0, 0), 0.1);
    EXPECT_DOUBLE_EQ(c.at(0, 0, 3), 0.2);
    EXPECT_DOUBLE_EQ(c.at(0, 3, 0), 0.3);
    EXPECT_DOUBLE_EQ(c.at(0, 2, 2), 0.4);
    EXPECT_DOUBLE_EQ(c.at(0, 1, 1), 0.1);
    EXPECT_THROW((void)crop_with_edge_pad(img, {0, 0, 0, 2}), ShapeError);
}

TEST(Geometry, FlipTwiceIsIdentity) {
    std::mt19937_64 gen(2);
    const Image img = oracle::random_image(gen, 6, 4, 3);
    const Image f = flip_horizontal(img);
    EXPECT_DOUBLE_EQ(f.at(1, 2, 0), img.at(1, 2, 5));
    EXPECT_EQ(flip_horizontal(f), img);
}

TEST(Geometry, RotateZeroIsIdentityAndConstantStaysConstant) {
    std::mt19937_64 gen(3);
    const Image img = oracle::random_image(gen, 9, 7, 3);
    const Image r0 = rotate(img, 0.0);
    for (std::size_t i = 0; i < img.data.size(); ++i) EXPECT_NEAR(r0.data[i], img.data[i], 1e-12);
    const Image flat(8, 8, 1, 0.37);
    for (double v : rotate(flat, 3.0).data) EXPECT_NEAR(v, 0.37, 1e-12);
    EXPECT_THROW((void)rotate(img, 46.0), ConfigError);
}

TEST(Geometry, PositiveAngleTurnsContentCounterClockwise) {
    Image img(3, 3, 1, 0.0);
    img.at(0, 1, 2) = 1.0;
    const Image r = rotate(img, 45.0);
    // counter-clockwise on screen moves the right-center marker up-right
    double best = -1;
    int by = 0, bx = 0;
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x)
            if (r.at(0, y, x) > best) best = r.at(0, y, x), by = y, bx = x;
    EXPECT_EQ(by, 0);
    EXPECT_EQ(bx, 2);
}

TEST(Geometry, GrayscaleUsesRec601Weights) {
    Image img(1, 1, 3);
    img.data = {1.0, 0.0, 0.0};
    EXPECT_DOUBLE_EQ(to_grayscale(img).data[0], 0.299);
    img.data = {0.2, 0.4, 0.6};
    EXPECT_DOUBLE_EQ(to_grayscale(img).data[0], 0.299 * 0.2 + 0.587 * 0.4 + 0.114 * 0.6);
}

TEST(FaceCrop, ExpandGrowsThirtyPercentAroundCenter) {
    const BBox b = expand_bbox({10, 20, 100, 50}, 0.30);
    EXPECT_EQ(b, (BBox{-5, 13, 130, 65}));
    EXPECT_EQ(expand_bbox({10, 20, 100, 50}, 0.0), (BBox{10, 20, 100, 50}));
    EXPECT_THROW((void)expand_bbox({0, 0, 10, 10}, -0.1), ConfigError);
}

TEST(FaceCrop, PrepareFaceProducesSquareOutput) {
    std::mt19937_64 gen(4);
    const Image img = oracle::random_image(gen, 40, 30, 3);
    const Image face = prepare_face(img, {30, 20, 20, 15}, {0.30, 32});
    EXPECT_EQ(face.width, 32);
    EXPECT_EQ(face.height, 32);
    EXPECT_EQ(face.channels, 3);
    const Image direct = resize_bilinear(crop_with_edge_pad(img, expand_bbox({30, 20, 20, 15}, 0.30)), 32, 32);
    EXPECT_EQ(face, direct);
}

TEST(Rng, SeedsAreReproducibleAndStreamsDiffer) {
    EXPECT_EQ(derive_seed(7, 1, 2), derive_seed(7, 1, 2));
    EXPECT_NE(derive_seed(7, 1, 2), derive_seed(7, 2, 1));
    Rng a(5), b(5);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    Rng r(9);
    r.shuffle(std::span<int>(v));
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
}
