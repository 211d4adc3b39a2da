#include "doctest.h"

#include "flowerpose/detection.hpp"
#include "support.hpp"

using namespace flowerpose;

namespace {

const Rgb8 kWhite{255, 255, 255};
const Rgb8 kGreen{40, 140, 50};

void fill(RgbImage& img, int x0, int y0, int w, int h, Rgb8 c)
{
    for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x)
            img.at(x, y) = c;
}

ColorThresholdParams params(long long min_area, int gap)
{
    ColorThresholdParams p;
    p.min_area = min_area;
    p.merge_gap = gap;
    return p;
}

} // namespace

TEST_SUITE("detection") {

TEST_CASE("black raster has no detections")
{
    CHECK(color_threshold_detect(RgbImage(64, 64), {}).empty());
}

TEST_CASE("white square on green gives one tight box")
{
    RgbImage img(100, 80, kGreen);
    fill(img, 30, 20, 20, 20, kWhite);
    const auto boxes = color_threshold_detect(img, params(50, 5));
    REQUIRE(boxes.size() == 1);
    CHECK(boxes[0].x_min == 30);
    CHECK(boxes[0].x_max == 49);
    CHECK(boxes[0].y_min == 20);
    CHECK(boxes[0].y_max == 39);
    CHECK(boxes[0].score >= 0.9);
}

TEST_CASE("merge gap decides whether two squares merge")
{
    RgbImage far(120, 60, kGreen), near(120, 60, kGreen);
    fill(far, 10, 10, 10, 10, kWhite);
    fill(far, 40, 10, 10, 10, kWhite); // 20 px apart
    fill(near, 10, 10, 10, 10, kWhite);
    fill(near, 24, 10, 10, 10, kWhite); // 4 px apart
    CHECK(color_threshold_detect(far, params(30, 5)).size() == 2);
    const auto merged = color_threshold_detect(near, params(30, 5));
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].x_min == 10);
    CHECK(merged[0].x_max == 33);
    CHECK(merged[0].score < 1.0);
}

TEST_CASE("box gap")
{
    CHECK(box_gap({0, 9, 0, 9}, {10, 12, 0, 9}) == 0);
    CHECK(box_gap({0, 9, 0, 9}, {15, 20, 0, 9}) == 5);
    CHECK(box_gap({0, 9, 0, 9}, {12, 20, 30, 40}) == 20);
}

TEST_CASE("eight-connectivity joins diagonal pixels")
{
    RgbImage img(10, 10);
    for (int i = 0; i < 8; ++i)
        img.at(i, i) = kWhite;
    const auto boxes = color_threshold_detect(img, params(1, 0));
    REQUIRE(boxes.size() == 1);
    CHECK(boxes[0].x_max == 7);
}

TEST_CASE("count is non-increasing in min_area and boxes stay in bounds")
{
    testing::Rng rng(41);
    RgbImage img(80, 80, kGreen);
    for (int k = 0; k < 25; ++k) {
        const int s = 1 + static_cast<int>(rng.uniform() * 9);
        fill(img, static_cast<int>(rng.uniform() * (80 - s)), static_cast<int>(rng.uniform() * (80 - s)), s, s, kWhite);
    }
    std::size_t previous = std::numeric_limits<std::size_t>::max();
    for (long long a : {1, 5, 10, 30, 60, 100, 1000}) {
        const auto boxes = color_threshold_detect(img, params(a, 2));
        CHECK(boxes.size() <= previous);
        previous = boxes.size();
        for (const auto& b : boxes) {
            CHECK(b.x_min >= 0);
            CHECK(b.y_min >= 0);
            CHECK(b.x_min <= b.x_max);
            CHECK(b.y_min <= b.y_max);
            CHECK(b.x_max < 80);
            CHECK(b.y_max < 80);
            CHECK(b.score >= 0.0);
            CHECK(b.score <= 1.0);
        }
    }
}

TEST_CASE("recoloring non-passing pixels does not change detections")
{
    testing::Rng rng(42);
    RgbImage a(60, 60, kGreen);
    fill(a, 5, 5, 12, 12, kWhite);
    fill(a, 30, 35, 15, 8, kWhite);
    RgbImage b = a;
    for (int y = 0; y < 60; ++y)
        for (int x = 0; x < 60; ++x)
            if (b.at(x, y) != kWhite)
                b.at(x, y) = {static_cast<std::uint8_t>(rng.uniform() * 120), static_cast<std::uint8_t>(rng.uniform() * 255),
                              static_cast<std::uint8_t>(rng.uniform() * 40)};
    CHECK(color_threshold_detect(a, {}) == color_threshold_detect(b, {}));
}

}
