#include "doctest.h"

#include <numeric>

#include "flowerpose/capture.hpp"
#include "flowerpose/error.hpp"
#include "reference.hpp"
#include "support.hpp"

using namespace flowerpose;

namespace {

std::vector<FrameScore> scores_of(std::vector<double> v)
{
    std::vector<FrameScore> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back({i, v[i]});
    return out;
}

GrayImage checkerboard(int n, int cell)
{
    GrayImage g(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            g.at(x, y) = ((x / cell + y / cell) % 2) ? 1.0 : 0.0;
    return g;
}

GrayImage box_blur(const GrayImage& in, int passes)
{
    GrayImage cur = in;
    for (int p = 0; p < passes; ++p) {
        GrayImage next = cur;
        for (int y = 1; y < in.height() - 1; ++y)
            for (int x = 1; x < in.width() - 1; ++x) {
                double s = 0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx)
                        s += cur.at(x + dx, y + dy);
                next.at(x, y) = s / 9.0;
            }
        cur = next;
    }
    return cur;
}

} // namespace

TEST_SUITE("capture") {

TEST_CASE("constant image has zero sharpness")
{
    CHECK(sharpness_score(GrayImage(40, 30, 0.7)) == 0.0);
}

TEST_CASE("impulse response in closed form")
{
    // one pixel of height v inside the crop: responses -4v (center) and v (4 neighbors),
    // zero elsewhere; over n stencil pixels the variance is 20 v^2 / n - (0)^2
    const int size = 41;
    GrayImage g(size, size);
    const double v = 2.0;
    g.at(20, 20) = v;
    const double fraction = 0.5;
    // crop: lround(41 * 0.5) = 21 pixels per side, starting at 10; all have full stencils
    const double n = 21.0 * 21.0;
    CHECK(sharpness_score(g, fraction) == doctest::Approx(20.0 * v * v / n));
    CHECK(sharpness_score(g, fraction) == doctest::Approx(reference::sharpness(g, fraction)));
}

TEST_CASE("sharp checkerboard beats its blurred copy")
{
    const auto sharp = checkerboard(64, 4);
    CHECK(sharpness_score(sharp) > sharpness_score(box_blur(sharp, 2)));
}

TEST_CASE("agrees with the reference on random frames")
{
    testing::Rng rng(141);
    std::vector<GrayImage> frames;
    for (int k = 0; k < 6; ++k) {
        GrayImage g(30 + k, 25 + 2 * k);
        for (int y = 0; y < g.height(); ++y)
            for (int x = 0; x < g.width(); ++x)
                g.at(x, y) = rng.uniform();
        frames.push_back(g);
    }
    const auto scores = score_frames(frames, 0.6);
    for (std::size_t k = 0; k < frames.size(); ++k) {
        CHECK(scores[k].frame == k);
        CHECK(scores[k].sharpness == doctest::Approx(reference::sharpness(frames[k], 0.6)).epsilon(1e-12));
    }
}

TEST_CASE("sharpness preconditions")
{
    CHECK_THROWS_AS(sharpness_score(GrayImage(2, 5)), InvalidArgument);
    CHECK_THROWS_AS(sharpness_score(GrayImage(5, 5), 0.0), InvalidArgument);
    CHECK_THROWS_AS(sharpness_score(GrayImage(5, 5), 1.5), InvalidArgument);
}

TEST_CASE("frame selection examples")
{
    testing::Rng rng(142);
    std::vector<double> ten(10);
    for (auto& v : ten)
        v = rng.uniform();
    const auto best = static_cast<std::size_t>(std::max_element(ten.begin(), ten.end()) - ten.begin());
    CHECK(select_frames(scores_of(ten), 1) == std::vector<std::size_t>{best});

    CHECK(select_frames(scores_of({1, 9, 2, 3, 8, 1}), 2) == std::vector<std::size_t>{1, 4});
    CHECK(select_frames(scores_of({4, 4, 4, 4}), 2) == std::vector<std::size_t>{0, 2});
    CHECK_THROWS_AS(select_frames(scores_of({1, 2}), 3), InvalidArgument);
    CHECK_THROWS_AS(select_frames(scores_of({1, 2}), 0), InvalidArgument);
}

TEST_CASE("two hundred bins over thirty-six thousand frames")
{
    testing::Rng rng(143);
    std::vector<double> v(36000);
    for (auto& x : v)
        x = rng.uniform();
    const auto picked = select_frames(scores_of(v), 200);
    REQUIRE(picked.size() == 200);
    for (std::size_t b = 0; b < 200; ++b) {
        CHECK(picked[b] >= 180 * b);
        CHECK(picked[b] < 180 * (b + 1));
    }
}

TEST_CASE("uneven bins and shift invariance")
{
    testing::Rng rng(144);
    std::vector<double> v(23);
    for (auto& x : v)
        x = rng.uniform();
    const auto picked = select_frames(scores_of(v), 5); // bin sizes 5,5,5,4,4
    const std::size_t starts[] = {0, 5, 10, 15, 19, 23};
    REQUIRE(picked.size() == 5);
    for (std::size_t b = 0; b < 5; ++b) {
        CHECK(picked[b] >= starts[b]);
        CHECK(picked[b] < starts[b + 1]);
    }
    auto shifted = v;
    for (auto& x : shifted)
        x += 3.0;
    CHECK(select_frames(scores_of(shifted), 5) == picked);
}

}
