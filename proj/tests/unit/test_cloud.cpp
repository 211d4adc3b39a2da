#include "doctest.h"

#include <algorithm>
#include <numeric>

#include "flowerpose/cloud.hpp"
#include "flowerpose/error.hpp"
#include "reference.hpp"
#include "support.hpp"

using namespace flowerpose;

namespace {

PointCloud from_points(std::vector<Vec3> p)
{
    std::vector<Rgb> c(p.size(), Rgb{0.5, 0.5, 0.5});
    return {std::move(p), std::move(c)};
}

bool same_points(const PointCloud& a, const PointCloud& b)
{
    return a.positions() == b.positions() && a.colors() == b.colors();
}

} // namespace

TEST_SUITE("cloud") {

TEST_CASE("constructor enforces its invariants")
{
    CHECK_THROWS_AS(PointCloud({Vec3::Zero()}, {}), InvalidArgument);
    CHECK_THROWS_AS(PointCloud({Vec3(std::nan(""), 0, 0)}, {Rgb{}}), InvalidArgument);
    CHECK_THROWS_AS(PointCloud({Vec3::Zero()}, {Rgb{1.5, 0, 0}}), InvalidArgument);
    CHECK_THROWS_AS(Aabb(Vec3(1, 0, 0), Vec3(0, 1, 1)), InvalidArgument);
}

TEST_CASE("crop_outside with no boxes is the identity")
{
    const auto c = testing::random_cloud(50, 1);
    CHECK(same_points(crop_outside(c, {}), c));
}

TEST_CASE("crop_outside removes the covered point")
{
    const auto c = from_points({Vec3(0, 0, 0), Vec3(0, 0, 1)});
    const std::vector<Aabb> boxes{Aabb(Vec3(-1, -1, -0.1), Vec3(1, 1, 0.1))};
    const auto out = crop_outside(c, boxes);
    REQUIRE(out.size() == 1);
    CHECK(out.position(0) == Vec3(0, 0, 1));
}

TEST_CASE("crop_outside matches a per-point containment check and partitions the cloud")
{
    const auto c = testing::random_cloud(1000, 2);
    const std::vector<Aabb> boxes{Aabb(Vec3(-1, -1, -1), Vec3(2, 2, 0.5)), Aabb(Vec3(0.8, 0.8, 0.8), Vec3(1, 1, 1))};
    std::vector<std::size_t> outside, inside;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const Vec3& p = c.position(i);
        bool in = false;
        for (const auto& b : boxes)
            in = in || ((p.array() >= b.min_corner.array()).all() && (p.array() <= b.max_corner.array()).all());
        (in ? inside : outside).push_back(i);
    }
    CHECK(crop_outside_indices(c, boxes) == outside);
    CHECK(outside.size() + inside.size() == c.size());
}

TEST_CASE("statistical outlier removal drops an isolated point")
{
    testing::Rng rng(3);
    std::vector<Vec3> p;
    for (int i = 0; i < 100; ++i)
        p.emplace_back(0.01 * rng.normal(), 0.01 * rng.normal(), 0.01 * rng.normal());
    p.emplace_back(1.0, 0.0, 0.0);
    const auto c = from_points(p);
    const auto kept = statistical_outlier_indices(c, 10, 2.0);
    CHECK(std::find(kept.begin(), kept.end(), 100u) == kept.end());
    CHECK(kept == reference::statistical_outlier_indices(p, 10, 2.0));
}

TEST_CASE("statistical outlier removal keeps a uniform grid")
{
    std::vector<Vec3> p;
    for (int x = 0; x < 6; ++x)
        for (int y = 0; y < 6; ++y)
            for (int z = 0; z < 6; ++z)
                p.emplace_back(x, y, z);
    // nearest-neighbor distance is 1 everywhere, so the statistic has zero spread
    const auto c = from_points(p);
    CHECK(statistical_outlier_indices(c, 1, 2.0).size() == p.size());
    CHECK(statistical_outlier_indices(c, 6, 2.0) == reference::statistical_outlier_indices(p, 6, 2.0));
}

TEST_CASE("statistical outlier removal with equal neighbor distances removes nothing")
{
    // cube corners: every point has three neighbors at exactly distance 1
    std::vector<Vec3> p;
    for (int i = 0; i < 8; ++i)
        p.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
    CHECK(statistical_outlier_indices(from_points(p), 3, 0.5).size() == p.size());
}

TEST_CASE("statistical outlier removal needs more points than k")
{
    const auto c = testing::random_cloud(10, 4);
    CHECK_THROWS_AS(statistical_outlier_removal(c, 10, 2.0), InvalidArgument);
}

TEST_CASE("radius outlier removal")
{
    CHECK(radius_outlier_removal(from_points({Vec3::Zero()}), 0.01, 1).empty());
    CHECK(radius_outlier_removal(from_points({Vec3::Zero(), Vec3(0.005, 0, 0)}), 0.01, 1).size() == 2);

    const auto c = testing::random_cloud(500, 5, 0.2);
    const auto kept = radius_outlier_indices(c, 0.02, 3);
    CHECK(kept == reference::radius_outlier_indices(c.positions(), 0.02, 3));
    CHECK(std::is_sorted(kept.begin(), kept.end()));
}

TEST_CASE("centroid")
{
    CHECK(centroid(from_points({Vec3::Zero(), Vec3(2, 0, 0)})) == Vec3(1, 0, 0));
    CHECK(centroid(from_points({Vec3(0.3, -2, 7)})) == Vec3(0.3, -2, 7));
    CHECK_THROWS_AS(centroid(PointCloud{}), InvalidArgument);

    const auto c = testing::random_cloud(100, 6);
    long double sx = 0, sy = 0, sz = 0;
    for (const auto& p : c.positions()) {
        sx += p.x();
        sy += p.y();
        sz += p.z();
    }
    const Vec3 expect(static_cast<double>(sx / 100), static_cast<double>(sy / 100), static_cast<double>(sz / 100));
    CHECK((centroid(c) - expect).norm() <= 1e-12 * expect.norm());
}

TEST_CASE("rgb_to_hsv examples")
{
    auto h = rgb_to_hsv({1, 1, 1});
    CHECK(h.hue == 0.0);
    CHECK(h.saturation == 0.0);
    CHECK(h.value == 1.0);
    h = rgb_to_hsv({1, 1, 0});
    CHECK(h.hue == doctest::Approx(60.0));
    CHECK(h.saturation == 1.0);
    CHECK(h.value == 1.0);
    h = rgb_to_hsv({0.5, 0.25, 0.25});
    CHECK(h.hue == doctest::Approx(0.0));
    CHECK(h.saturation == doctest::Approx(0.5));
    CHECK(h.value == doctest::Approx(0.5));
    CHECK_THROWS_AS(rgb_to_hsv({1.2, 0, 0}), InvalidArgument);
}

TEST_CASE("hsv round trip for saturated colors")
{
    testing::Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const Rgb c{rng.uniform(), rng.uniform(), rng.uniform()};
        const auto hsv = rgb_to_hsv(c);
        if (hsv.saturation == 0.0)
            continue;
        const Rgb back = hsv_to_rgb(hsv);
        CHECK(std::abs(back.r - c.r) < 1e-9);
        CHECK(std::abs(back.g - c.g) < 1e-9);
        CHECK(std::abs(back.b - c.b) < 1e-9);
    }
}

TEST_CASE("hue ranges wrap around")
{
    const HsvRange wrap{350.0, 10.0, 0.0, 1.0, 0.0, 1.0};
    CHECK(wrap.contains({5.0, 0.5, 0.5}));
    CHECK(wrap.contains({355.0, 0.5, 0.5}));
    CHECK_FALSE(wrap.contains({180.0, 0.5, 0.5}));
}

TEST_CASE("outlier filters return ordered subsets")
{
    const auto c = testing::random_cloud(300, 8, 0.3);
    for (const auto& kept : {statistical_outlier_indices(c, 8, 1.0), radius_outlier_indices(c, 0.05, 2)}) {
        CHECK(std::is_sorted(kept.begin(), kept.end()));
        CHECK(std::adjacent_find(kept.begin(), kept.end()) == kept.end());
        CHECK((kept.empty() || kept.back() < c.size()));
    }
}

}
