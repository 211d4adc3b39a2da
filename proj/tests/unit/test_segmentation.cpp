#include "doctest.h"

#include <algorithm>
#include <set>

#include "flowerpose/error.hpp"
#include "flowerpose/segmentation.hpp"
#include "flowerpose/synth.hpp"
#include "support.hpp"

using namespace flowerpose;

namespace {

const Rgb kWhite{1, 1, 1};
const Rgb kYellow{1, 0.85, 0.1};
const Rgb kGreen{0.2, 0.5, 0.15};

PointCloud blob(const Vec3& center, double radius, std::size_t n, const Rgb& color, testing::Rng& rng)
{
    std::vector<Vec3> p;
    for (std::size_t i = 0; i < n; ++i)
        p.push_back(center + radius * Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)));
    return {std::move(p), std::vector<Rgb>(n, color)};
}

} // namespace

TEST_SUITE("segmentation") {

TEST_CASE("filter_by_hsv")
{
    testing::Rng rng(71);
    const auto white = blob(Vec3::Zero(), 0.01, 50, kWhite, rng);
    const SegmentationParams params;
    CHECK(filter_by_hsv(white, params.petal_range).positions() == white.positions());

    const auto mixed = PointCloud::concat(white, blob(Vec3::Zero(), 0.01, 17, kYellow, rng));
    const auto yellow = filter_by_hsv_indices(mixed, {40, 70, 0, 1, 0, 1});
    CHECK(yellow.size() == 17);
    CHECK(yellow.front() == 50);

    const PointCloud reddish({Vec3::Zero()}, {hsv_to_rgb({5.0, 0.8, 0.8})});
    CHECK(filter_by_hsv(reddish, {350, 10, 0, 1, 0, 1}).size() == 1);
}

TEST_CASE("select_pistil picks the cluster nearest the petals")
{
    testing::Rng rng(72);
    const auto one = blob(Vec3(0, 0, 0.005), 0.002, 30, kYellow, rng);
    CHECK(select_pistil(one, Vec3::Zero(), 0.01, 10).size() == 30);

    const auto stem = blob(Vec3(0, 0, -0.03), 0.002, 40, kYellow, rng);
    const auto both = PointCloud::concat(stem, one);
    const auto idx = select_pistil_indices(both, Vec3::Zero(), 0.01, 10);
    REQUIRE(idx.size() == 30);
    CHECK(idx.front() == 40);

    CHECK(select_pistil(PointCloud{}, Vec3::Zero(), 0.01, 10).empty());
}

TEST_CASE("synthetic flower with a stem")
{
    SyntheticFlowerSpec spec;
    spec.center = Vec3(0.1, 0.2, 0.3);
    const auto sample = make_flower(spec, 0.0002, 73);
    testing::Rng rng(74);
    std::vector<Vec3> sp;
    for (int i = 0; i < 200; ++i)
        sp.push_back(spec.center + Vec3(0.001 * rng.normal(), 0.001 * rng.normal(), -rng.uniform(0.003, 0.06)));
    const PointCloud stem(std::move(sp), std::vector<Rgb>(200, kGreen));
    const auto flower = PointCloud::concat(sample.cloud, stem);

    const auto seg = segment_flower(flower, {});
    std::set<std::size_t> petals, pistil;
    for (std::size_t i = 0; i < sample.membership.size(); ++i)
        (sample.membership[i] == Role::petal ? petals : pistil).insert(i);
    CHECK(std::set<std::size_t>(seg.petal_indices.begin(), seg.petal_indices.end()) == petals);
    CHECK(std::set<std::size_t>(seg.pistil_indices.begin(), seg.pistil_indices.end()) == pistil);
    CHECK(seg.flower_centroid == centroid(flower));
    CHECK(seg.petal_centroid == centroid(seg.petals));
    REQUIRE(seg.pistil_centroid.has_value());
    CHECK(*seg.pistil_centroid == centroid(seg.pistil));
}

TEST_CASE("leaf-only candidate is unfittable")
{
    testing::Rng rng(75);
    CHECK_THROWS_AS(segment_flower(blob(Vec3::Zero(), 0.02, 300, kGreen, rng), {}), UnfittableFlower);
    CHECK_THROWS_AS(segment_flower(PointCloud{}, {}), InvalidArgument);
}

TEST_CASE("missing pistil is a valid segment")
{
    testing::Rng rng(76);
    const auto seg = segment_flower(blob(Vec3::Zero(), 0.02, 300, kWhite, rng), {});
    CHECK(seg.pistil.empty());
    CHECK_FALSE(seg.pistil_centroid.has_value());
    CHECK(seg.petals.size() == 300);
}

TEST_CASE("petals and pistil are disjoint subsets")
{
    SyntheticFlowerSpec spec;
    const auto sample = make_flower(spec, 0.0005, 77);
    const auto seg = segment_flower(sample.cloud, {});
    std::vector<std::size_t> a = seg.petal_indices, b = seg.pistil_indices, both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    CHECK(both.empty());
    CHECK(a.back() < sample.cloud.size());
}

}
