#include "doctest.h"

#include "flowerpose/detection.hpp"
#include "flowerpose/error.hpp"
#include "flowerpose/extraction.hpp"
#include "flowerpose/synth.hpp"
#include "support.hpp"

using namespace flowerpose;

namespace {

class NullDetector final : public Detector {
public:
    std::vector<BBox2D> detect(const RgbImage&) const override { return {}; }
};

SyntheticScene three_flowers()
{
    PlantParams p;
    p.ground_density = 0.0;
    return make_plant(3, Aabb(Vec3(0, 0, 0), Vec3(0.5, 0.5, 0.3)), 0.0, 61, p);
}

std::size_t matched_within(const std::vector<FlowerCandidate>& flowers, const std::vector<GroundTruthLabel>& labels,
                           double tol)
{
    std::size_t n = 0;
    for (const auto& l : labels)
        for (const auto& f : flowers)
            if ((centroid(f.cloud) - l.position).norm() <= tol) {
                ++n;
                break;
            }
    return n;
}

} // namespace

TEST_SUITE("extraction") {

TEST_CASE("no detections gives no flowers")
{
    const auto scene = three_flowers();
    const auto r = extract_flowers(scene.cloud, NullDetector{}, {});
    CHECK(r.flowers.empty());
    CHECK(r.recovered.empty());
}

TEST_CASE("three flowers are recovered near their centers")
{
    const auto scene = three_flowers();
    const auto r = extract_flowers(scene.cloud, ColorThresholdDetector{}, {});
    CHECK(r.flowers.size() == 3);
    CHECK(matched_within(r.flowers, scene.labels, 0.02) == 3);
    for (const auto& f : r.flowers) {
        CHECK(f.cloud.size() == f.indices.size());
        for (std::size_t k = 0; k < f.indices.size(); ++k)
            CHECK(f.cloud.position(k) == scene.cloud.position(f.indices[k]));
    }
}

TEST_CASE("duplicating every point keeps the cluster count")
{
    const auto scene = three_flowers();
    const auto doubled = PointCloud::concat(scene.cloud, scene.cloud);
    const auto a = extract_flowers(scene.cloud, ColorThresholdDetector{}, {});
    const auto b = extract_flowers(doubled, ColorThresholdDetector{}, {});
    CHECK(a.flowers.size() == b.flowers.size());
    CHECK(matched_within(b.flowers, scene.labels, 0.02) == 3);
}

TEST_CASE("index bookkeeping and the score threshold")
{
    const auto scene = three_flowers();
    ExtractionParams params;
    auto projected = project_scene(scene.cloud, params);
    std::array<std::vector<BBox2D>, 6> boxes;
    const int w = projected.views[4].raster_width(), h = projected.views[4].raster_height();
    boxes[4] = {BBox2D{0, w - 1, 0, h - 1, 0.4}};
    const auto low = extract_with_boxes(scene.cloud, projected, boxes, params);
    CHECK(low.recovered.empty());
    CHECK(low.boxes[4].empty());
    boxes[4][0].score = 0.6;
    const auto high = extract_with_boxes(scene.cloud, projected, boxes, params);
    CHECK(high.recovered.size() == projected.views[4].resident_indices().size());
    CHECK(std::is_sorted(high.filtered.begin(), high.filtered.end()));
    CHECK(std::includes(high.recovered.begin(), high.recovered.end(), high.filtered.begin(), high.filtered.end()));
}

TEST_CASE("crop boxes and empty input")
{
    const auto scene = three_flowers();
    ExtractionParams params;
    params.crop_boxes = {Aabb(Vec3::Constant(-1), Vec3::Constant(2))};
    CHECK_THROWS_AS(extract_flowers(scene.cloud, NullDetector{}, params), InvalidArgument);
    CHECK_THROWS_AS(extract_flowers(PointCloud{}, NullDetector{}, {}), InvalidArgument);
}

}
