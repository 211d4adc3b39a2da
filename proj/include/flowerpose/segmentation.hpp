#pragma once

#include <optional>
#include <vector>

#include "flowerpose/cloud.hpp"

namespace flowerpose {

struct SegmentationParams {
    HsvRange petal_range{0.0, 360.0, 0.0, 0.25, 0.6, 1.0};
    HsvRange pistil_range{40.0, 70.0, 0.3, 1.0, 0.4, 1.0};
    double pistil_eps = 0.01;
    int pistil_min_points = 10;
    int min_petal_points = 30;
};

struct FlowerSegment {
    PointCloud petals;
    PointCloud pistil; // empty when no pistil cluster was found
    std::vector<std::size_t> petal_indices;  // into the flower cloud
    std::vector<std::size_t> pistil_indices; // into the flower cloud
    Vec3 petal_centroid = Vec3::Zero();
    std::optional<Vec3> pistil_centroid;
    Vec3 flower_centroid = Vec3::Zero();
};

std::vector<std::size_t> filter_by_hsv_indices(const PointCloud& cloud, const HsvRange& range);
PointCloud filter_by_hsv(const PointCloud& cloud, const HsvRange& range);

// DBSCAN over pistil candidates; returns the indices (into `candidates`) of
// the cluster whose centroid is closest to `petal_centroid`, or nothing when
// there are no clusters. Equal distances go to the lower cluster label.
std::vector<std::size_t> select_pistil_indices(const PointCloud& candidates, const Vec3& petal_centroid, double eps,
                                               int min_points);
PointCloud select_pistil(const PointCloud& candidates, const Vec3& petal_centroid, double eps, int min_points);

// Petal and pistil split of one flower candidate. Throws UnfittableFlower
// when fewer than min_petal_points petal points survive.
FlowerSegment segment_flower(const PointCloud& flower, const SegmentationParams& params);

} // namespace flowerpose
