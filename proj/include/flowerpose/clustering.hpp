#pragma once

#include <cstddef>
#include <vector>

#include "flowerpose/cloud.hpp"

namespace flowerpose {

struct ClusterLabeling {
    static constexpr int noise = -1;

    std::vector<int> labels; // aligned with cloud points
    int cluster_count = 0;

    std::vector<std::vector<std::size_t>> members() const;
};

struct BBox3D {
    Vec3 min_corner;
    Vec3 max_corner;
    std::vector<std::size_t> member_indices;
};

// DBSCAN with Euclidean metric. A core point has at least `min_points`
// points (itself included) within `eps`. Seeds are scanned in ascending
// index order, so a border point reachable from several clusters joins the
// one discovered first.
ClusterLabeling dbscan(const PointCloud& cloud, double eps, int min_points);

// Core flags computed in parallel; exposed for the benchmark and tests.
std::vector<unsigned char> dbscan_core_points(const PointCloud& cloud, double eps, int min_points);

std::vector<BBox3D> bounding_cuboids(const PointCloud& cloud, const ClusterLabeling& labeling);

} // namespace flowerpose
