#pragma once

// Serial brute-force counterparts of the parallel kernels. Written for
// clarity, not speed; used as test oracles and benchmark baselines.

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "flowerpose/capture.hpp"
#include "flowerpose/cloud.hpp"
#include "flowerpose/evaluation.hpp"
#include "flowerpose/projection.hpp"

namespace flowerpose::reference {

std::vector<std::array<int, 2>> pixels_of(const PointCloud& cloud, ViewDirection direction,
                                          const ProjectionParams& params);
std::array<int, 2> pixel_of(const PointCloud& cloud, std::size_t i, ViewDirection direction,
                            const ProjectionParams& params);

struct View {
    std::vector<std::int32_t> grid;
    RgbImage image;
};

// Every cell owned by its nearest point (lowest index on equal depth);
// every pixel painted by the nearest owned cell within the radius, ties to
// the cell whose owner comes first in depth order.
View project_view(const PointCloud& cloud, ViewDirection direction, const ProjectionParams& params);

// Clusters are connected components of core points, numbered by their
// smallest core index. A border point joins the adjacent cluster with the
// smallest number.
std::vector<int> dbscan(const std::vector<Vec3>& points, double eps, int min_points);

std::vector<std::size_t> statistical_outlier_indices(const std::vector<Vec3>& points, int k, double std_ratio);
std::vector<std::size_t> radius_outlier_indices(const std::vector<Vec3>& points, double radius, int min_neighbors);

double sharpness(const GrayImage& image, double center_fraction);

// Repeatedly takes the closest free (detection, label) pair.
std::vector<std::pair<std::size_t, std::string>> greedy_match(const std::vector<Vec3>& detections,
                                                              const std::vector<GroundTruthLabel>& labels,
                                                              double max_dist);

} // namespace flowerpose::reference
