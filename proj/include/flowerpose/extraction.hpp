#pragma once

#include <array>
#include <vector>

#include "flowerpose/clustering.hpp"
#include "flowerpose/detection.hpp"
#include "flowerpose/projection.hpp"

namespace flowerpose {

struct OutlierParams {
    int statistical_k = 20;
    double statistical_std_ratio = 2.0;
    double radius = 0.01;
    int radius_min_neighbors = 5;
};

struct ExtractionParams {
    ProjectionParams projection;
    double score_threshold = 0.5;
    OutlierParams outliers;
    double dbscan_eps = 0.01;
    int dbscan_min_points = 20;
    std::vector<Aabb> crop_boxes; // ground/clutter to delete before projecting
};

// One flower candidate: a DBSCAN cluster of back-projected points.
struct FlowerCandidate {
    std::vector<std::size_t> indices; // into the input cloud, ascending
    PointCloud cloud;
    BBox3D cuboid;
};

struct ExtractionResult {
    std::array<ViewProjection, 6> views;
    std::array<std::vector<BBox2D>, 6> boxes; // kept after the score threshold
    std::vector<std::size_t> recovered;       // union of back-projected indices, ascending
    std::vector<std::size_t> filtered;        // after outlier removal, ascending
    std::vector<FlowerCandidate> flowers;
};

// Input after cropping, and its six renderings.
struct ProjectedScene {
    std::vector<std::size_t> kept; // cropped index -> input index
    PointCloud cloud;
    std::array<ViewProjection, 6> views;
};

ProjectedScene project_scene(const PointCloud& input, const ExtractionParams& params);

// Extraction from boxes detected elsewhere (one list per view, in
// ViewDirection::all() order). Boxes below the score threshold are ignored.
ExtractionResult extract_with_boxes(const PointCloud& input, ProjectedScene scene,
                                    const std::array<std::vector<BBox2D>, 6>& detected, const ExtractionParams& params);

// Projects the cloud along all six axis directions, detects boxes in each
// raster, back-projects them, unions the recovered points, removes outliers
// and clusters the result. One candidate per cluster, in label order.
ExtractionResult extract_flowers(const PointCloud& cloud, const Detector& detector, const ExtractionParams& params);

} // namespace flowerpose
