#include "flowerpose/extraction.hpp"

#include <algorithm>

#include "flowerpose/error.hpp"

namespace flowerpose {

ProjectedScene project_scene(const PointCloud& input, const ExtractionParams& params)
{
    if (input.empty())
        throw InvalidArgument("extract_flowers: empty cloud");
    ProjectedScene scene;
    scene.kept = crop_outside_indices(input, params.crop_boxes);
    if (scene.kept.empty())
        throw InvalidArgument("extract_flowers: crop boxes removed every point");
    scene.cloud = input.subset(scene.kept);
    scene.views = project_all_views(scene.cloud, params.projection);
    return scene;
}

ExtractionResult extract_flowers(const PointCloud& input, const Detector& detector, const ExtractionParams& params)
{
    ProjectedScene scene = project_scene(input, params);
    std::array<std::vector<BBox2D>, 6> detected;
    for (std::size_t v = 0; v < detected.size(); ++v)
        detected[v] = detector.detect(scene.views[v].image);
    return extract_with_boxes(input, std::move(scene), detected, params);
}

ExtractionResult extract_with_boxes(const PointCloud& input, ProjectedScene scene,
                                    const std::array<std::vector<BBox2D>, 6>& detected, const ExtractionParams& params)
{
    ExtractionResult out;
    const auto& kept = scene.kept;
    const PointCloud& cloud = scene.cloud;

    std::vector<unsigned char> hit(cloud.size(), 0);
    for (std::size_t v = 0; v < detected.size(); ++v) {
        for (const auto& box : detected[v]) {
            if (box.score < params.score_threshold)
                continue;
            out.boxes[v].push_back(box);
            for (auto idx : back_project_indices(scene.views[v], box))
                hit[idx] = 1;
        }
    }
    out.views = std::move(scene.views);

    std::vector<std::size_t> local; // indices into `cloud`
    for (std::size_t i = 0; i < hit.size(); ++i)
        if (hit[i])
            local.push_back(i);
    for (auto i : local)
        out.recovered.push_back(kept[i]);
    if (local.empty())
        return out;

    PointCloud merged = cloud.subset(local);

    // Statistical filtering needs more than k points; smaller unions skip it.
    if (merged.size() > static_cast<std::size_t>(params.outliers.statistical_k)) {
        const auto keep = statistical_outlier_indices(merged, params.outliers.statistical_k,
                                                      params.outliers.statistical_std_ratio);
        std::vector<std::size_t> next;
        next.reserve(keep.size());
        for (auto k : keep)
            next.push_back(local[k]);
        local = std::move(next);
        merged = cloud.subset(local);
    }
    {
        const auto keep = radius_outlier_indices(merged, params.outliers.radius, params.outliers.radius_min_neighbors);
        std::vector<std::size_t> next;
        next.reserve(keep.size());
        for (auto k : keep)
            next.push_back(local[k]);
        local = std::move(next);
        merged = cloud.subset(local);
    }
    for (auto i : local)
        out.filtered.push_back(kept[i]);

    const ClusterLabeling labels = dbscan(merged, params.dbscan_eps, params.dbscan_min_points);
    for (auto& cuboid : bounding_cuboids(merged, labels)) {
        FlowerCandidate f;
        for (auto m : cuboid.member_indices)
            f.indices.push_back(kept[local[m]]);
        f.cloud = input.subset(f.indices);
        cuboid.member_indices = f.indices;
        f.cuboid = std::move(cuboid);
        out.flowers.push_back(std::move(f));
    }
    return out;
}

} // namespace flowerpose
