#include "flowerpose/segmentation.hpp"

#include <limits>
#include <string>

#include "flowerpose/clustering.hpp"
#include "flowerpose/error.hpp"
#include "flowerpose/log.hpp"

namespace flowerpose {

std::vector<std::size_t> filter_by_hsv_indices(const PointCloud& cloud, const HsvRange& range)
{
    range.validate();
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (range.contains(rgb_to_hsv(cloud.color(i))))
            out.push_back(i);
    return out;
}

PointCloud filter_by_hsv(const PointCloud& cloud, const HsvRange& range)
{
    const auto idx = filter_by_hsv_indices(cloud, range);
    return cloud.subset(idx);
}

std::vector<std::size_t> select_pistil_indices(const PointCloud& candidates, const Vec3& petal_centroid, double eps,
                                               int min_points)
{
    if (candidates.empty())
        return {};
    const auto labels = dbscan(candidates, eps, min_points);
    const auto clusters = labels.members();

    std::size_t best = clusters.size();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < clusters.size(); ++k) {
        const Vec3 c = centroid(candidates.subset(clusters[k]));
        const double d = (c - petal_centroid).norm();
        if (d < best_dist) {
            best_dist = d;
            best = k;
        }
    }
    if (best == clusters.size())
        return {};
    return clusters[best];
}

PointCloud select_pistil(const PointCloud& candidates, const Vec3& petal_centroid, double eps, int min_points)
{
    const auto idx = select_pistil_indices(candidates, petal_centroid, eps, min_points);
    return candidates.subset(idx);
}

FlowerSegment segment_flower(const PointCloud& flower, const SegmentationParams& params)
{
    if (flower.empty())
        throw InvalidArgument("segment_flower: empty flower cloud");

    FlowerSegment seg;
    seg.flower_centroid = centroid(flower);
    seg.petal_indices = filter_by_hsv_indices(flower, params.petal_range);
    if (seg.petal_indices.size() < static_cast<std::size_t>(params.min_petal_points))
        throw UnfittableFlower("unfittable flower: " + std::to_string(seg.petal_indices.size()) +
                               " petal points, need " + std::to_string(params.min_petal_points));
    seg.petals = flower.subset(seg.petal_indices);
    seg.petal_centroid = centroid(seg.petals);

    const auto candidate_idx = filter_by_hsv_indices(flower, params.pistil_range);
    const PointCloud candidates = flower.subset(candidate_idx);
    for (auto k : select_pistil_indices(candidates, seg.petal_centroid, params.pistil_eps, params.pistil_min_points))
        seg.pistil_indices.push_back(candidate_idx[k]);
    seg.pistil = flower.subset(seg.pistil_indices);
    if (!seg.pistil.empty())
        seg.pistil_centroid = centroid(seg.pistil);
    else
        log::info("segment_flower: no pistil cluster found");
    return seg;
}

} // namespace flowerpose
