#include "flowerpose/clustering.hpp"

#include <deque>
#include <string>

#include "flowerpose/error.hpp"
#include "flowerpose/spatial.hpp"

namespace flowerpose {
namespace {

void check(double eps, int min_points)
{
    if (!(eps > 0.0))
        throw InvalidArgument("dbscan: eps must be positive");
    if (min_points < 1)
        throw InvalidArgument("dbscan: min_points must be >= 1");
}

std::vector<unsigned char> core_flags(const SpatialHashGrid& grid, std::size_t n, double eps, int min_points)
{
    std::vector<unsigned char> core(n, 0);
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 256)
    for (std::ptrdiff_t i = 0; i < count; ++i)
        core[i] = grid.neighbor_count(static_cast<std::size_t>(i), eps) >= static_cast<std::size_t>(min_points);
    return core;
}

} // namespace

std::vector<std::vector<std::size_t>> ClusterLabeling::members() const
{
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(cluster_count));
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] >= 0)
            out[labels[i]].push_back(i);
    return out;
}

std::vector<unsigned char> dbscan_core_points(const PointCloud& cloud, double eps, int min_points)
{
    check(eps, min_points);
    const SpatialHashGrid grid(cloud.positions(), eps);
    return core_flags(grid, cloud.size(), eps, min_points);
}

ClusterLabeling dbscan(const PointCloud& cloud, double eps, int min_points)
{
    check(eps, min_points);
    ClusterLabeling out;
    out.labels.assign(cloud.size(), ClusterLabeling::noise);
    if (cloud.empty())
        return out;

    const SpatialHashGrid grid(cloud.positions(), eps);
    const auto core = core_flags(grid, cloud.size(), eps, min_points);

    std::deque<std::size_t> frontier;
    for (std::size_t seed = 0; seed < cloud.size(); ++seed) {
        if (!core[seed] || out.labels[seed] != ClusterLabeling::noise)
            continue;
        const int id = out.cluster_count++;
        out.labels[seed] = id;
        frontier.assign(1, seed);
        while (!frontier.empty()) {
            const auto p = frontier.front();
            frontier.pop_front();
            for (auto q : grid.neighbors(p, eps)) {
                if (out.labels[q] != ClusterLabeling::noise)
                    continue;
                out.labels[q] = id;
                if (core[q])
                    frontier.push_back(q);
            }
        }
    }
    return out;
}

std::vector<BBox3D> bounding_cuboids(const PointCloud& cloud, const ClusterLabeling& labeling)
{
    if (labeling.labels.size() != cloud.size())
        throw InvalidArgument("bounding_cuboids: labeling has " + std::to_string(labeling.labels.size()) +
                              " labels for " + std::to_string(cloud.size()) + " points");
    std::vector<BBox3D> out;
    for (auto& members : labeling.members()) {
        if (members.empty())
            continue;
        BBox3D box;
        box.min_corner = cloud.position(members.front());
        box.max_corner = box.min_corner;
        for (auto i : members) {
            box.min_corner = box.min_corner.cwiseMin(cloud.position(i));
            box.max_corner = box.max_corner.cwiseMax(cloud.position(i));
        }
        box.member_indices = std::move(members);
        out.push_back(std::move(box));
    }
    return out;
}

} // namespace flowerpose
