#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "flowerpose/cloud.hpp"

namespace flowerpose {

struct Neighbor {
    std::size_t index;
    double distance;
};

// Static 3D kd-tree over a borrowed point array. The points must outlive
// the tree.
class KdTree {
public:
    explicit KdTree(std::span<const Vec3> points, std::size_t leaf_size = 16);

    // k nearest neighbors of `query`, ascending by distance (ties by index).
    // `exclude` skips one index, used for self-queries.
    std::vector<Neighbor> knn(const Vec3& query, std::size_t k,
                              std::size_t exclude = static_cast<std::size_t>(-1)) const;

    // Number of points with distance <= radius.
    std::size_t radius_count(const Vec3& query, double radius) const;

    std::size_t size() const { return points_.size(); }

private:
    struct Node {
        std::uint32_t begin = 0;
        std::uint32_t end = 0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        int axis = -1;
        double split = 0.0;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end, int depth);

    std::span<const Vec3> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::size_t leaf_size_;
};

// Uniform hash grid with cubic cells. Radius queries with radius <= cell
// size only need to visit the 27 surrounding cells.
class SpatialHashGrid {
public:
    SpatialHashGrid(std::span<const Vec3> points, double cell_size);

    // Indices within `radius` of point `i` (self included), ascending.
    std::vector<std::size_t> neighbors(std::size_t i, double radius) const;
    std::size_t neighbor_count(std::size_t i, double radius) const;

    double cell_size() const { return cell_size_; }

private:
    struct CellKey {
        std::int64_t x, y, z;
        friend bool operator==(const CellKey&, const CellKey&) = default;
    };
    struct CellHash {
        std::size_t operator()(const CellKey& k) const noexcept;
    };

    CellKey key_of(const Vec3& p) const;

    template <typename Visit>
    void for_each_candidate(const Vec3& p, Visit&& visit) const;

    std::span<const Vec3> points_;
    double cell_size_;
    std::unordered_map<CellKey, std::vector<std::uint32_t>, CellHash> cells_;
};

} // namespace flowerpose
