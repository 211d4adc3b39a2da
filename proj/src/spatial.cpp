#include "flowerpose/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "flowerpose/error.hpp"

namespace flowerpose {

KdTree::KdTree(std::span<const Vec3> points, std::size_t leaf_size)
    : points_(points), leaf_size_(std::max<std::size_t>(leaf_size, 1))
{
    order_.resize(points.size());
    for (std::size_t i = 0; i < order_.size(); ++i)
        order_[i] = static_cast<std::uint32_t>(i);
    if (!order_.empty())
        build(0, static_cast<std::uint32_t>(order_.size()), 0);
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end, int depth)
{
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{begin, end});
    if (end - begin <= leaf_size_)
        return id;

    // split on the widest axis of this node's points
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (auto i = begin; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] - lo[axis] <= 0.0)
        return id; // all points coincide

    const auto mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });

    const double split = points_[order_[mid]][axis];
    const auto left = build(begin, mid, depth + 1);
    const auto right = build(mid, end, depth + 1);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

std::vector<Neighbor> KdTree::knn(const Vec3& query, std::size_t k, std::size_t exclude) const
{
    std::vector<Neighbor> out;
    if (k == 0 || nodes_.empty())
        return out;

    auto worse = [](const Neighbor& a, const Neighbor& b) {
        return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
    };
    // max-heap on (distance, index): top is the current k-th best
    std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(worse)> heap(worse);

    auto bound = [&] {
        return heap.size() < k ? std::numeric_limits<double>::infinity() : heap.top().distance;
    };

    auto visit = [&](auto&& self, std::int32_t node_id) -> void {
        const Node& node = nodes_[node_id];
        if (node.axis < 0) {
            for (auto i = node.begin; i < node.end; ++i) {
                const std::size_t idx = order_[i];
                if (idx == exclude)
                    continue;
                const Neighbor cand{idx, (points_[idx] - query).norm()};
                if (heap.size() < k) {
                    heap.push(cand);
                } else if (worse(cand, heap.top())) {
                    heap.pop();
                    heap.push(cand);
                }
            }
            return;
        }
        const double diff = query[node.axis] - node.split;
        const auto near = diff < 0 ? node.left : node.right;
        const auto far = diff < 0 ? node.right : node.left;
        self(self, near);
        if (std::abs(diff) <= bound())
            self(self, far);
    };
    visit(visit, 0);

    out.reserve(heap.size());
    while (!heap.empty()) {
        out.push_back(heap.top());
        heap.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::size_t KdTree::radius_count(const Vec3& query, double radius) const
{
    if (nodes_.empty())
        return 0;
    const double r2 = radius * radius;
    std::size_t count = 0;
    auto visit = [&](auto&& self, std::int32_t node_id) -> void {
        const Node& node = nodes_[node_id];
        if (node.axis < 0) {
            for (auto i = node.begin; i < node.end; ++i)
                if ((points_[order_[i]] - query).squaredNorm() <= r2)
                    ++count;
            return;
        }
        const double diff = query[node.axis] - node.split;
        if (diff <= radius)
            self(self, node.left);
        if (diff >= -radius)
            self(self, node.right);
    };
    visit(visit, 0);
    return count;
}

std::size_t SpatialHashGrid::CellHash::operator()(const CellKey& k) const noexcept
{
    // large odd primes; standard spatial-hash mixing
    auto h = static_cast<std::uint64_t>(k.x) * 73856093ULL;
    h ^= static_cast<std::uint64_t>(k.y) * 19349663ULL;
    h ^= static_cast<std::uint64_t>(k.z) * 83492791ULL;
    return static_cast<std::size_t>(h);
}

SpatialHashGrid::SpatialHashGrid(std::span<const Vec3> points, double cell_size)
    : points_(points), cell_size_(cell_size)
{
    if (!(cell_size > 0.0))
        throw InvalidArgument("spatial hash: cell size must be positive");
    cells_.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        cells_[key_of(points[i])].push_back(static_cast<std::uint32_t>(i));
}

SpatialHashGrid::CellKey SpatialHashGrid::key_of(const Vec3& p) const
{
    return {static_cast<std::int64_t>(std::floor(p.x() / cell_size_)),
            static_cast<std::int64_t>(std::floor(p.y() / cell_size_)),
            static_cast<std::int64_t>(std::floor(p.z() / cell_size_))};
}

template <typename Visit>
void SpatialHashGrid::for_each_candidate(const Vec3& p, Visit&& visit) const
{
    const CellKey c = key_of(p);
    for (std::int64_t dx = -1; dx <= 1; ++dx)
        for (std::int64_t dy = -1; dy <= 1; ++dy)
            for (std::int64_t dz = -1; dz <= 1; ++dz) {
                auto it = cells_.find({c.x + dx, c.y + dy, c.z + dz});
                if (it == cells_.end())
                    continue;
                for (auto j : it->second)
                    visit(static_cast<std::size_t>(j));
            }
}

std::vector<std::size_t> SpatialHashGrid::neighbors(std::size_t i, double radius) const
{
    if (radius > cell_size_)
        throw InvalidArgument("spatial hash: query radius exceeds cell size");
    const Vec3& p = points_[i];
    const double r2 = radius * radius;
    std::vector<std::size_t> out;
    for_each_candidate(p, [&](std::size_t j) {
        if ((points_[j] - p).squaredNorm() <= r2)
            out.push_back(j);
    });
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t SpatialHashGrid::neighbor_count(std::size_t i, double radius) const
{
    if (radius > cell_size_)
        throw InvalidArgument("spatial hash: query radius exceeds cell size");
    const Vec3& p = points_[i];
    const double r2 = radius * radius;
    std::size_t count = 0;
    for_each_candidate(p, [&](std::size_t j) {
        if ((points_[j] - p).squaredNorm() <= r2)
            ++count;
    });
    return count;
}

} // namespace flowerpose
