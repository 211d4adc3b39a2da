#include "flowerpose/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "flowerpose/error.hpp"
#include "flowerpose/spatial.hpp"

namespace flowerpose {
namespace {

bool channel_ok(double c) { return c >= 0.0 && c <= 1.0; }

} // namespace

bool HsvRange::contains(const HsvColor& c) const
{
    const bool hue_ok = hue_min <= hue_max ? (c.hue >= hue_min && c.hue <= hue_max)
                                           : (c.hue >= hue_min || c.hue <= hue_max);
    return hue_ok && c.saturation >= sat_min && c.saturation <= sat_max && c.value >= val_min &&
           c.value <= val_max;
}

void HsvRange::validate() const
{
    if (!(sat_min <= sat_max) || !(val_min <= val_max))
        throw InvalidArgument("HsvRange: min exceeds max");
    if (!(hue_min >= 0.0 && hue_min <= 360.0 && hue_max >= 0.0 && hue_max <= 360.0))
        throw InvalidArgument("HsvRange: hue bounds must lie in [0, 360]");
}

Aabb::Aabb(const Vec3& lo, const Vec3& hi) : min_corner(lo), max_corner(hi)
{
    if ((lo.array() > hi.array()).any())
        throw InvalidArgument("Aabb: min corner exceeds max corner");
}

bool Aabb::contains(const Vec3& p) const
{
    return (p.array() >= min_corner.array()).all() && (p.array() <= max_corner.array()).all();
}

PointCloud::PointCloud(std::vector<Vec3> positions, std::vector<Rgb> colors)
    : positions_(std::move(positions)), colors_(std::move(colors))
{
    if (positions_.size() != colors_.size())
        throw InvalidArgument("PointCloud: " + std::to_string(positions_.size()) + " positions but " +
                              std::to_string(colors_.size()) + " colors");
    for (std::size_t i = 0; i < positions_.size(); ++i) {
        if (!positions_[i].allFinite())
            throw InvalidArgument("PointCloud: non-finite position at index " + std::to_string(i));
        const Rgb& c = colors_[i];
        if (!channel_ok(c.r) || !channel_ok(c.g) || !channel_ok(c.b))
            throw InvalidArgument("PointCloud: color channel outside [0,1] at index " + std::to_string(i));
    }
}

PointCloud PointCloud::subset(std::span<const std::size_t> indices) const
{
    std::vector<Vec3> p;
    std::vector<Rgb> c;
    p.reserve(indices.size());
    c.reserve(indices.size());
    for (auto i : indices) {
        p.push_back(positions_.at(i));
        c.push_back(colors_.at(i));
    }
    PointCloud out;
    out.positions_ = std::move(p);
    out.colors_ = std::move(c);
    return out;
}

Aabb PointCloud::bounds() const
{
    if (empty())
        throw InvalidArgument("bounds of an empty cloud");
    Vec3 lo = positions_.front();
    Vec3 hi = lo;
    for (const auto& p : positions_) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return Aabb(lo, hi);
}

PointCloud PointCloud::translated(const Vec3& offset) const
{
    PointCloud out = *this;
    for (auto& p : out.positions_)
        p += offset;
    return out;
}

PointCloud PointCloud::concat(const PointCloud& a, const PointCloud& b)
{
    PointCloud out = a;
    out.positions_.insert(out.positions_.end(), b.positions_.begin(), b.positions_.end());
    out.colors_.insert(out.colors_.end(), b.colors_.begin(), b.colors_.end());
    return out;
}

std::vector<std::size_t> crop_outside_indices(const PointCloud& cloud, std::span<const Aabb> boxes)
{
    std::vector<std::size_t> keep;
    keep.reserve(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const bool inside = std::any_of(boxes.begin(), boxes.end(),
                                        [&](const Aabb& b) { return b.contains(cloud.position(i)); });
        if (!inside)
            keep.push_back(i);
    }
    return keep;
}

PointCloud crop_outside(const PointCloud& cloud, std::span<const Aabb> boxes)
{
    const auto keep = crop_outside_indices(cloud, boxes);
    return cloud.subset(keep);
}

std::vector<std::size_t> statistical_outlier_indices(const PointCloud& cloud, int k, double std_ratio)
{
    if (k < 1)
        throw InvalidArgument("statistical outlier removal: k must be >= 1");
    if (!(std_ratio > 0.0))
        throw InvalidArgument("statistical outlier removal: std_ratio must be positive");
    if (cloud.size() <= static_cast<std::size_t>(k))
        throw InvalidArgument("statistical outlier removal: cloud of " + std::to_string(cloud.size()) +
                              " points is too small for k=" + std::to_string(k));

    const auto& pts = cloud.positions();
    const KdTree tree(pts);
    const auto n = static_cast<std::ptrdiff_t>(pts.size());
    std::vector<double> mean_dist(pts.size());

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto nn = tree.knn(pts[i], static_cast<std::size_t>(k), static_cast<std::size_t>(i));
        double s = 0.0;
        for (const auto& q : nn)
            s += q.distance;
        mean_dist[i] = s / static_cast<double>(nn.size());
    }

    double sum = 0.0;
    for (double d : mean_dist)
        sum += d;
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (double d : mean_dist)
        sq += (d - mean) * (d - mean);
    const double stddev = n > 1 ? std::sqrt(sq / static_cast<double>(n - 1)) : 0.0;
    const double threshold = mean + std_ratio * stddev;

    std::vector<std::size_t> keep;
    keep.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (mean_dist[i] <= threshold)
            keep.push_back(i);
    return keep;
}

PointCloud statistical_outlier_removal(const PointCloud& cloud, int k, double std_ratio)
{
    const auto keep = statistical_outlier_indices(cloud, k, std_ratio);
    return cloud.subset(keep);
}

std::vector<std::size_t> radius_outlier_indices(const PointCloud& cloud, double radius, int min_neighbors)
{
    if (!(radius > 0.0))
        throw InvalidArgument("radius outlier removal: radius must be positive");
    if (min_neighbors < 1)
        throw InvalidArgument("radius outlier removal: min_neighbors must be >= 1");

    const auto& pts = cloud.positions();
    const KdTree tree(pts);
    const auto n = static_cast<std::ptrdiff_t>(pts.size());
    std::vector<unsigned char> ok(pts.size(), 0);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        // radius_count includes the point itself
        const auto others = tree.radius_count(pts[i], radius) - 1;
        ok[i] = others >= static_cast<std::size_t>(min_neighbors);
    }

    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (ok[i])
            keep.push_back(i);
    return keep;
}

PointCloud radius_outlier_removal(const PointCloud& cloud, double radius, int min_neighbors)
{
    const auto keep = radius_outlier_indices(cloud, radius, min_neighbors);
    return cloud.subset(keep);
}

Vec3 centroid(std::span<const Vec3> points)
{
    if (points.empty())
        throw InvalidArgument("centroid of an empty cloud");
    Vec3 sum = Vec3::Zero();
    for (const auto& p : points)
        sum += p;
    return sum / static_cast<double>(points.size());
}

Vec3 centroid(const PointCloud& cloud)
{
    return centroid(std::span<const Vec3>(cloud.positions()));
}

HsvColor rgb_to_hsv(const Rgb& c)
{
    if (!channel_ok(c.r) || !channel_ok(c.g) || !channel_ok(c.b))
        throw InvalidArgument("rgb_to_hsv: channel outside [0,1]");

    const double mx = std::max({c.r, c.g, c.b});
    const double mn = std::min({c.r, c.g, c.b});
    const double delta = mx - mn;

    HsvColor out;
    out.value = mx;
    out.saturation = mx > 0.0 ? delta / mx : 0.0;
    if (delta <= 0.0)
        return out; // achromatic: hue defined as 0

    double h;
    if (mx == c.r)
        h = std::fmod((c.g - c.b) / delta, 6.0);
    else if (mx == c.g)
        h = (c.b - c.r) / delta + 2.0;
    else
        h = (c.r - c.g) / delta + 4.0;
    h *= 60.0;
    if (h < 0.0)
        h += 360.0;
    if (h >= 360.0)
        h -= 360.0;
    out.hue = h;
    return out;
}

Rgb hsv_to_rgb(const HsvColor& hsv)
{
    const double c = hsv.value * hsv.saturation;
    const double hp = std::fmod(hsv.hue, 360.0) / 60.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(std::floor(hp))) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
    }
    const double m = hsv.value - c;
    auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
    return {clamp01(r + m), clamp01(g + m), clamp01(b + m)};
}

} // namespace flowerpose
