#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace flowerpose {

using Vec3 = Eigen::Vector3d;

struct Rgb {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct HsvColor {
    double hue = 0.0;         // degrees, [0, 360)
    double saturation = 0.0;  // [0, 1]
    double value = 0.0;       // [0, 1]
};

// HSV box filter. The hue interval wraps around 360 when hue_min > hue_max.
struct HsvRange {
    double hue_min = 0.0;
    double hue_max = 360.0;
    double sat_min = 0.0;
    double sat_max = 1.0;
    double val_min = 0.0;
    double val_max = 1.0;

    bool contains(const HsvColor& c) const;
    void validate() const;
};

struct Aabb {
    Vec3 min_corner = Vec3::Zero();
    Vec3 max_corner = Vec3::Zero();

    Aabb() = default;
    Aabb(const Vec3& lo, const Vec3& hi);

    bool contains(const Vec3& p) const;
    Vec3 extent() const { return max_corner - min_corner; }
};

// Colored point cloud in meters. Positions and colors are parallel arrays;
// every color channel lies in [0,1] and every coordinate is finite. The
// cloud is immutable once constructed.
class PointCloud {
public:
    PointCloud() = default;
    PointCloud(std::vector<Vec3> positions, std::vector<Rgb> colors);

    std::size_t size() const { return positions_.size(); }
    bool empty() const { return positions_.empty(); }

    const std::vector<Vec3>& positions() const { return positions_; }
    const std::vector<Rgb>& colors() const { return colors_; }
    const Vec3& position(std::size_t i) const { return positions_[i]; }
    const Rgb& color(std::size_t i) const { return colors_[i]; }

    // Points at the given indices, in the given order.
    PointCloud subset(std::span<const std::size_t> indices) const;

    // Tight bounding box; throws on an empty cloud.
    Aabb bounds() const;

    // Same colors, positions moved by `offset`.
    PointCloud translated(const Vec3& offset) const;

    static PointCloud concat(const PointCloud& a, const PointCloud& b);

private:
    std::vector<Vec3> positions_;
    std::vector<Rgb> colors_;
};

// Points not inside any of `boxes`, order preserved.
PointCloud crop_outside(const PointCloud& cloud, std::span<const Aabb> boxes);

// Indices kept by crop_outside.
std::vector<std::size_t> crop_outside_indices(const PointCloud& cloud, std::span<const Aabb> boxes);

// Removes points whose mean distance to their k nearest neighbors exceeds
// mean + std_ratio * stddev of that statistic over the cloud.
PointCloud statistical_outlier_removal(const PointCloud& cloud, int k, double std_ratio);
std::vector<std::size_t> statistical_outlier_indices(const PointCloud& cloud, int k, double std_ratio);

// Keeps points with at least `min_neighbors` other points within `radius`.
PointCloud radius_outlier_removal(const PointCloud& cloud, double radius, int min_neighbors);
std::vector<std::size_t> radius_outlier_indices(const PointCloud& cloud, double radius, int min_neighbors);

Vec3 centroid(const PointCloud& cloud);
Vec3 centroid(std::span<const Vec3> points);

HsvColor rgb_to_hsv(const Rgb& color);
Rgb hsv_to_rgb(const HsvColor& color);

} // namespace flowerpose
