#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowerpose/bbox.hpp"
#include "flowerpose/cloud.hpp"
#include "flowerpose/image.hpp"

namespace flowerpose {

enum class Axis { x = 0, y = 1, z = 2 };
enum class Sign { positive, negative };

// One of the six axis-aligned viewing directions. (axis, positive) places
// the viewer at +infinity on that axis looking toward -axis.
struct ViewDirection {
    Axis axis = Axis::z;
    Sign sign = Sign::positive;

    std::string name() const; // "+X", "-X", ...
    static std::optional<ViewDirection> parse(const std::string& name);
    static const std::array<ViewDirection, 6>& all();

    friend bool operator==(const ViewDirection&, const ViewDirection&) = default;
};

// In-plane layout of a view: which world axes run along raster columns
// (rightward) and rows (upward), and whether the column axis is mirrored.
// Every view is right-handed as seen by its viewer.
struct ViewFrame {
    int column_axis;      // world axis index mapped to columns
    int row_axis;         // world axis index mapped to rows (up = decreasing row)
    bool mirror_columns;  // world axis runs right-to-left
    int depth_axis;
    bool viewer_at_positive;
};

ViewFrame view_frame(ViewDirection direction);

struct ProjectionParams {
    int width = 1024;
    int height = 1024;
    int resolution = 10; // splat radius and margin, pixels
};

struct ProjectedPoint {
    Rgb color;
    Vec3 position;
};

// Result of rendering one view. The raster is (width + 2r) x (height + 2r);
// `grid` records the nearest point that landed on each cell (first hit
// only), while `image` additionally carries the radius-r color splat.
class ViewProjection {
public:
    ViewDirection direction;
    ProjectionParams params;
    RgbImage image;
    std::vector<std::int32_t> grid; // row-major, -1 = empty
    std::map<std::size_t, ProjectedPoint> data;

    int raster_width() const { return params.width + 2 * params.resolution; }
    int raster_height() const { return params.height + 2 * params.resolution; }

    std::optional<std::size_t> cell(int x, int y) const;

    // Grid-resident point indices in row-major cell order.
    std::vector<std::size_t> resident_indices() const;
};

// Pixel (column, row) in raster coordinates for every point of `cloud`, using
// the per-axis normalization of the view. Throws on a degenerate extent.
std::vector<std::array<int, 2>> pixel_coordinates(const PointCloud& cloud, ViewDirection direction,
                                                  const ProjectionParams& params);

// Point indices ordered nearest-to-viewer first; ties keep index order.
std::vector<std::size_t> depth_order(const PointCloud& cloud, ViewDirection direction);

ViewProjection project_view(const PointCloud& cloud, ViewDirection direction, const ProjectionParams& params);

// All six views, rendered in parallel. Order matches ViewDirection::all().
std::array<ViewProjection, 6> project_all_views(const PointCloud& cloud, const ProjectionParams& params);

// Paints every occupied grid cell's color onto raster pixels within
// `radius` (Euclidean); nearest occupied cell wins, ties go to the earlier
// entry of `hits`. `hits` lists (x, y) cells in depth order.
void splat_hits(RgbImage& image, std::span<const std::array<int, 2>> hits, std::span<const Rgb8> colors,
                int radius);

std::vector<std::size_t> back_project_indices(const ViewProjection& projection, const BBox2D& box);
PointCloud back_project(const ViewProjection& projection, const BBox2D& box);

Rgb8 quantize_color(const Rgb& c);

} // namespace flowerpose
