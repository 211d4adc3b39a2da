#include "flowerpose/projection.hpp"

#include <algorithm>
#include <exception>
#include <cmath>
#include <limits>
#include <numeric>

#include "flowerpose/error.hpp"

namespace flowerpose {

std::string ViewDirection::name() const
{
    static constexpr const char* axes[] = {"X", "Y", "Z"};
    return std::string(sign == Sign::positive ? "+" : "-") + axes[static_cast<int>(axis)];
}

std::optional<ViewDirection> ViewDirection::parse(const std::string& name)
{
    for (const auto& d : all())
        if (d.name() == name)
            return d;
    return std::nullopt;
}

const std::array<ViewDirection, 6>& ViewDirection::all()
{
    static const std::array<ViewDirection, 6> dirs{{
        {Axis::x, Sign::positive},
        {Axis::x, Sign::negative},
        {Axis::y, Sign::positive},
        {Axis::y, Sign::negative},
        {Axis::z, Sign::positive},
        {Axis::z, Sign::negative},
    }};
    return dirs;
}

ViewFrame view_frame(ViewDirection d)
{
    const bool pos = d.sign == Sign::positive;
    switch (d.axis) {
    case Axis::x: return {1, 2, !pos, 0, pos};
    case Axis::y: return {0, 2, pos, 1, pos};
    case Axis::z: return {0, 1, !pos, 2, pos};
    }
    return {};
}

Rgb8 quantize_color(const Rgb& c)
{
    auto q = [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
    return {q(c.r), q(c.g), q(c.b)};
}

std::optional<std::size_t> ViewProjection::cell(int x, int y) const
{
    if (x < 0 || y < 0 || x >= raster_width() || y >= raster_height())
        return std::nullopt;
    const auto v = grid[static_cast<std::size_t>(y) * raster_width() + x];
    if (v < 0)
        return std::nullopt;
    return static_cast<std::size_t>(v);
}

std::vector<std::size_t> ViewProjection::resident_indices() const
{
    std::vector<std::size_t> out;
    for (auto v : grid)
        if (v >= 0)
            out.push_back(static_cast<std::size_t>(v));
    return out;
}

namespace {

void check_params(const ProjectionParams& p)
{
    if (p.width < 1 || p.height < 1)
        throw InvalidArgument("projection: width and height must be >= 1");
    if (p.resolution < 0)
        throw InvalidArgument("projection: resolution must be >= 0");
}

// Fraction in [0,1] along an axis, mapped to a pixel in [0, extent-1].
int to_pixel(double t, int extent)
{
    const int px = static_cast<int>(std::floor(t * (extent - 1) + 0.5));
    return std::clamp(px, 0, extent - 1);
}

} // namespace

std::vector<std::array<int, 2>> pixel_coordinates(const PointCloud& cloud, ViewDirection direction,
                                                  const ProjectionParams& params)
{
    check_params(params);
    if (cloud.empty())
        throw InvalidArgument("projection: empty cloud");

    const ViewFrame f = view_frame(direction);
    const Aabb box = cloud.bounds();
    const double col_lo = box.min_corner[f.column_axis];
    const double col_range = box.max_corner[f.column_axis] - col_lo;
    const double row_lo = box.min_corner[f.row_axis];
    const double row_range = box.max_corner[f.row_axis] - row_lo;

    // A lone point has no extent; it sits at the raster center.
    const bool single = cloud.size() == 1;
    if (!single && (col_range <= 0.0 || row_range <= 0.0))
        throw InvalidArgument("projection " + direction.name() + ": degenerate extent on an in-plane axis");

    std::vector<std::array<int, 2>> out(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.position(i);
        // normalized coordinate u in [-1,1]; t = (u + 1) / 2
        const double tc = single ? 0.5 : (p[f.column_axis] - col_lo) / col_range;
        const double tr = single ? 0.5 : (p[f.row_axis] - row_lo) / row_range;
        int col = to_pixel(tc, params.width);
        if (f.mirror_columns)
            col = params.width - 1 - col;
        const int row = params.height - 1 - to_pixel(tr, params.height);
        out[i] = {col + params.resolution, row + params.resolution};
    }
    return out;
}

std::vector<std::size_t> depth_order(const PointCloud& cloud, ViewDirection direction)
{
    const ViewFrame f = view_frame(direction);
    std::vector<std::size_t> order(cloud.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto& pts = cloud.positions();
    const int a = f.depth_axis;
    if (f.viewer_at_positive)
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t l, std::size_t r) { return pts[l][a] > pts[r][a]; });
    else
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t l, std::size_t r) { return pts[l][a] < pts[r][a]; });
    return order;
}

void splat_hits(RgbImage& image, std::span<const std::array<int, 2>> hits, std::span<const Rgb8> colors,
                int radius)
{
    const int w = image.width();
    const int h = image.height();
    if (radius <= 0 || hits.empty())
        return;

    // bucket hits by row so each output row only scans nearby hits
    std::vector<std::vector<std::uint32_t>> by_row(static_cast<std::size_t>(h));
    for (std::size_t k = 0; k < hits.size(); ++k)
        by_row[hits[k][1]].push_back(static_cast<std::uint32_t>(k));

    const long long r2 = static_cast<long long>(radius) * radius;

#pragma omp parallel
    {
        std::vector<long long> best_d2(static_cast<std::size_t>(w));
        std::vector<std::uint32_t> best_k(static_cast<std::size_t>(w));

#pragma omp for schedule(dynamic, 16)
        for (int y = 0; y < h; ++y) {
            std::fill(best_d2.begin(), best_d2.end(), std::numeric_limits<long long>::max());
            bool any = false;
            const int y0 = std::max(0, y - radius);
            const int y1 = std::min(h - 1, y + radius);
            for (int yy = y0; yy <= y1; ++yy) {
                const long long dy = yy - y;
                const long long rem = r2 - dy * dy;
                const int span = static_cast<int>(std::floor(std::sqrt(static_cast<double>(rem))));
                for (auto k : by_row[yy]) {
                    const int cx = hits[k][0];
                    const int x0 = std::max(0, cx - span);
                    const int x1 = std::min(w - 1, cx + span);
                    for (int x = x0; x <= x1; ++x) {
                        const long long dx = x - cx;
                        const long long d2 = dx * dx + dy * dy;
                        if (d2 > r2)
                            continue;
                        if (d2 < best_d2[x] || (d2 == best_d2[x] && k < best_k[x])) {
                            best_d2[x] = d2;
                            best_k[x] = k;
                            any = true;
                        }
                    }
                }
            }
            if (!any)
                continue;
            for (int x = 0; x < w; ++x)
                if (best_d2[x] != std::numeric_limits<long long>::max())
                    image.at(x, y) = colors[best_k[x]];
        }
    }
}

ViewProjection project_view(const PointCloud& cloud, ViewDirection direction, const ProjectionParams& params)
{
    if (cloud.size() >= static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
        throw InvalidArgument("projection: cloud too large");
    const auto pixels = pixel_coordinates(cloud, direction, params);
    const auto order = depth_order(cloud, direction);

    ViewProjection out;
    out.direction = direction;
    out.params = params;
    const int w = out.raster_width();
    const int h = out.raster_height();
    out.image = RgbImage(w, h);
    out.grid.assign(static_cast<std::size_t>(w) * h, -1);

    std::vector<std::array<int, 2>> hits;
    std::vector<Rgb8> hit_colors;
    for (auto idx : order) {
        const auto [x, y] = pixels[idx];
        auto& slot = out.grid[static_cast<std::size_t>(y) * w + x];
        if (slot >= 0)
            continue; // a nearer point already owns this cell
        slot = static_cast<std::int32_t>(idx);
        out.data.emplace(idx, ProjectedPoint{cloud.color(idx), cloud.position(idx)});
        const Rgb8 c = quantize_color(cloud.color(idx));
        out.image.at(x, y) = c;
        hits.push_back({x, y});
        hit_colors.push_back(c);
    }

    splat_hits(out.image, hits, hit_colors, params.resolution);
    return out;
}

std::array<ViewProjection, 6> project_all_views(const PointCloud& cloud, const ProjectionParams& params)
{
    std::array<ViewProjection, 6> views;
    std::array<std::exception_ptr, 6> errors;
    const auto& dirs = ViewDirection::all();

#pragma omp parallel for schedule(dynamic, 1)
    for (int v = 0; v < 6; ++v) {
        try {
            views[v] = project_view(cloud, dirs[v], params);
        } catch (...) {
            errors[v] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return views;
}

std::vector<std::size_t> back_project_indices(const ViewProjection& projection, const BBox2D& box)
{
    if (box.x_min < 0 || box.y_min < 0 || box.x_max >= projection.raster_width() ||
        box.y_max >= projection.raster_height() || box.x_min > box.x_max || box.y_min > box.y_max)
        throw InvalidArgument("back_project: box out of raster bounds");

    std::vector<std::size_t> out;
    for (int x = box.x_min; x <= box.x_max; ++x)
        for (int y = box.y_min; y <= box.y_max; ++y)
            if (auto idx = projection.cell(x, y))
                out.push_back(*idx);
    return out;
}

PointCloud back_project(const ViewProjection& projection, const BBox2D& box)
{
    std::vector<Vec3> positions;
    std::vector<Rgb> colors;
    for (auto idx : back_project_indices(projection, box)) {
        const auto& rec = projection.data.at(idx);
        positions.push_back(rec.position);
        colors.push_back(rec.color);
    }
    return PointCloud(std::move(positions), std::move(colors));
}

} // namespace flowerpose
