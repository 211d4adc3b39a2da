#include "reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace flowerpose::reference {

std::vector<std::array<int, 2>> pixels_of(const PointCloud& cloud, ViewDirection direction,
                                          const ProjectionParams& params)
{
    const ViewFrame f = view_frame(direction);
    double cmin = std::numeric_limits<double>::infinity(), cmax = -cmin, rmin = cmin, rmax = -cmin;
    for (const auto& p : cloud.positions()) {
        cmin = std::min(cmin, p[f.column_axis]);
        cmax = std::max(cmax, p[f.column_axis]);
        rmin = std::min(rmin, p[f.row_axis]);
        rmax = std::max(rmax, p[f.row_axis]);
    }
    auto scale = [](double u, int n) {
        return static_cast<int>(std::floor((u + 1.0) / 2.0 * (n - 1) + 0.5));
    };
    std::vector<std::array<int, 2>> out;
    out.reserve(cloud.size());
    for (const auto& p : cloud.positions()) {
        // normalize to [-1, 1], then scale into the grid interior
        const double uc = cloud.size() == 1 ? 0.0 : 2.0 * (p[f.column_axis] - cmin) / (cmax - cmin) - 1.0;
        const double ur = cloud.size() == 1 ? 0.0 : 2.0 * (p[f.row_axis] - rmin) / (rmax - rmin) - 1.0;
        int col = scale(uc, params.width);
        if (f.mirror_columns)
            col = params.width - 1 - col;
        const int row = params.height - 1 - scale(ur, params.height);
        out.push_back({col + params.resolution, row + params.resolution});
    }
    return out;
}

std::array<int, 2> pixel_of(const PointCloud& cloud, std::size_t i, ViewDirection direction,
                            const ProjectionParams& params)
{
    return pixels_of(cloud, direction, params).at(i);
}

View project_view(const PointCloud& cloud, ViewDirection direction, const ProjectionParams& params)
{
    const ViewFrame f = view_frame(direction);
    const int w = params.width + 2 * params.resolution, h = params.height + 2 * params.resolution;
    View out;
    out.grid.assign(static_cast<std::size_t>(w) * h, -1);
    out.image = RgbImage(w, h);

    auto nearer = [&](std::size_t a, std::size_t b) {
        const double da = cloud.position(a)[f.depth_axis], db = cloud.position(b)[f.depth_axis];
        if (da != db)
            return f.viewer_at_positive ? da > db : da < db;
        return a < b;
    };

    const auto pixels = pixels_of(cloud, direction, params);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto [x, y] = pixels[i];
        auto& slot = out.grid[static_cast<std::size_t>(y) * w + x];
        if (slot < 0 || nearer(i, static_cast<std::size_t>(slot)))
            slot = static_cast<std::int32_t>(i);
    }

    const long long r2 = static_cast<long long>(params.resolution) * params.resolution;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            long long best = -1;
            std::size_t owner = 0;
            for (int cy = 0; cy < h; ++cy)
                for (int cx = 0; cx < w; ++cx) {
                    const auto v = out.grid[static_cast<std::size_t>(cy) * w + cx];
                    if (v < 0)
                        continue;
                    const long long d2 = static_cast<long long>(cx - x) * (cx - x) +
                                         static_cast<long long>(cy - y) * (cy - y);
                    if (d2 > r2)
                        continue;
                    const auto idx = static_cast<std::size_t>(v);
                    if (best < 0 || d2 < best || (d2 == best && nearer(idx, owner))) {
                        best = d2;
                        owner = idx;
                    }
                }
            if (best >= 0)
                out.image.at(x, y) = quantize_color(cloud.color(owner));
        }
    return out;
}

std::vector<int> dbscan(const std::vector<Vec3>& points, double eps, int min_points)
{
    const std::size_t n = points.size();
    auto close = [&](std::size_t a, std::size_t b) { return (points[a] - points[b]).norm() <= eps; };

    std::vector<bool> core(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        int count = 0;
        for (std::size_t j = 0; j < n; ++j)
            count += close(i, j);
        core[i] = count >= min_points;
    }

    // union-find over core-core adjacency, root = smallest index
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x)
            x = parent[x];
        return x;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (core[i] && core[j] && close(i, j)) {
                const auto a = find(i), b = find(j);
                if (a != b)
                    parent[std::max(a, b)] = std::min(a, b);
            }

    std::vector<int> number(n, -1);
    int next = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (core[i] && find(i) == i)
            number[i] = next++;

    std::vector<int> labels(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        if (core[i]) {
            labels[i] = number[find(i)];
            continue;
        }
        for (std::size_t j = 0; j < n; ++j)
            if (core[j] && close(i, j)) {
                const int c = number[find(j)];
                if (labels[i] < 0 || c < labels[i])
                    labels[i] = c;
            }
    }
    return labels;
}

std::vector<std::size_t> statistical_outlier_indices(const std::vector<Vec3>& points, int k, double std_ratio)
{
    const std::size_t n = points.size();
    std::vector<double> mean_dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> d;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i)
                d.push_back((points[i] - points[j]).norm());
        std::sort(d.begin(), d.end());
        mean_dist[i] = std::accumulate(d.begin(), d.begin() + k, 0.0) / k;
    }
    const double mu = std::accumulate(mean_dist.begin(), mean_dist.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double m : mean_dist)
        ss += (m - mu) * (m - mu);
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < n; ++i)
        if (mean_dist[i] <= mu + std_ratio * sd)
            keep.push_back(i);
    return keep;
}

std::vector<std::size_t> radius_outlier_indices(const std::vector<Vec3>& points, double radius, int min_neighbors)
{
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < points.size(); ++i) {
        int count = 0;
        for (std::size_t j = 0; j < points.size(); ++j)
            if (j != i && (points[i] - points[j]).norm() <= radius)
                ++count;
        if (count >= min_neighbors)
            keep.push_back(i);
    }
    return keep;
}

double sharpness(const GrayImage& image, double center_fraction)
{
    const int w = image.width(), h = image.height();
    const int cw = std::max(1, static_cast<int>(std::lround(w * center_fraction)));
    const int ch = std::max(1, static_cast<int>(std::lround(h * center_fraction)));
    const int left = (w - cw) / 2, top = (h - ch) / 2;
    std::vector<double> values;
    for (int y = top; y < top + ch; ++y)
        for (int x = left; x < left + cw; ++x) {
            if (x < 1 || y < 1 || x > w - 2 || y > h - 2)
                continue;
            values.push_back(image.at(x - 1, y) + image.at(x + 1, y) + image.at(x, y - 1) + image.at(x, y + 1) -
                             4.0 * image.at(x, y));
        }
    if (values.empty())
        return 0.0;
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values)
        ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(values.size());
}

std::vector<std::pair<std::size_t, std::string>> greedy_match(const std::vector<Vec3>& detections,
                                                              const std::vector<GroundTruthLabel>& labels,
                                                              double max_dist)
{
    std::vector<bool> dfree(detections.size(), true), lfree(labels.size(), true);
    std::vector<std::pair<std::size_t, std::string>> out;
    while (true) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < detections.size(); ++i)
            for (std::size_t j = 0; j < labels.size(); ++j) {
                if (!dfree[i] || !lfree[j])
                    continue;
                const double d = (detections[i] - labels[j].position).norm();
                if (d < best) {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        if (!(best <= max_dist))
            break;
        dfree[bi] = lfree[bj] = false;
        out.emplace_back(bi, labels[bj].id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace flowerpose::reference
