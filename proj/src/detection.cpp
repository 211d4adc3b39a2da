#include "flowerpose/detection.hpp"

#include <algorithm>
#include <numeric>

#include "flowerpose/error.hpp"
#include "flowerpose/exchange.hpp"

namespace flowerpose {
namespace {

struct DisjointSet {
    std::vector<int> parent;

    explicit DisjointSet(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }

    int find(int x)
    {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }

    void unite(int a, int b)
    {
        a = find(a);
        b = find(b);
        if (a != b)
            parent[std::max(a, b)] = std::min(a, b);
    }
};

struct Component {
    BBox2D box;
    long long area = 0;
};

std::vector<Component> connected_components(const std::vector<unsigned char>& mask, int w, int h)
{
    std::vector<int> label(mask.size(), -1);
    std::vector<Component> comps;
    std::vector<int> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto start = static_cast<std::size_t>(y) * w + x;
            if (!mask[start] || label[start] >= 0)
                continue;
            const int id = static_cast<int>(comps.size());
            Component c;
            c.box = {x, x, y, y, 0.0};
            label[start] = id;
            stack.assign(1, static_cast<int>(start));
            while (!stack.empty()) {
                const int p = stack.back();
                stack.pop_back();
                const int px = p % w;
                const int py = p / w;
                ++c.area;
                c.box.x_min = std::min(c.box.x_min, px);
                c.box.x_max = std::max(c.box.x_max, px);
                c.box.y_min = std::min(c.box.y_min, py);
                c.box.y_max = std::max(c.box.y_max, py);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = px + dx;
                        const int ny = py + dy;
                        if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= w || ny >= h)
                            continue;
                        const auto q = static_cast<std::size_t>(ny) * w + nx;
                        if (mask[q] && label[q] < 0) {
                            label[q] = id;
                            stack.push_back(static_cast<int>(q));
                        }
                    }
            }
            comps.push_back(c);
        }
    }
    return comps;
}

} // namespace

std::vector<unsigned char> threshold_mask(const RgbImage& image, const HsvRange& filter)
{
    std::vector<unsigned char> mask(static_cast<std::size_t>(image.width()) * image.height(), 0);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x) {
            const auto& p = image.at(x, y);
            const Rgb c{p[0] / 255.0, p[1] / 255.0, p[2] / 255.0};
            mask[static_cast<std::size_t>(y) * image.width() + x] = filter.contains(rgb_to_hsv(c));
        }
    return mask;
}

int box_gap(const BBox2D& a, const BBox2D& b)
{
    const int gx = std::max({0, b.x_min - a.x_max - 1, a.x_min - b.x_max - 1});
    const int gy = std::max({0, b.y_min - a.y_max - 1, a.y_min - b.y_max - 1});
    return std::max(gx, gy);
}

std::vector<BBox2D> color_threshold_detect(const RgbImage& image, const ColorThresholdParams& params)
{
    params.petal_filter.validate();
    const int w = image.width();
    const int h = image.height();
    const auto mask = threshold_mask(image, params.petal_filter);
    const auto comps = connected_components(mask, w, h);

    // Group components transitively by box gap. Grouping happens before the
    // area filter so the detection count cannot grow with min_area.
    const int n = static_cast<int>(comps.size());
    DisjointSet groups(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (box_gap(comps[i].box, comps[j].box) <= params.merge_gap)
                groups.unite(i, j);

    std::vector<Component> merged(static_cast<std::size_t>(n));
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    for (int i = 0; i < n; ++i) {
        const int r = groups.find(i);
        auto& m = merged[r];
        if (!used[r]) {
            m = comps[i];
            used[r] = true;
            continue;
        }
        m.area += comps[i].area;
        m.box.x_min = std::min(m.box.x_min, comps[i].box.x_min);
        m.box.x_max = std::max(m.box.x_max, comps[i].box.x_max);
        m.box.y_min = std::min(m.box.y_min, comps[i].box.y_min);
        m.box.y_max = std::max(m.box.y_max, comps[i].box.y_max);
    }

    std::vector<BBox2D> out;
    for (int i = 0; i < n; ++i) {
        if (!used[i] || merged[i].area < params.min_area)
            continue;
        BBox2D box = merged[i].box;
        long long passing = 0;
        for (int y = box.y_min; y <= box.y_max; ++y)
            for (int x = box.x_min; x <= box.x_max; ++x)
                passing += mask[static_cast<std::size_t>(y) * w + x];
        box.score = static_cast<double>(passing) / static_cast<double>(box.area());
        out.push_back(box);
    }
    std::sort(out.begin(), out.end(), [](const BBox2D& a, const BBox2D& b) {
        return std::tie(a.y_min, a.x_min, a.y_max, a.x_max) < std::tie(b.y_min, b.x_min, b.y_max, b.x_max);
    });
    return out;
}

std::vector<BBox2D> ColorThresholdDetector::detect(const RgbImage& image) const
{
    return color_threshold_detect(image, params_);
}

ExternalDetector::ExternalDetector(std::filesystem::path exchange_dir, std::chrono::milliseconds timeout)
    : dir_(std::move(exchange_dir)), timeout_(timeout)
{
}

std::vector<BBox2D> ExternalDetector::detect(const RgbImage& image) const
{
    return external_detect(image, dir_, timeout_);
}

} // namespace flowerpose
