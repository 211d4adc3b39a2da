#include "flowerpose/capture.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "flowerpose/error.hpp"

namespace flowerpose {

double sharpness_score(const GrayImage& image, double center_fraction)
{
    if (image.width() < 3 || image.height() < 3)
        throw InvalidArgument("sharpness_score: image must be at least 3x3");
    if (!(center_fraction > 0.0 && center_fraction <= 1.0))
        throw InvalidArgument("sharpness_score: center_fraction must be in (0, 1]");

    const int w = image.width(), h = image.height();
    const int cw = std::max(1, static_cast<int>(std::lround(w * center_fraction)));
    const int ch = std::max(1, static_cast<int>(std::lround(h * center_fraction)));
    const int x0 = std::max(1, (w - cw) / 2), x1 = std::min(w - 1, (w - cw) / 2 + cw);
    const int y0 = std::max(1, (h - ch) / 2), y1 = std::min(h - 1, (h - ch) / 2 + ch);

    double sum = 0.0, sum_sq = 0.0;
    long long n = 0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            const double lap = image.at(x - 1, y) + image.at(x + 1, y) + image.at(x, y - 1) + image.at(x, y + 1) -
                               4.0 * image.at(x, y);
            sum += lap;
            sum_sq += lap * lap;
            ++n;
        }
    if (n == 0)
        return 0.0;
    const double mean = sum / static_cast<double>(n);
    return std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
}

std::vector<FrameScore> score_frames(std::span<const GrayImage> frames, double center_fraction)
{
    std::vector<FrameScore> out(frames.size());
    std::vector<std::exception_ptr> errors(frames.size());
    const auto n = static_cast<long long>(frames.size());
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            out[k] = {k, sharpness_score(frames[k], center_fraction)};
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return out;
}

std::vector<std::size_t> select_frames(std::span<const FrameScore> scores, std::size_t n_bins)
{
    if (n_bins == 0)
        throw InvalidArgument("select_frames: n_bins must be at least 1");
    if (scores.empty())
        throw InvalidArgument("select_frames: no frames");
    if (n_bins > scores.size())
        throw InvalidArgument("select_frames: more bins than frames");

    const std::size_t base = scores.size() / n_bins, extra = scores.size() % n_bins;
    std::vector<std::size_t> out;
    out.reserve(n_bins);
    std::size_t begin = 0;
    for (std::size_t b = 0; b < n_bins; ++b) {
        const std::size_t end = begin + base + (b < extra ? 1 : 0);
        std::size_t best = begin;
        for (std::size_t i = begin + 1; i < end; ++i)
            if (scores[i].sharpness > scores[best].sharpness)
                best = i;
        out.push_back(scores[best].frame);
        begin = end;
    }
    return out;
}

std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir))
        throw InvalidArgument("not a directory: " + dir.string());
    std::vector<std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png")
            out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace flowerpose
