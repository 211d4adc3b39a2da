#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "flowerpose/image.hpp"

namespace flowerpose {

struct FrameScore {
    std::size_t frame = 0;
    double sharpness = 0.0;
};

// Variance of the 3x3 Laplacian response over the central crop (each side
// scaled by center_fraction). Only pixels whose full stencil lies inside
// the image are counted. Needs at least 3x3 pixels.
double sharpness_score(const GrayImage& image, double center_fraction = 0.5);

// Scores frames in parallel; result i belongs to frames[i].
std::vector<FrameScore> score_frames(std::span<const GrayImage> frames, double center_fraction = 0.5);

// Splits the scores into n_bins contiguous bins (the first count % n_bins
// bins get one extra frame) and returns each bin's sharpest frame, lowest
// index on ties, in ascending order.
std::vector<std::size_t> select_frames(std::span<const FrameScore> scores, std::size_t n_bins);

// PNG files of a directory in lexicographic order.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir);

} // namespace flowerpose
