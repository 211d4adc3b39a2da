#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "flowerpose/bbox.hpp"
#include "flowerpose/cloud.hpp"
#include "flowerpose/image.hpp"

namespace flowerpose {

// Anything that turns a color raster into 2D flower boxes.
class Detector {
public:
    virtual ~Detector() = default;
    virtual std::vector<BBox2D> detect(const RgbImage& image) const = 0;
};

struct ColorThresholdParams {
    HsvRange petal_filter{0.0, 360.0, 0.0, 0.25, 0.6, 1.0};
    long long min_area = 30; // pixels
    int merge_gap = 5;       // pixels
};

// Binary mask of pixels passing `filter`, row-major.
std::vector<unsigned char> threshold_mask(const RgbImage& image, const HsvRange& filter);

// Threshold, 8-connected components, group components whose boxes lie
// within merge_gap pixels of each other, drop groups smaller than
// min_area pixels. Score is the passing-pixel fraction of each box. Boxes
// are returned sorted by (y_min, x_min).
std::vector<BBox2D> color_threshold_detect(const RgbImage& image, const ColorThresholdParams& params);

class ColorThresholdDetector final : public Detector {
public:
    explicit ColorThresholdDetector(ColorThresholdParams params = {}) : params_(params) {}
    std::vector<BBox2D> detect(const RgbImage& image) const override;

private:
    ColorThresholdParams params_;
};

// Empty pixels between two boxes along the more separated axis; 0 when
// they touch or overlap.
int box_gap(const BBox2D& a, const BBox2D& b);

// Delegates to an out-of-process detector through the file exchange
// protocol (see exchange.hpp).
class ExternalDetector final : public Detector {
public:
    ExternalDetector(std::filesystem::path exchange_dir, std::chrono::milliseconds timeout);
    std::vector<BBox2D> detect(const RgbImage& image) const override;

private:
    std::filesystem::path dir_;
    std::chrono::milliseconds timeout_;
};

} // namespace flowerpose
