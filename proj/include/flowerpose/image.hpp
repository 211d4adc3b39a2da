#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace flowerpose {

using Rgb8 = std::array<std::uint8_t, 3>;

// Row-major 8-bit RGB raster; (x, y) = (column, row), y grows downward.
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height, Rgb8 fill = {0, 0, 0});

    int width() const { return width_; }
    int height() const { return height_; }

    Rgb8& at(int x, int y) { return pixels_[index(x, y)]; }
    const Rgb8& at(int x, int y) const { return pixels_[index(x, y)]; }

    const std::vector<Rgb8>& pixels() const { return pixels_; }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;

private:
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

    int width_ = 0;
    int height_ = 0;
    std::vector<Rgb8> pixels_;
};

// Row-major grayscale raster with double intensities.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, double fill = 0.0);

    int width() const { return width_; }
    int height() const { return height_; }

    double& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    double at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> pixels_;
};

void write_png(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_png_rgb(const std::filesystem::path& path);
GrayImage read_png_gray(const std::filesystem::path& path);

} // namespace flowerpose
