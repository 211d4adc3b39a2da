#include "flowerpose/image.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "flowerpose/error.hpp"

namespace flowerpose {

RgbImage::RgbImage(int width, int height, Rgb8 fill)
    : width_(width), height_(height)
{
    if (width < 0 || height < 0)
        throw InvalidArgument("RgbImage: negative dimensions");
    pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, double fill)
    : width_(width), height_(height)
{
    if (width < 0 || height < 0)
        throw InvalidArgument("GrayImage: negative dimensions");
    pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

void write_png(const std::filesystem::path& path, const RgbImage& image)
{
    cv::Mat mat(image.height(), image.width(), CV_8UC3);
    for (int y = 0; y < image.height(); ++y) {
        auto* row = mat.ptr<cv::Vec3b>(y);
        for (int x = 0; x < image.width(); ++x) {
            const auto& p = image.at(x, y);
            row[x] = cv::Vec3b(p[2], p[1], p[0]); // OpenCV stores BGR
        }
    }
    if (!cv::imwrite(path.string(), mat))
        throw Error("cannot write PNG '" + path.string() + "'");
}

RgbImage read_png_rgb(const std::filesystem::path& path)
{
    const cv::Mat mat = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (mat.empty())
        throw Error("cannot read image '" + path.string() + "'");
    RgbImage image(mat.cols, mat.rows);
    for (int y = 0; y < mat.rows; ++y) {
        const auto* row = mat.ptr<cv::Vec3b>(y);
        for (int x = 0; x < mat.cols; ++x)
            image.at(x, y) = {row[x][2], row[x][1], row[x][0]};
    }
    return image;
}

GrayImage read_png_gray(const std::filesystem::path& path)
{
    const cv::Mat mat = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    if (mat.empty())
        throw Error("cannot read image '" + path.string() + "'");
    GrayImage image(mat.cols, mat.rows);
    for (int y = 0; y < mat.rows; ++y) {
        const auto* row = mat.ptr<std::uint8_t>(y);
        for (int x = 0; x < mat.cols; ++x)
            image.at(x, y) = row[x];
    }
    return image;
}

} // namespace flowerpose
