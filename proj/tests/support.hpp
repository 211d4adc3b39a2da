#pragma once

// Shared fixtures for the unit and acceptance suites.

#include <atomic>
#include <filesystem>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowerpose/cloud.hpp"
#include "flowerpose/rotation.hpp"
#include "flowerpose/segmentation.hpp"
#include "flowerpose/synth.hpp"

namespace testing {

using flowerpose::Mat3;
using flowerpose::PointCloud;
using flowerpose::Rng;
using flowerpose::Vec3;

// Fresh directory removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

PointCloud random_cloud(std::size_t n, std::uint64_t seed, double extent = 1.0);
std::vector<Vec3> random_points(std::size_t n, Rng& rng, double extent);

Mat3 random_rotation(Rng& rng);
Mat3 axis_rotation(const Vec3& axis, double degrees);

// Points on the surface x^2/a^2 + y^2/b^2 + z^2/c^2 = 1, mapped by `rotation`.
std::vector<Vec3> ellipsoid_points(double a, double b, double c, const Mat3& rotation, std::size_t n, Rng& rng);
// Points of z = (x/a)^2 + (y/b)^2 over |x|, |y| <= extent, mapped by `rotation`.
std::vector<Vec3> paraboloid_points(double a, double b, double extent, const Mat3& rotation, std::size_t n, Rng& rng);

// Segment of a synthetic flower built straight from the generator's
// membership tags (no HSV filtering involved).
flowerpose::FlowerSegment segment_from_sample(const flowerpose::FlowerSample& sample);

// Exchange directory entries other than the persistent lock file.
std::vector<std::filesystem::path> exchange_files(const std::filesystem::path& dir);

// Stand-in for an external detector process: answers every request in the
// exchange directory with `respond(request)`.
class StubAdapter {
public:
    using Responder = std::function<nlohmann::json(const nlohmann::json& request)>;
    StubAdapter(std::filesystem::path dir, Responder respond);
    ~StubAdapter();
    int served() const { return served_; }

private:
    std::filesystem::path dir_;
    Responder respond_;
    std::atomic<bool> stop_{false};
    std::atomic<int> served_{0};
    std::thread worker_;
};

std::string read_text(const std::filesystem::path& path);

} // namespace testing
