#include "support.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Geometry>

#include "flowerpose/exchange.hpp"

namespace fs = std::filesystem;

namespace testing {

TempDir::TempDir()
{
    std::random_device rd;
    const auto base = fs::temp_directory_path();
    do {
        path_ = base / ("flowerpose-test-" + std::to_string(rd()));
    } while (fs::exists(path_));
    fs::create_directories(path_);
}

TempDir::~TempDir()
{
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::vector<Vec3> random_points(std::size_t n, Rng& rng, double extent)
{
    std::vector<Vec3> p;
    p.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        p.emplace_back(rng.uniform(0, extent), rng.uniform(0, extent), rng.uniform(0, extent));
    return p;
}

PointCloud random_cloud(std::size_t n, std::uint64_t seed, double extent)
{
    Rng rng(seed);
    auto p = random_points(n, rng, extent);
    std::vector<flowerpose::Rgb> c;
    c.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        c.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
    return {std::move(p), std::move(c)};
}

Mat3 random_rotation(Rng& rng)
{
    // uniform unit quaternion
    Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    q.normalize();
    return q.toRotationMatrix();
}

Mat3 axis_rotation(const Vec3& axis, double degrees)
{
    return Eigen::AngleAxisd(degrees * std::numbers::pi / 180.0, axis.normalized()).toRotationMatrix();
}

std::vector<Vec3> ellipsoid_points(double a, double b, double c, const Mat3& rotation, std::size_t n, Rng& rng)
{
    std::vector<Vec3> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Vec3 s(rng.normal(), rng.normal(), rng.normal());
        s.normalize();
        out.push_back(rotation * Vec3(a * s.x(), b * s.y(), c * s.z()));
    }
    return out;
}

std::vector<Vec3> paraboloid_points(double a, double b, double extent, const Mat3& rotation, std::size_t n, Rng& rng)
{
    std::vector<Vec3> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.uniform(-extent, extent), y = rng.uniform(-extent, extent);
        out.push_back(rotation * Vec3(x, y, (x / a) * (x / a) + (y / b) * (y / b)));
    }
    return out;
}

flowerpose::FlowerSegment segment_from_sample(const flowerpose::FlowerSample& sample)
{
    using flowerpose::Role;
    flowerpose::FlowerSegment seg;
    for (std::size_t i = 0; i < sample.membership.size(); ++i) {
        if (sample.membership[i] == Role::petal)
            seg.petal_indices.push_back(i);
        else if (sample.membership[i] == Role::pistil)
            seg.pistil_indices.push_back(i);
    }
    seg.petals = sample.cloud.subset(seg.petal_indices);
    seg.pistil = sample.cloud.subset(seg.pistil_indices);
    seg.petal_centroid = flowerpose::centroid(seg.petals);
    if (!seg.pistil.empty())
        seg.pistil_centroid = flowerpose::centroid(seg.pistil);
    seg.flower_centroid = flowerpose::centroid(sample.cloud);
    return seg;
}

std::vector<fs::path> exchange_files(const fs::path& dir)
{
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().filename() != ".lock")
            out.push_back(e.path());
    return out;
}

StubAdapter::StubAdapter(fs::path dir, Responder respond) : dir_(std::move(dir)), respond_(std::move(respond))
{
    fs::create_directories(dir_);
    worker_ = std::thread([this] {
        const std::string suffix = ".req.json";
        while (!stop_) {
            for (const auto& entry : fs::directory_iterator(dir_)) {
                const std::string name = entry.path().filename().string();
                if (name.size() <= suffix.size() || !name.ends_with(suffix))
                    continue;
                const auto request = nlohmann::json::parse(read_text(entry.path()));
                const std::string id = request.at("id").get<std::string>();
                nlohmann::json response = respond_(request);
                response["id"] = id;
                fs::remove(entry.path());
                flowerpose::write_file_atomic(dir_ / (id + ".resp.json"), response.dump());
                ++served_;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(2));
        }
    });
}

StubAdapter::~StubAdapter()
{
    stop_ = true;
    worker_.join();
}

std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace testing
