#include "flowerpose/synth.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Geometry>

#include "flowerpose/error.hpp"

namespace flowerpose {
namespace {

constexpr double kPi = std::numbers::pi;

struct Sink {
    std::vector<Vec3> positions;
    std::vector<Rgb> colors;
    std::vector<Role> roles;
    std::vector<int> flower;

    void add(const Vec3& p, const Rgb& c, Role r, int f)
    {
        positions.push_back(p);
        colors.push_back(c);
        roles.push_back(r);
        flower.push_back(f);
    }
};

Rgb random_hsv(Rng& rng, double h0, double h1, double s0, double s1, double v0, double v1)
{
    return hsv_to_rgb({rng.uniform(h0, h1), rng.uniform(s0, s1), rng.uniform(v0, v1)});
}

Vec3 noise(Rng& rng, double sigma)
{
    if (sigma == 0.0)
        return Vec3::Zero();
    const double x = rng.normal(), y = rng.normal(), z = rng.normal();
    return sigma * Vec3(x, y, z);
}

std::size_t count_for(double density, double area)
{
    return static_cast<std::size_t>(std::llround(std::max(0.0, density * area)));
}

void add_flower(Sink& out, const SyntheticFlowerSpec& spec, double noise_sigma, std::uint64_t seed, int id)
{
    Rng rng(seed);
    Vec3 u, v;
    complete_basis(spec.direction, u, v);
    const Vec3& d = spec.direction;
    const double R = spec.petal_radius;

    const std::size_t n_petal = count_for(spec.point_density, kPi * R * R);
    for (std::size_t i = 0; i < n_petal; ++i) {
        const double r = R * std::sqrt(rng.uniform());
        const double t = 2 * kPi * rng.uniform();
        const double h = spec.cup_curvature * r * r / R;
        const Vec3 p = spec.center + r * std::cos(t) * u + r * std::sin(t) * v + h * d;
        const Rgb c = random_hsv(rng, 0.0, 360.0, 0.0, 0.08, 0.88, 1.0);
        out.add(p + noise(rng, noise_sigma), c, Role::petal, id);
    }

    const double pr = spec.pistil_radius;
    const Vec3 pistil_center = spec.center + pr * d;
    const std::size_t n_pistil = count_for(spec.point_density, 4 * kPi * pr * pr);
    for (std::size_t i = 0; i < n_pistil; ++i) {
        Vec3 s(rng.normal(), rng.normal(), rng.normal());
        if (s.norm() == 0.0)
            s = Vec3::UnitZ();
        const Vec3 p = pistil_center + pr * s.normalized();
        const Rgb c = random_hsv(rng, 48.0, 58.0, 0.7, 0.95, 0.75, 0.95);
        out.add(p + noise(rng, noise_sigma), c, Role::pistil, id);
    }
}

// Random unit vector within max_tilt of +Z, uniform in azimuth.
Vec3 tilted_up(Rng& rng, double max_tilt_rad)
{
    const double tilt = max_tilt_rad * std::sqrt(rng.uniform());
    const double az = 2 * kPi * rng.uniform();
    return {std::sin(tilt) * std::cos(az), std::sin(tilt) * std::sin(az), std::cos(tilt)};
}

} // namespace

double Rng::uniform()
{
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0)
        u1 = uniform();
    const double u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    spare_ = mag * std::sin(2 * kPi * u2);
    has_spare_ = true;
    return mag * std::cos(2 * kPi * u2);
}

std::string to_string(Role r)
{
    switch (r) {
    case Role::petal: return "petal";
    case Role::pistil: return "pistil";
    case Role::foliage: return "foliage";
    case Role::ground: return "ground";
    }
    return "unknown";
}

void SyntheticFlowerSpec::validate() const
{
    if (!(petal_radius > 0) || !(pistil_radius > 0))
        throw InvalidArgument("flower spec: radii must be positive");
    if (!(point_density > 0))
        throw InvalidArgument("flower spec: point density must be positive");
    if (std::abs(direction.norm() - 1.0) > 1e-9)
        throw InvalidArgument("flower spec: direction must be a unit vector");
    if (!center.allFinite() || !std::isfinite(cup_curvature))
        throw InvalidArgument("flower spec: non-finite field");
}

void complete_basis(const Vec3& d, Vec3& u, Vec3& v)
{
    // helper axis least aligned with d; first of X, Y, Z on ties
    int k = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(d[i]) < std::abs(d[k]))
            k = i;
    const Vec3 helper = Vec3::Unit(k);
    u = helper.cross(d).normalized();
    v = d.cross(u);
}

FlowerSample make_flower(const SyntheticFlowerSpec& spec, double noise_sigma, std::uint64_t seed)
{
    spec.validate();
    if (!(noise_sigma >= 0))
        throw InvalidArgument("make_flower: noise_sigma must be non-negative");
    Sink sink;
    add_flower(sink, spec, noise_sigma, seed, 0);
    return {PointCloud(std::move(sink.positions), std::move(sink.colors)), std::move(sink.roles)};
}

SyntheticScene make_plant(int n_flowers, const Aabb& bed, double foliage_density, std::uint64_t seed,
                          const PlantParams& params)
{
    if (n_flowers < 0)
        throw InvalidArgument("make_plant: negative flower count");
    if (!(foliage_density >= 0))
        throw InvalidArgument("make_plant: foliage density must be non-negative");
    if (!(params.petal_radius_min > 0) || params.petal_radius_max < params.petal_radius_min)
        throw InvalidArgument("make_plant: bad petal radius range");

    Rng rng(seed);
    const Vec3 lo = bed.min_corner, hi = bed.max_corner;
    const double height = hi.z() - lo.z();
    const double rmax = params.petal_radius_max;
    const double spacing = 4 * rmax;

    // flower layer: upper 30% of the bed
    const double fz0 = lo.z() + 0.7 * height, fz1 = hi.z() - rmax;
    if (n_flowers > 0 && (hi.x() - lo.x() < 2 * rmax || hi.y() - lo.y() < 2 * rmax || fz1 < fz0))
        throw InvalidArgument("make_plant: bed too small for the flowers");

    Sink sink;
    SyntheticScene scene;
    std::vector<Vec3> centers;
    for (int f = 0; f < n_flowers; ++f) {
        bool placed = false;
        Vec3 c;
        for (int attempt = 0; attempt < 2000 && !placed; ++attempt) {
            c = {rng.uniform(lo.x() + rmax, hi.x() - rmax), rng.uniform(lo.y() + rmax, hi.y() - rmax),
                 rng.uniform(fz0, fz1)};
            placed = true;
            for (const auto& o : centers)
                if ((o - c).norm() < spacing) {
                    placed = false;
                    break;
                }
        }
        if (!placed)
            throw InvalidArgument("make_plant: bed too small to place " + std::to_string(n_flowers) +
                                  " flowers at spacing " + std::to_string(spacing) + " m");
        centers.push_back(c);

        SyntheticFlowerSpec spec;
        spec.center = c;
        spec.direction = tilted_up(rng, params.max_tilt_deg * kPi / 180.0);
        spec.petal_radius = rng.uniform(params.petal_radius_min, params.petal_radius_max);
        spec.cup_curvature = rng.uniform(params.curvature_min, params.curvature_max);
        spec.pistil_radius = params.pistil_radius;
        spec.point_density = params.point_density;
        add_flower(sink, spec, params.noise_sigma, rng.next(), f);
        scene.labels.push_back({"flower-" + std::to_string(f), spec.center, spec.direction});
    }

    // foliage: leaf-shaped blobs in the lower 55%
    const double lz0 = lo.z() + 0.03 * height, lz1 = lo.z() + 0.55 * height;
    const double volume = (hi.x() - lo.x()) * (hi.y() - lo.y()) * (lz1 - lz0);
    const auto n_foliage = static_cast<std::size_t>(std::llround(foliage_density * std::max(volume, 0.0)));
    const auto per_leaf = static_cast<std::size_t>(std::max(1.0, params.leaf_points));
    for (std::size_t done = 0; done < n_foliage;) {
        const Vec3 c{rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()), rng.uniform(lz0, lz1)};
        const Vec3 n = tilted_up(rng, kPi / 3);
        Vec3 u, v;
        complete_basis(n, u, v);
        const double la = rng.uniform(0.015, 0.035), lb = rng.uniform(0.008, 0.015);
        const double bend = rng.uniform(-0.3, 0.3);
        const double hue = rng.uniform(95.0, 135.0);
        const std::size_t k = std::min(per_leaf, n_foliage - done);
        for (std::size_t i = 0; i < k; ++i) {
            const double r = std::sqrt(rng.uniform());
            const double t = 2 * kPi * rng.uniform();
            const double x = la * r * std::cos(t), y = lb * r * std::sin(t);
            const Vec3 p = c + x * u + y * v + bend * x * x / la * n;
            const Rgb col = random_hsv(rng, hue - 5.0, hue + 5.0, 0.45, 0.8, 0.25, 0.6);
            sink.add(p + noise(rng, params.noise_sigma), col, Role::foliage, -1);
        }
        done += k;
    }

    // ground sheet
    const auto n_ground = count_for(params.ground_density, (hi.x() - lo.x()) * (hi.y() - lo.y()));
    for (std::size_t i = 0; i < n_ground; ++i) {
        const Vec3 p{rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()), lo.z() + rng.uniform(0.0, 0.004)};
        sink.add(p, random_hsv(rng, 22.0, 35.0, 0.4, 0.7, 0.2, 0.45), Role::ground, -1);
    }

    scene.cloud = PointCloud(std::move(sink.positions), std::move(sink.colors));
    scene.membership = std::move(sink.roles);
    scene.flower_of = std::move(sink.flower);
    return scene;
}

void write_membership_csv(const std::filesystem::path& path, const SyntheticScene& scene)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write " + path.string());
    out << "index,role,flower\n";
    for (std::size_t i = 0; i < scene.membership.size(); ++i)
        out << i << ',' << to_string(scene.membership[i]) << ',' << scene.flower_of[i] << '\n';
}

std::vector<int> read_membership_flowers(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidArgument("cannot open membership file " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != "index,role,flower")
        throw InvalidArgument("membership file " + path.string() + ": unexpected header");
    std::vector<int> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::istringstream ss(line);
        std::string idx, role, flower;
        if (!std::getline(ss, idx, ',') || !std::getline(ss, role, ',') || !std::getline(ss, flower))
            throw InvalidArgument("membership file line " + std::to_string(lineno) + ": expected 3 fields");
        try {
            if (std::stoul(idx) != out.size())
                throw InvalidArgument("membership file line " + std::to_string(lineno) + ": index out of sequence");
            out.push_back(std::stoi(flower));
        } catch (const std::logic_error&) {
            throw InvalidArgument("membership file line " + std::to_string(lineno) + ": bad number");
        }
    }
    return out;
}

} // namespace flowerpose
