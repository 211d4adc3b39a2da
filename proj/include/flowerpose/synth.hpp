#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "flowerpose/cloud.hpp"
#include "flowerpose/evaluation.hpp"

namespace flowerpose {

// Portable random source: 64-bit Mersenne Twister (std::mt19937_64, whose
// output sequence is fixed by the standard) with hand-rolled uniform and
// Box-Muller normal draws, so streams match across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform(); // [0, 1), 53-bit
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();  // N(0, 1)
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

enum class Role : std::uint8_t { petal, pistil, foliage, ground };

std::string to_string(Role r);

struct SyntheticFlowerSpec {
    Vec3 center = Vec3::Zero();
    Vec3 direction = Vec3::UnitZ();
    double petal_radius = 0.025;
    double cup_curvature = 0.15; // > 0 cups upward, < 0 curls downward
    double pistil_radius = 0.005;
    double point_density = 1.2e6; // points per m^2 of surface

    void validate() const;
};

struct FlowerSample {
    PointCloud cloud;
    std::vector<Role> membership;
};

// Petals on the cupped disk h(r) = curvature * r^2 / petal_radius along
// the direction, pistil on a sphere centered one pistil radius above the
// disk center. Gaussian noise of noise_sigma on every coordinate.
FlowerSample make_flower(const SyntheticFlowerSpec& spec, double noise_sigma, std::uint64_t seed);

// Orthonormal (u, v) completing `direction` to a right-handed frame.
void complete_basis(const Vec3& direction, Vec3& u, Vec3& v);

struct PlantParams {
    double petal_radius_min = 0.02;
    double petal_radius_max = 0.03;
    double curvature_min = 0.05;
    double curvature_max = 0.3;
    double max_tilt_deg = 45.0;
    double pistil_radius = 0.005;
    double point_density = 1.2e6;
    double noise_sigma = 0.0005;
    double ground_density = 4e4;  // points per m^2
    double leaf_points = 300;     // points per leaf blob
};

struct SyntheticScene {
    PointCloud cloud;
    std::vector<GroundTruthLabel> labels;
    std::vector<Role> membership;
    std::vector<int> flower_of; // label index per point, -1 off-flower
};

// Flowers in the upper part of `bed` with centers at least 4 max petal
// radii apart, leaf blobs in the lower part, a ground sheet on its floor.
// Throws when the flowers cannot be placed.
SyntheticScene make_plant(int n_flowers, const Aabb& bed, double foliage_density, std::uint64_t seed,
                          const PlantParams& params = {});

// CSV with header "index,role,flower".
void write_membership_csv(const std::filesystem::path& path, const SyntheticScene& scene);
std::vector<int> read_membership_flowers(const std::filesystem::path& path);

} // namespace flowerpose
