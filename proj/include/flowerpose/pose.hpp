#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "flowerpose/cloud.hpp"
#include "flowerpose/rotation.hpp"
#include "flowerpose/segmentation.hpp"
#include "flowerpose/solvers.hpp"

namespace flowerpose {

// Optimizer box for the superellipsoid.
inline constexpr double kMaxSemiAxis = 0.1;
inline constexpr double kMinExponent = 0.9;
inline constexpr double kMaxExponent = 1.1;

struct SuperellipsoidParams {
    double a = 0.0, b = 0.0, c = 0.0;
    double eps1 = 1.0, eps2 = 1.0;
};

// Inside-outside function: 1 on the surface, below 1 inside.
double superellipsoid_value(const SuperellipsoidParams& s, const Vec3& local);

struct SuperellipsoidFit {
    SuperellipsoidParams shape;
    EulerAngles angles;
    Mat3 rotation = Mat3::Identity(); // local to world
    double residual_rms = 0.0;
    double initial_rms = 0.0;
    int iterations = 0;
};

struct ParaboloidFit {
    double a = 0.0, b = 0.0;
    EulerAngles angles;
    Mat3 rotation = Mat3::Identity();
    double residual_rms = 0.0; // meters
    double initial_rms = 0.0;
    int iterations = 0;
};

struct PlaneFit {
    Vec3 normal = Vec3::UnitZ();
    Vec3 eigenvalues = Vec3::Zero(); // ascending
};

enum class PoseMethod { superellipsoid, paraboloid, plane };

std::string to_string(PoseMethod m);

struct PoseEstimate {
    PoseMethod method = PoseMethod::plane;
    Vec3 direction = Vec3::UnitZ();
    bool low_confidence = false; // sign fell back to world +Z (no pistil)
    bool axis_tie = false;       // superellipsoid: shortest axis not unique
    std::optional<double> residual_rms;
    std::vector<std::pair<std::string, double>> parameters;
};

nlohmann::json to_json(const PoseEstimate& pose);

// Residual models, exposed so their Jacobians can be checked.
// Superellipsoid parameters: (a, b, c, eps1, eps2, phi, theta, psi), the
// angles composing on the right of `frame`.
LeastSquaresProblem superellipsoid_problem(std::span<const Vec3> points, const Mat3& frame);
// Paraboloid parameters: (a, b, phi, theta, psi).
LeastSquaresProblem paraboloid_problem(std::span<const Vec3> points, const Mat3& frame);

// Points are expected centered at their centroid. Needs at least 8 points.
SuperellipsoidFit fit_superellipsoid(std::span<const Vec3> points, const SolverOptions& options = {});

// Shortest local axis in world coordinates, signed toward the pistil.
// Equal semi-axes prefer c, then b, then a, and set axis_tie.
PoseEstimate superellipsoid_pose(const SuperellipsoidFit& fit, const Vec3& flower_centroid,
                                 const std::optional<Vec3>& pistil_centroid);

// Vertex fixed at the origin. `opening_hint` orients the initial local +Z;
// world +Z is used when absent. Needs at least 5 points.
ParaboloidFit fit_paraboloid(std::span<const Vec3> points, const std::optional<Vec3>& opening_hint,
                             const SolverOptions& options = {});
PoseEstimate paraboloid_pose(const ParaboloidFit& fit);

// Smallest-eigenvalue eigenvector of the covariance. Throws on fewer than
// 3 points or a rank-deficient (collinear) spread.
PlaneFit fit_plane(std::span<const Vec3> points);
PoseEstimate plane_pose(const PlaneFit& fit, const Vec3& flower_centroid,
                        const std::optional<Vec3>& pistil_centroid);

// Orients `axis` so its dot product with (pistil - flower) is positive,
// falling back to world +Z. Returns whether the fallback was used.
bool orient_by_pistil(Vec3& axis, const Vec3& flower_centroid, const std::optional<Vec3>& pistil_centroid);

// Angle between two unit vectors in degrees. Throws when either is not
// unit length within 1e-6.
double angular_error(const Vec3& estimate, const Vec3& truth);

// Principal axes of centered points as columns, ordered by descending
// variance, with a positive determinant.
Mat3 principal_frame(std::span<const Vec3> points, Vec3* variances = nullptr);

// All three estimates for a segmented flower, in the order superellipsoid,
// paraboloid, plane. Petals are centered at their centroid first.
std::array<PoseEstimate, 3> estimate_poses(const FlowerSegment& flower, const SolverOptions& options = {});

} // namespace flowerpose
