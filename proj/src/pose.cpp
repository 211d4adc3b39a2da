#include "flowerpose/pose.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "flowerpose/error.hpp"

namespace flowerpose {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMinSemiAxis = 1e-3; // initializer floor

EulerAngles angles_of(const VectorXd& x, Eigen::Index offset)
{
    return {x[offset], x[offset + 1], x[offset + 2]};
}

// F and its partials with respect to the local point and the five shape
// parameters (a, b, c, eps1, eps2).
struct SuperellipsoidEval {
    double value;
    Vec3 d_point;
    std::array<double, 5> d_shape;
};

SuperellipsoidEval evaluate(const SuperellipsoidParams& s, const Vec3& p)
{
    const double e1 = s.eps1, e2 = s.eps2;
    const double ax = std::abs(p.x() / s.a), ay = std::abs(p.y() / s.b), az = std::abs(p.z() / s.c);
    const double u = std::pow(ax, 2.0 / e2);
    const double v = std::pow(ay, 2.0 / e2);
    const double w = std::pow(az, 2.0 / e1);
    const double sum = u + v;
    const double outer = std::pow(sum, e2 / e1);

    SuperellipsoidEval out{};
    out.value = outer + w;

    // d(outer)/du = (e2/e1) sum^(e2/e1 - 1); zero when sum == 0 since e2/e1 > 0
    const double d_outer = sum > 0 ? (e2 / e1) * outer / sum : 0.0;
    const double du_dx = p.x() != 0 ? (2.0 / e2) * u / p.x() : 0.0;
    const double dv_dy = p.y() != 0 ? (2.0 / e2) * v / p.y() : 0.0;
    const double dw_dz = p.z() != 0 ? (2.0 / e1) * w / p.z() : 0.0;
    out.d_point = {d_outer * du_dx, d_outer * dv_dy, dw_dz};

    out.d_shape[0] = d_outer * (-(2.0 / e2) * u / s.a);
    out.d_shape[1] = d_outer * (-(2.0 / e2) * v / s.b);
    out.d_shape[2] = -(2.0 / e1) * w / s.c;

    const double log_sum = sum > 0 ? std::log(sum) : 0.0;
    const double ul = ax > 0 ? u * std::log(ax) : 0.0;
    const double vl = ay > 0 ? v * std::log(ay) : 0.0;
    const double wl = az > 0 ? w * std::log(az) : 0.0;
    out.d_shape[3] = -(e2 / (e1 * e1)) * log_sum * outer - (2.0 / (e1 * e1)) * wl;
    // d(sum)/d(e2) = -(2/e2^2) (u ln ax + v ln ay)
    const double dsum_de2 = -(2.0 / (e2 * e2)) * (ul + vl);
    out.d_shape[4] = sum > 0 ? outer * (log_sum / e1 + (e2 / e1) * dsum_de2 / sum) : 0.0;
    return out;
}

SuperellipsoidParams shape_of(const VectorXd& x)
{
    return {x[0], x[1], x[2], x[3], x[4]};
}

void require_points(std::span<const Vec3> points, std::size_t n, const char* what)
{
    if (points.size() < n)
        throw InvalidArgument(std::string(what) + ": needs at least " + std::to_string(n) + " points, got " +
                              std::to_string(points.size()));
}

} // namespace

std::string to_string(PoseMethod m)
{
    switch (m) {
    case PoseMethod::superellipsoid: return "superellipsoid";
    case PoseMethod::paraboloid: return "paraboloid";
    case PoseMethod::plane: return "plane";
    }
    return "unknown";
}

double superellipsoid_value(const SuperellipsoidParams& s, const Vec3& local)
{
    return evaluate(s, local).value;
}

nlohmann::json to_json(const PoseEstimate& pose)
{
    nlohmann::json j;
    j["method"] = to_string(pose.method);
    j["direction"] = {pose.direction.x(), pose.direction.y(), pose.direction.z()};
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, v] : pose.parameters)
        params[k] = v;
    j["parameters"] = params;
    j["residual_rms"] = pose.residual_rms ? nlohmann::json(*pose.residual_rms) : nlohmann::json(nullptr);
    nlohmann::json flags = nlohmann::json::array();
    if (pose.low_confidence)
        flags.push_back("low_confidence");
    if (pose.axis_tie)
        flags.push_back("axis_tie");
    j["flags"] = flags;
    return j;
}

Mat3 principal_frame(std::span<const Vec3> points, Vec3* variances)
{
    if (points.empty())
        throw InvalidArgument("principal_frame: no points");
    const Vec3 mean = centroid(points);
    Mat3 cov = Mat3::Zero();
    for (const auto& p : points) {
        const Vec3 d = p - mean;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(points.size());
    const Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    const Mat3& vec = es.eigenvectors();
    Mat3 frame;
    frame.col(0) = vec.col(2);
    frame.col(1) = vec.col(1);
    frame.col(2) = vec.col(0);
    if (frame.determinant() < 0)
        frame.col(2) = -frame.col(2);
    if (variances)
        *variances = {es.eigenvalues()[2], es.eigenvalues()[1], es.eigenvalues()[0]};
    return frame;
}

LeastSquaresProblem superellipsoid_problem(std::span<const Vec3> points, const Mat3& frame)
{
    // points in the initial frame; the fitted rotation is frame * R(angles)
    auto local = std::make_shared<std::vector<Vec3>>();
    local->reserve(points.size());
    for (const auto& p : points)
        local->push_back(frame.transpose() * p);

    LeastSquaresProblem prob;
    prob.residual = [local](const VectorXd& x) {
        const auto shape = shape_of(x);
        const Mat3 Rt = rotation_matrix(angles_of(x, 5)).transpose();
        VectorXd r(static_cast<Eigen::Index>(local->size()));
        for (std::size_t i = 0; i < local->size(); ++i)
            r[static_cast<Eigen::Index>(i)] = evaluate(shape, Rt * (*local)[i]).value - 1.0;
        return r;
    };
    prob.jacobian = [local](const VectorXd& x) {
        const auto shape = shape_of(x);
        const auto e = angles_of(x, 5);
        const Mat3 Rt = rotation_matrix(e).transpose();
        const auto dR = rotation_derivatives(e);
        MatrixXd J(static_cast<Eigen::Index>(local->size()), 8);
        for (std::size_t i = 0; i < local->size(); ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            const Vec3& q = (*local)[i];
            const auto ev = evaluate(shape, Rt * q);
            for (int k = 0; k < 5; ++k)
                J(row, k) = ev.d_shape[static_cast<std::size_t>(k)];
            for (int k = 0; k < 3; ++k)
                J(row, 5 + k) = ev.d_point.dot(dR[static_cast<std::size_t>(k)].transpose() * q);
        }
        return J;
    };
    return prob;
}

LeastSquaresProblem paraboloid_problem(std::span<const Vec3> points, const Mat3& frame)
{
    auto local = std::make_shared<std::vector<Vec3>>();
    local->reserve(points.size());
    for (const auto& p : points)
        local->push_back(frame.transpose() * p);

    LeastSquaresProblem prob;
    prob.residual = [local](const VectorXd& x) {
        const Mat3 Rt = rotation_matrix(angles_of(x, 2)).transpose();
        VectorXd r(static_cast<Eigen::Index>(local->size()));
        for (std::size_t i = 0; i < local->size(); ++i) {
            const Vec3 p = Rt * (*local)[i];
            r[static_cast<Eigen::Index>(i)] = p.z() - (p.x() / x[0]) * (p.x() / x[0]) - (p.y() / x[1]) * (p.y() / x[1]);
        }
        return r;
    };
    prob.jacobian = [local](const VectorXd& x) {
        const auto e = angles_of(x, 2);
        const Mat3 Rt = rotation_matrix(e).transpose();
        const auto dR = rotation_derivatives(e);
        const double a = x[0], b = x[1];
        MatrixXd J(static_cast<Eigen::Index>(local->size()), 5);
        for (std::size_t i = 0; i < local->size(); ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            const Vec3& q = (*local)[i];
            const Vec3 p = Rt * q;
            J(row, 0) = 2.0 * p.x() * p.x() / (a * a * a);
            J(row, 1) = 2.0 * p.y() * p.y() / (b * b * b);
            const Vec3 grad{-2.0 * p.x() / (a * a), -2.0 * p.y() / (b * b), 1.0};
            for (int k = 0; k < 3; ++k)
                J(row, 2 + k) = grad.dot(dR[static_cast<std::size_t>(k)].transpose() * q);
        }
        return J;
    };
    return prob;
}

SuperellipsoidFit fit_superellipsoid(std::span<const Vec3> points, const SolverOptions& options)
{
    require_points(points, 8, "fit_superellipsoid");

    Vec3 variances;
    const Mat3 frame = principal_frame(points, &variances);

    VectorXd x0(8), lo(8), hi(8);
    for (int k = 0; k < 3; ++k)
        x0[k] = std::clamp(std::sqrt(std::max(variances[k], 0.0)) * std::sqrt(3.0), kMinSemiAxis, kMaxSemiAxis);
    x0[3] = x0[4] = 1.0;
    x0.tail(3).setZero();
    lo << 0, 0, 0, kMinExponent, kMinExponent, -kPi, -kPi, -kPi;
    hi << kMaxSemiAxis, kMaxSemiAxis, kMaxSemiAxis, kMaxExponent, kMaxExponent, kPi, kPi, kPi;

    const auto prob = superellipsoid_problem(points, frame);
    const auto res = trf_solve(prob, x0, lo, hi, options);

    SuperellipsoidFit fit;
    fit.shape = shape_of(res.x);
    fit.rotation = frame * rotation_matrix(angles_of(res.x, 5));
    fit.angles = euler_from_matrix(fit.rotation);
    const double n = static_cast<double>(points.size());
    fit.residual_rms = std::sqrt(2.0 * res.cost / n);
    fit.initial_rms = std::sqrt(2.0 * res.initial_cost / n);
    fit.iterations = res.iterations;
    return fit;
}

bool orient_by_pistil(Vec3& axis, const Vec3& flower_centroid, const std::optional<Vec3>& pistil_centroid)
{
    if (pistil_centroid) {
        if (axis.dot(*pistil_centroid - flower_centroid) < 0)
            axis = -axis;
        return false;
    }
    if (axis.z() < 0)
        axis = -axis;
    return true;
}

PoseEstimate superellipsoid_pose(const SuperellipsoidFit& fit, const Vec3& flower_centroid,
                                 const std::optional<Vec3>& pistil_centroid)
{
    const auto& s = fit.shape;
    int k;
    if (s.c <= s.a && s.c <= s.b)
        k = 2;
    else if (s.b <= s.a)
        k = 1;
    else
        k = 0;
    const double axes[3] = {s.a, s.b, s.c};

    PoseEstimate pose;
    pose.method = PoseMethod::superellipsoid;
    for (int i = 0; i < 3; ++i)
        if (i != k && axes[i] == axes[k])
            pose.axis_tie = true;
    pose.direction = fit.rotation.col(k).normalized();
    pose.low_confidence = orient_by_pistil(pose.direction, flower_centroid, pistil_centroid);
    pose.residual_rms = fit.residual_rms;
    pose.parameters = {{"a", s.a},           {"b", s.b},
                       {"c", s.c},           {"eps1", s.eps1},
                       {"eps2", s.eps2},     {"phi", fit.angles.phi},
                       {"theta", fit.angles.theta}, {"psi", fit.angles.psi}};
    return pose;
}

ParaboloidFit fit_paraboloid(std::span<const Vec3> points, const std::optional<Vec3>& opening_hint,
                             const SolverOptions& options)
{
    require_points(points, 5, "fit_paraboloid");

    // Initial local +Z: the principal axis closest to the hint, pointing
    // along it. For shallow cups this is the smallest-variance axis.
    const Mat3 pca = principal_frame(points);
    const Vec3 hint = opening_hint && opening_hint->norm() > 0 ? opening_hint->normalized() : Vec3::UnitZ();
    int k = 2;
    for (int i : {1, 0})
        if (std::abs(pca.col(i).dot(hint)) > std::abs(pca.col(k).dot(hint)) + 1e-12)
            k = i;
    Mat3 frame;
    frame.col(2) = pca.col(k).dot(hint) < 0 ? Vec3(-pca.col(k)) : Vec3(pca.col(k));
    frame.col(0) = pca.col(k == 0 ? 1 : 0);
    frame.col(1) = frame.col(2).cross(frame.col(0));

    VectorXd x0(5);
    x0 << 0.05, 0.05, 0.0, 0.0, 0.0;
    const auto res = lm_solve(paraboloid_problem(points, frame), x0, options);

    ParaboloidFit fit;
    fit.a = res.x[0];
    fit.b = res.x[1];
    fit.rotation = frame * rotation_matrix(angles_of(res.x, 2));
    fit.angles = euler_from_matrix(fit.rotation);
    const double n = static_cast<double>(points.size());
    fit.residual_rms = std::sqrt(2.0 * res.cost / n);
    fit.initial_rms = std::sqrt(2.0 * res.initial_cost / n);
    fit.iterations = res.iterations;
    return fit;
}

PoseEstimate paraboloid_pose(const ParaboloidFit& fit)
{
    PoseEstimate pose;
    pose.method = PoseMethod::paraboloid;
    pose.direction = fit.rotation.col(2).normalized();
    pose.residual_rms = fit.residual_rms;
    pose.parameters = {{"a", fit.a},
                       {"b", fit.b},
                       {"phi", fit.angles.phi},
                       {"theta", fit.angles.theta},
                       {"psi", fit.angles.psi}};
    return pose;
}

PlaneFit fit_plane(std::span<const Vec3> points)
{
    require_points(points, 3, "fit_plane");
    const Vec3 mean = centroid(points);
    Mat3 cov = Mat3::Zero();
    for (const auto& p : points) {
        const Vec3 d = p - mean;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(points.size());
    const Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    const Vec3 ev = es.eigenvalues().cwiseMax(0.0);
    if (!(ev[1] > 1e-12 * ev[2]) || ev[2] <= 0.0)
        throw InvalidArgument("fit_plane: points are collinear or coincident");
    return {es.eigenvectors().col(0).normalized(), ev};
}

PoseEstimate plane_pose(const PlaneFit& fit, const Vec3& flower_centroid, const std::optional<Vec3>& pistil_centroid)
{
    PoseEstimate pose;
    pose.method = PoseMethod::plane;
    pose.direction = fit.normal;
    pose.low_confidence = orient_by_pistil(pose.direction, flower_centroid, pistil_centroid);
    pose.parameters = {{"lambda0", fit.eigenvalues[0]}, {"lambda1", fit.eigenvalues[1]}, {"lambda2", fit.eigenvalues[2]}};
    return pose;
}

double angular_error(const Vec3& estimate, const Vec3& truth)
{
    if (std::abs(estimate.norm() - 1.0) > 1e-6 || std::abs(truth.norm() - 1.0) > 1e-6)
        throw InvalidArgument("angular_error: inputs must be unit vectors");
    const double c = std::clamp(estimate.dot(truth), -1.0, 1.0);
    return std::acos(c) * 180.0 / kPi;
}

std::array<PoseEstimate, 3> estimate_poses(const FlowerSegment& flower, const SolverOptions& options)
{
    const auto& src = flower.petals.positions();
    std::vector<Vec3> centered;
    centered.reserve(src.size());
    for (const auto& p : src)
        centered.push_back(p - flower.petal_centroid);

    std::optional<Vec3> hint;
    if (flower.pistil_centroid)
        hint = *flower.pistil_centroid - flower.flower_centroid;

    auto se = superellipsoid_pose(fit_superellipsoid(centered, options), flower.flower_centroid,
                                  flower.pistil_centroid);
    auto pb = paraboloid_pose(fit_paraboloid(centered, hint, options));
    pb.low_confidence = !hint.has_value();
    auto pl = plane_pose(fit_plane(centered), flower.flower_centroid, flower.pistil_centroid);
    return {std::move(se), std::move(pb), std::move(pl)};
}

} // namespace flowerpose
