#pragma once

#include <array>

#include <Eigen/Core>

namespace flowerpose {

using Mat3 = Eigen::Matrix3d;

// Intrinsic Z-Y-X angles: yaw phi about Z, then pitch theta about the new
// Y, then roll psi about the newest X. The matrix maps local to world.
struct EulerAngles {
    double phi = 0.0;
    double theta = 0.0;
    double psi = 0.0;
};

Mat3 rotation_matrix(const EulerAngles& angles);

// Partial derivatives of rotation_matrix with respect to phi, theta, psi.
std::array<Mat3, 3> rotation_derivatives(const EulerAngles& angles);

// Angles of a proper rotation. At gimbal lock (|theta| = pi/2) psi is 0.
EulerAngles euler_from_matrix(const Mat3& rotation);

// Wraps an angle into [-pi, pi].
double wrap_angle(double a);

} // namespace flowerpose
