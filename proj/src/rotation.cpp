#include "flowerpose/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace flowerpose {
namespace {

Mat3 rot_x(double a)
{
    const double c = std::cos(a), s = std::sin(a);
    Mat3 m;
    m << 1, 0, 0, 0, c, -s, 0, s, c;
    return m;
}

Mat3 rot_y(double a)
{
    const double c = std::cos(a), s = std::sin(a);
    Mat3 m;
    m << c, 0, s, 0, 1, 0, -s, 0, c;
    return m;
}

Mat3 rot_z(double a)
{
    const double c = std::cos(a), s = std::sin(a);
    Mat3 m;
    m << c, -s, 0, s, c, 0, 0, 0, 1;
    return m;
}

// d/da of the elementary rotations
Mat3 drot_x(double a)
{
    const double c = std::cos(a), s = std::sin(a);
    Mat3 m;
    m << 0, 0, 0, 0, -s, -c, 0, c, -s;
    return m;
}

Mat3 drot_y(double a)
{
    const double c = std::cos(a), s = std::sin(a);
    Mat3 m;
    m << -s, 0, c, 0, 0, 0, -c, 0, -s;
    return m;
}

Mat3 drot_z(double a)
{
    const double c = std::cos(a), s = std::sin(a);
    Mat3 m;
    m << -s, -c, 0, c, -s, 0, 0, 0, 0;
    return m;
}

} // namespace

Mat3 rotation_matrix(const EulerAngles& e)
{
    return rot_z(e.phi) * rot_y(e.theta) * rot_x(e.psi);
}

std::array<Mat3, 3> rotation_derivatives(const EulerAngles& e)
{
    const Mat3 z = rot_z(e.phi), y = rot_y(e.theta), x = rot_x(e.psi);
    return {drot_z(e.phi) * y * x, z * drot_y(e.theta) * x, z * y * drot_x(e.psi)};
}

EulerAngles euler_from_matrix(const Mat3& r)
{
    EulerAngles e;
    const double s = std::clamp(-r(2, 0), -1.0, 1.0);
    e.theta = std::asin(s);
    if (std::abs(s) < 1.0 - 1e-12) {
        e.phi = std::atan2(r(1, 0), r(0, 0));
        e.psi = std::atan2(r(2, 1), r(2, 2));
    } else {
        // gimbal lock: only phi -/+ psi is determined
        e.psi = 0.0;
        e.phi = std::atan2(-r(0, 1), r(1, 1));
    }
    return e;
}

double wrap_angle(double a)
{
    return std::remainder(a, 2 * std::numbers::pi);
}

} // namespace flowerpose
