#include "doctest.h"

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "flowerpose/rotation.hpp"
#include "support.hpp"

using namespace flowerpose;

namespace {

constexpr double kPi = std::numbers::pi;

Mat3 rz(double a) { return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix(); }
Mat3 ry(double a) { return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix(); }
Mat3 rx(double a) { return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix(); }

} // namespace

TEST_SUITE("rotation") {

TEST_CASE("intrinsic Z-Y-X composition")
{
    testing::Rng rng(91);
    for (int i = 0; i < 50; ++i) {
        const EulerAngles e{rng.uniform(-kPi, kPi), rng.uniform(-1.5, 1.5), rng.uniform(-kPi, kPi)};
        CHECK((rotation_matrix(e) - rz(e.phi) * ry(e.theta) * rx(e.psi)).norm() < 1e-12);
    }
}

TEST_CASE("matrix to angles and back")
{
    testing::Rng rng(92);
    for (int i = 0; i < 100; ++i) {
        const Mat3 R = testing::random_rotation(rng);
        CHECK((rotation_matrix(euler_from_matrix(R)) - R).norm() < 1e-9);
    }
    const Mat3 lock = rotation_matrix({0.4, kPi / 2, 0.0});
    const auto e = euler_from_matrix(lock);
    CHECK(e.psi == 0.0);
    CHECK((rotation_matrix(e) - lock).norm() < 1e-9);
}

TEST_CASE("derivatives match finite differences")
{
    testing::Rng rng(93);
    for (int i = 0; i < 10; ++i) {
        const EulerAngles e{rng.uniform(-kPi, kPi), rng.uniform(-1.5, 1.5), rng.uniform(-kPi, kPi)};
        const auto d = rotation_derivatives(e);
        const double h = 1e-6;
        for (int k = 0; k < 3; ++k) {
            EulerAngles a = e, b = e;
            (k == 0 ? a.phi : k == 1 ? a.theta : a.psi) += h;
            (k == 0 ? b.phi : k == 1 ? b.theta : b.psi) -= h;
            const Mat3 fd = (rotation_matrix(a) - rotation_matrix(b)) / (2 * h);
            CHECK((fd - d[static_cast<std::size_t>(k)]).norm() < 1e-8);
        }
    }
}

TEST_CASE("wrap_angle")
{
    CHECK(wrap_angle(0.5) == doctest::Approx(0.5));
    CHECK(wrap_angle(3 * kPi / 2) == doctest::Approx(-kPi / 2));
    CHECK(wrap_angle(-7.0) == doctest::Approx(-7.0 + 2 * kPi));
    CHECK(std::abs(wrap_angle(100.0)) <= kPi);
}

}
