#include "doctest.h"

#include <cstring>
#include <fstream>
#include <sstream>

#include "flowerpose/error.hpp"
#include "flowerpose/ply.hpp"
#include "support.hpp"

using namespace flowerpose;

namespace {

// Little-endian byte writer, independent of the library's encoder.
template <typename T>
void put(std::string& out, T v)
{
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    out.append(b, sizeof(T));
}

// Kept out of line: GCC 11 at -O3 folds an inlined double->float->double
// round trip on Eigen vector elements.
[[gnu::noinline]] Vec3 as_float(const Vec3& v)
{
    volatile float f[3] = {static_cast<float>(v.x()), static_cast<float>(v.y()), static_cast<float>(v.z())};
    return Vec3(f[0], f[1], f[2]);
}

} // namespace

TEST_SUITE("ply") {

TEST_CASE("single ASCII vertex")
{
    std::istringstream in("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
                          "property float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\n"
                          "end_header\n0 0 0 255 255 255\n");
    const auto c = read_ply(in);
    REQUIRE(c.size() == 1);
    CHECK(c.position(0) == Vec3::Zero());
    CHECK(c.color(0) == Rgb{1, 1, 1});
}

TEST_CASE("binary little endian equals its ASCII encoding")
{
    const float v[3][3] = {{0.1f, 0.2f, 0.3f}, {-1.5f, 2.25f, 0.0f}, {3.0f, -0.125f, 7.5f}};
    const unsigned char col[3][3] = {{255, 0, 10}, {1, 2, 3}, {128, 64, 32}};
    const std::string header_tail = "element vertex 3\nproperty float x\nproperty float y\nproperty float z\n"
                                    "property uchar red\nproperty uchar green\nproperty uchar blue\n"
                                    "element face 0\nproperty list uchar int vertex_indices\nend_header\n";
    std::string bin = "ply\nformat binary_little_endian 1.0\n" + header_tail;
    std::ostringstream ascii;
    ascii << "ply\nformat ascii 1.0\n" << header_tail;
    ascii.precision(9);
    for (int i = 0; i < 3; ++i) {
        for (int k = 0; k < 3; ++k)
            put(bin, v[i][k]);
        for (int k = 0; k < 3; ++k)
            put(bin, col[i][k]);
        ascii << v[i][0] << ' ' << v[i][1] << ' ' << v[i][2] << ' ' << int(col[i][0]) << ' ' << int(col[i][1]) << ' '
              << int(col[i][2]) << '\n';
    }
    std::istringstream bin_in(bin), ascii_in(ascii.str());
    const auto a = read_ply(bin_in), b = read_ply(ascii_in);
    CHECK(a.positions() == b.positions());
    CHECK(a.colors() == b.colors());
    CHECK(a.position(1) == Vec3(-1.5, 2.25, 0.0));
}

TEST_CASE("missing color properties")
{
    std::istringstream in("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
                          "property float z\nend_header\n0 0 0\n");
    CHECK_THROWS_WITH_AS(read_ply(in), doctest::Contains("missing color properties"), PlyError);
}

TEST_CASE("big endian and malformed input are rejected")
{
    std::istringstream big("ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n");
    CHECK_THROWS_AS(read_ply(big), PlyError);
    std::istringstream nomagic("plx\n");
    CHECK_THROWS_AS(read_ply(nomagic), PlyError);
    std::istringstream nan("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
                           "property float z\nproperty uchar r\nproperty uchar g\nproperty uchar b\n"
                           "end_header\nnan 0 0 1 2 3\n");
    CHECK_THROWS_WITH_AS(read_ply(nan), doctest::Contains("line"), PlyError);
}

TEST_CASE("save then load is the identity up to color quantization")
{
    const auto c = testing::random_cloud(200, 11);
    for (auto format : {PlyFormat::ascii, PlyFormat::binary_little_endian}) {
        for (auto precision : {PlyPrecision::quantized, PlyPrecision::exact}) {
            std::stringstream buf;
            write_ply(buf, c, {format, precision});
            const auto back = read_ply(buf);
            REQUIRE(back.size() == c.size());
            for (std::size_t i = 0; i < c.size(); ++i) {
                const Vec3 expect = precision == PlyPrecision::exact ? c.position(i) : as_float(c.position(i));
                CHECK(back.position(i) == expect);
                CHECK(std::abs(back.color(i).r - c.color(i).r) <= 1.0 / 255);
                CHECK(std::abs(back.color(i).g - c.color(i).g) <= 1.0 / 255);
                CHECK(std::abs(back.color(i).b - c.color(i).b) <= 1.0 / 255);
            }
        }
    }
}

TEST_CASE("files on disk")
{
    testing::TempDir dir;
    const auto c = testing::random_cloud(20, 12);
    save_ply(dir / "a.ply", c);
    CHECK(load_ply(dir / "a.ply").positions() == c.positions());
    CHECK_THROWS_AS(load_ply(dir / "missing.ply"), PlyError);
}

}
