#include "doctest.h"

#include <algorithm>

#include "flowerpose/spatial.hpp"
#include "support.hpp"

using namespace flowerpose;

TEST_SUITE("spatial") {

TEST_CASE("kd-tree knn matches brute force")
{
    testing::Rng rng(21);
    const auto pts = testing::random_points(400, rng, 1.0);
    const KdTree tree(pts, 8);
    for (std::size_t q = 0; q < 40; ++q) {
        std::vector<double> d;
        for (std::size_t j = 0; j < pts.size(); ++j)
            if (j != q)
                d.push_back((pts[j] - pts[q]).norm());
        std::sort(d.begin(), d.end());
        const auto nn = tree.knn(pts[q], 7, q);
        REQUIRE(nn.size() == 7);
        for (std::size_t k = 0; k < 7; ++k)
            CHECK(nn[k].distance == doctest::Approx(d[k]).epsilon(1e-12));
    }
}

TEST_CASE("hash grid neighbors match brute force")
{
    testing::Rng rng(22);
    const auto pts = testing::random_points(500, rng, 0.2);
    const SpatialHashGrid grid(pts, 0.03);
    for (std::size_t i = 0; i < pts.size(); i += 7) {
        std::vector<std::size_t> expect;
        for (std::size_t j = 0; j < pts.size(); ++j)
            if ((pts[i] - pts[j]).norm() <= 0.03)
                expect.push_back(j);
        auto got = grid.neighbors(i, 0.03);
        std::sort(got.begin(), got.end());
        CHECK(got == expect);
        CHECK(grid.neighbor_count(i, 0.03) == expect.size());
    }
}

}
