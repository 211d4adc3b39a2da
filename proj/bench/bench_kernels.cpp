// Parallel kernels against their serial brute-force references.

#include <benchmark/benchmark.h>

#include <vector>

#include "flowerpose/capture.hpp"
#include "flowerpose/clustering.hpp"
#include "flowerpose/projection.hpp"
#include "flowerpose/synth.hpp"
#include "reference.hpp"

namespace {

using namespace flowerpose;

PointCloud blob_cloud(std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<Vec3> p;
    std::vector<Rgb> c;
    for (std::size_t i = 0; i < n; ++i) {
        // a handful of dense blobs on a sparse background
        const double cx = 0.1 * static_cast<double>(i % 5);
        p.emplace_back(cx + 0.02 * rng.normal(), 0.02 * rng.normal(), 0.02 * rng.normal());
        c.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
    }
    return {std::move(p), std::move(c)};
}

void BM_dbscan(benchmark::State& state)
{
    const auto cloud = blob_cloud(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(dbscan(cloud, 0.01, 20));
}

void BM_dbscan_reference(benchmark::State& state)
{
    const auto cloud = blob_cloud(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(reference::dbscan(cloud.positions(), 0.01, 20));
}

void BM_statistical_outliers(benchmark::State& state)
{
    const auto cloud = blob_cloud(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _ : state)
        benchmark::DoNotOptimize(statistical_outlier_indices(cloud, 20, 2.0));
}

void BM_statistical_outliers_reference(benchmark::State& state)
{
    const auto cloud = blob_cloud(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _ : state)
        benchmark::DoNotOptimize(reference::statistical_outlier_indices(cloud.positions(), 20, 2.0));
}

void BM_radius_outliers(benchmark::State& state)
{
    const auto cloud = blob_cloud(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state)
        benchmark::DoNotOptimize(radius_outlier_indices(cloud, 0.01, 5));
}

void BM_radius_outliers_reference(benchmark::State& state)
{
    const auto cloud = blob_cloud(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state)
        benchmark::DoNotOptimize(reference::radius_outlier_indices(cloud.positions(), 0.01, 5));
}

void BM_project_all_views(benchmark::State& state)
{
    const auto cloud = blob_cloud(static_cast<std::size_t>(state.range(0)), 4);
    const ProjectionParams params{256, 256, 4};
    for (auto _ : state)
        benchmark::DoNotOptimize(project_all_views(cloud, params));
}

void BM_project_views_serial(benchmark::State& state)
{
    const auto cloud = blob_cloud(static_cast<std::size_t>(state.range(0)), 4);
    const ProjectionParams params{256, 256, 4};
    for (auto _ : state)
        for (const auto& d : ViewDirection::all())
            benchmark::DoNotOptimize(project_view(cloud, d, params));
}

std::vector<GrayImage> frames(std::size_t n)
{
    Rng rng(5);
    std::vector<GrayImage> out;
    for (std::size_t k = 0; k < n; ++k) {
        GrayImage img(320, 240);
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
                img.at(x, y) = rng.uniform();
        out.push_back(std::move(img));
    }
    return out;
}

void BM_score_frames(benchmark::State& state)
{
    const auto f = frames(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(score_frames(f, 0.5));
}

void BM_score_frames_reference(benchmark::State& state)
{
    const auto f = frames(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state)
        for (const auto& img : f)
            benchmark::DoNotOptimize(reference::sharpness(img, 0.5));
}

} // namespace

BENCHMARK(BM_dbscan)->Arg(1000)->Arg(4000);
BENCHMARK(BM_dbscan_reference)->Arg(1000)->Arg(4000);
BENCHMARK(BM_statistical_outliers)->Arg(1000)->Arg(4000);
BENCHMARK(BM_statistical_outliers_reference)->Arg(1000)->Arg(4000);
BENCHMARK(BM_radius_outliers)->Arg(1000)->Arg(4000);
BENCHMARK(BM_radius_outliers_reference)->Arg(1000)->Arg(4000);
BENCHMARK(BM_project_all_views)->Arg(20000);
BENCHMARK(BM_project_views_serial)->Arg(20000);
BENCHMARK(BM_score_frames)->Arg(16);
BENCHMARK(BM_score_frames_reference)->Arg(16);

BENCHMARK_MAIN();
