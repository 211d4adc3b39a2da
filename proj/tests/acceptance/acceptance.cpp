// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "flowerpose/clustering.hpp"
#include "flowerpose/detection.hpp"
#include "flowerpose/evaluation.hpp"
#include "flowerpose/exchange.hpp"
#include "flowerpose/pipeline.hpp"
#include "flowerpose/ply.hpp"
#include "flowerpose/pose.hpp"
#include "flowerpose/projection.hpp"
#include "flowerpose/synth.hpp"
#include "reference.hpp"
#include "support.hpp"

using namespace flowerpose;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c);
    return buf;
}

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Depth toward the viewer: larger is nearer.
double nearness(const Vec3& p, ViewDirection d)
{
    const auto f = view_frame(d);
    return f.viewer_at_positive ? p[f.depth_axis] : -p[f.depth_axis];
}

Outcome projection_round_trip()
{
    const auto start = Clock::now();
    testing::Rng rng(9001);
    const ProjectionParams params;
    int violations = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = 1 + static_cast<std::size_t>(rng.uniform() * 5000);
        PointCloud cloud = testing::random_cloud(n, 9100 + static_cast<std::uint64_t>(trial), 0.5);
        if (trial % 5 == 0 && n > 1) // duplicated positions exercise depth ties
            cloud = PointCloud::concat(cloud, cloud);
        const auto views = project_all_views(cloud, params);
        for (const auto& view : views) {
            const BBox2D full{0, view.raster_width() - 1, 0, view.raster_height() - 1, 1.0};
            auto back = back_project_indices(view, full);
            auto resident = view.resident_indices();
            std::sort(resident.begin(), resident.end());
            const bool exclusive = std::adjacent_find(resident.begin(), resident.end()) == resident.end();
            std::sort(back.begin(), back.end());
            if (back != resident || !exclusive)
                ++violations;

            // every point's cell holds a point at least as near, earlier on ties
            const auto pixels = reference::pixels_of(cloud, view.direction, params);
            for (std::size_t i = 0; i < cloud.size(); ++i) {
                const auto px = pixels[i];
                const auto owner = view.cell(px[0], px[1]);
                if (!owner) {
                    ++violations;
                    continue;
                }
                const auto opx = pixels[*owner];
                const double di = nearness(cloud.position(i), view.direction);
                const double dj = nearness(cloud.position(*owner), view.direction);
                if (opx != px || dj < di || (dj == di && *owner > i))
                    ++violations;
            }
        }
    }
    const double t = seconds_since(start);
    return {violations == 0 && t < 10.0, fmt("%.0f violations, %.2f s (limit 10 s)", violations, t)};
}

// Same partition into clusters and same noise set, up to renumbering.
bool same_up_to_permutation(const std::vector<int>& a, const std::vector<int>& b)
{
    if (a.size() != b.size())
        return false;
    std::map<int, int> ab, ba;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if ((a[i] < 0) != (b[i] < 0))
            return false;
        if (a[i] < 0)
            continue;
        if (ab.emplace(a[i], b[i]).first->second != b[i])
            return false;
        if (ba.emplace(b[i], a[i]).first->second != a[i])
            return false;
    }
    return true;
}

Outcome dbscan_oracle()
{
    const auto start = Clock::now();
    testing::Rng rng(9002);
    int mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = 1 + static_cast<std::size_t>(rng.uniform() * 300);
        std::vector<Vec3> pts;
        const int blobs = 1 + static_cast<int>(rng.uniform() * 5);
        std::vector<Vec3> centers = testing::random_points(static_cast<std::size_t>(blobs), rng, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            const Vec3& c = centers[i % centers.size()];
            pts.push_back(rng.uniform() < 0.1 ? Vec3(testing::random_points(1, rng, 1.0)[0])
                                              : Vec3(c + 0.08 * Vec3(rng.normal(), rng.normal(), rng.normal())));
        }
        const double eps = rng.uniform(0.02, 0.15);
        const int min_points = 1 + static_cast<int>(rng.uniform() * 8);
        const PointCloud cloud(pts, std::vector<Rgb>(pts.size()));
        const auto got = dbscan(cloud, eps, min_points).labels;
        if (!same_up_to_permutation(got, reference::dbscan(pts, eps, min_points)))
            ++mismatches;
    }
    const double t = seconds_since(start);
    return {mismatches == 0 && t < 30.0, fmt("%.0f/100 mismatched, %.2f s (limit 30 s)", mismatches, t)};
}

Outcome fit_recovery()
{
    testing::Rng rng(9003);
    std::string notes;
    bool ok = true;

    // Sphere: every direction is an axis, so recovery means the radius.
    const auto sphere = testing::ellipsoid_points(0.05, 0.05, 0.05, Mat3::Identity(), 800, rng);
    const auto sf = fit_superellipsoid(sphere);
    const double sphere_err = std::max({std::abs(sf.shape.a - 0.05), std::abs(sf.shape.b - 0.05),
                                        std::abs(sf.shape.c - 0.05)});
    ok &= sphere_err <= 1e-3;
    notes += fmt("sphere radius err %.2g m; ", sphere_err);

    const Mat3 R = testing::axis_rotation(Vec3(1, 2, 0.5).normalized(), 35.0);
    const Vec3 short_axis = R * Vec3::UnitZ();
    const auto ell = testing::ellipsoid_points(0.06, 0.04, 0.015, R, 1000, rng);
    const double ell_err =
        angular_error(superellipsoid_pose(fit_superellipsoid(ell), Vec3::Zero(), Vec3(0.01 * short_axis)).direction,
                      short_axis);
    ok &= ell_err <= 2.0;
    notes += fmt("ellipsoid %.3g deg; ", ell_err);

    auto para = testing::paraboloid_points(0.05, 0.06, 0.03, R, 800, rng);
    const Vec3 pc = centroid(para);
    for (auto& p : para)
        p -= pc;
    const double para_err = angular_error(paraboloid_pose(fit_paraboloid(para, short_axis)).direction, short_axis);
    ok &= para_err <= 2.0;
    notes += fmt("paraboloid %.3g deg; ", para_err);

    std::vector<Vec3> disk;
    for (int i = 0; i < 600; ++i) {
        const double r = 0.025 * std::sqrt(rng.uniform()), t = 2 * M_PI * rng.uniform();
        disk.push_back(R * Vec3(r * std::cos(t), r * std::sin(t), 0.0));
    }
    const double plane_err =
        angular_error(plane_pose(fit_plane(disk), Vec3::Zero(), Vec3(0.01 * short_axis)).direction, short_axis);
    ok &= plane_err <= 0.1;
    notes += fmt("plane %.2g deg; ", plane_err);

    int good = 0;
    for (int trial = 0; trial < 100; ++trial) {
        SyntheticFlowerSpec spec;
        spec.petal_radius = 0.025;
        const Mat3 tilt = testing::random_rotation(rng);
        spec.direction = tilt * Vec3::UnitZ();
        const auto seg = testing::segment_from_sample(make_flower(spec, 0.001, 9300 + static_cast<std::uint64_t>(trial)));
        const auto pose = plane_pose(fit_plane(seg.petals.positions()), seg.flower_centroid, seg.pistil_centroid);
        good += angular_error(pose.direction, spec.direction) <= 5.0;
    }
    ok &= good >= 95;
    notes += fmt("noisy plane within 5 deg: %.0f/100", good);
    return {ok, notes};
}

struct PlantRun {
    PlantRow row;
    double seconds = 0.0;
};

PlantRun run_plant(int index, testing::Rng& rng)
{
    const int n = 5 + static_cast<int>(rng.uniform() * 6);
    const SynthConfig synth;
    const auto scene = make_plant(n, synth.bed, synth.foliage_density, 9400 + static_cast<std::uint64_t>(index));
    const auto start = Clock::now();
    const PipelineConfig config;
    const auto result = process_cloud(scene.cloud, config, ColorThresholdDetector(config.color_threshold));
    std::vector<std::vector<std::size_t>> candidates;
    for (const auto& f : result.extraction.flowers)
        candidates.push_back(f.indices);
    const auto overlaps = overlap_flags(result.flowers, candidates, scene.flower_of, scene.labels, config.match_max_dist);
    PlantRun run;
    run.row = evaluate_outcomes("plant" + std::to_string(index), result.flowers, scene.labels, config.match_max_dist,
                                overlaps);
    run.seconds = seconds_since(start);
    return run;
}

Outcome end_to_end()
{
    const auto start = Clock::now();
    testing::Rng rng(9004);
    EvaluationReport report;
    for (int p = 0; p < 10; ++p)
        report.plants.push_back(run_plant(p, rng).row);
    std::printf("%s", format_report(report).c_str());
    const double rate = detection_rate(report.total_found(), report.total_ground_truth());
    const auto agg = report.aggregate();
    const double plane_mean = agg[2] ? agg[2]->mean : 180.0;

    // documented failure mode: strongly downward-curled flowers flip the paraboloid
    int flipped = 0;
    for (int k = 0; k < 10; ++k) {
        SyntheticFlowerSpec spec;
        spec.petal_radius = 0.03;
        spec.cup_curvature = -1.5;
        const auto seg = testing::segment_from_sample(make_flower(spec, 0.0, 9401 + static_cast<std::uint64_t>(k)));
        flipped += angular_error(estimate_poses(seg)[1].direction, spec.direction) >= 150.0;
    }

    const double t = seconds_since(start);
    const bool ok = rate >= 80.0 && plane_mean <= 8.0 && flipped >= 1 && t < 300.0;
    return {ok, fmt("rate %.1f%% (>= 80), plane mean %.2f deg (<= 8), ", rate, plane_mean) +
                    fmt("paraboloid flipped past 150 deg on %.0f/10 downward cups, %.1f s (limit 300 s)", flipped, t)};
}

Outcome published_arithmetic()
{
    struct Pair {
        std::size_t found, gt;
        double expect;
    };
    const Pair pairs[] = {{49, 61, 80.3}, {6, 7, 85.7}, {10, 10, 100.0}, {9, 11, 81.8},
                          {6, 7, 85.7},   {7, 9, 77.8}, {5, 10, 50.0},   {6, 7, 85.7}};
    int bad = 0;
    for (const auto& p : pairs)
        bad += std::abs(detection_rate(p.found, p.gt) - p.expect) > 1e-9;
    return {bad == 0, fmt("%.0f/8 values reproduced", 8 - bad)};
}

Outcome rotation_equivariance()
{
    SyntheticFlowerSpec spec;
    spec.cup_curvature = 0.2;
    const auto sample = make_flower(spec, 0.0005, 9500);
    const auto base = estimate_poses(testing::segment_from_sample(sample));
    testing::Rng rng(9501);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Mat3 Q = testing::random_rotation(rng);
        const Vec3 shift = testing::random_points(1, rng, 1.0)[0];
        std::vector<Vec3> p;
        for (const auto& v : sample.cloud.positions())
            p.push_back(Q * v + shift);
        const FlowerSample moved{PointCloud(std::move(p), sample.cloud.colors()), sample.membership};
        const auto poses = estimate_poses(testing::segment_from_sample(moved));
        for (int m = 0; m < 3; ++m)
            worst = std::max(worst, angular_error(poses[m].direction, (Q * base[m].direction).normalized()));
    }
    return {worst <= 1.0, fmt("worst deviation %.3g deg over 20 rotations x 3 methods (limit 1)", worst)};
}

Outcome determinism()
{
    testing::TempDir dir;
    const auto scene = make_plant(6, SynthConfig{}.bed, SynthConfig{}.foliage_density, 9600);
    save_ply(dir / "plant.ply", scene.cloud);
    write_json(dir / "truth.json", labels_to_json(scene.labels));
    write_membership_csv(dir / "membership.csv", scene);
    for (const char* run : {"a", "b"}) {
        PipelineOptions opt;
        opt.input = dir / "plant.ply";
        opt.out_dir = dir / run;
        opt.ground_truth = dir / "truth.json";
        opt.config.membership_path = (dir / "membership.csv").string();
        run_pipeline(opt);
    }
    int files = 0, differing = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
        if (e.path().extension() != ".json")
            continue;
        ++files;
        const auto twin = dir / "b" / fs::relative(e.path(), dir / "a");
        differing += !fs::exists(twin) || testing::read_text(e.path()) != testing::read_text(twin);
    }
    return {files > 0 && differing == 0, fmt("%.0f JSON files compared, %.0f differ", files, differing)};
}

Outcome loopback()
{
    testing::TempDir dir;
    const BBox2D expected{3, 10, 4, 12, 0.75};
    testing::StubAdapter stub(dir.path(), [&](const nlohmann::json&) {
        return nlohmann::json{{"boxes", boxes_to_json(std::vector<BBox2D>{expected})}};
    });
    const ExternalDetector detector(dir.path(), std::chrono::milliseconds(10000));
    const auto boxes = detector.detect(RgbImage(40, 30));
    const bool ok = boxes.size() == 1 && boxes[0] == expected && stub.served() == 1 && testing::exchange_files(dir.path()).empty();
    return {ok, fmt("%.0f box(es) returned, exchange dir %s", static_cast<double>(boxes.size())) +
                    (testing::exchange_files(dir.path()).empty() ? "clean" : "not clean")};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"projection round trip", projection_round_trip},
        {"dbscan oracle equivalence", dbscan_oracle},
        {"fit recovery", fit_recovery},
        {"end-to-end synthetic plants", end_to_end},
        {"published-number arithmetic", published_arithmetic},
        {"rotation equivariance", rotation_equivariance},
        {"determinism", determinism},
        {"detector exchange loopback (secondary)", loopback},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
