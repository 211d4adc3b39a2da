#include "flowerpose/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <regex>

#include "flowerpose/exchange.hpp"
#include "flowerpose/log.hpp"
#include "flowerpose/ply.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace flowerpose {
namespace {

constexpr std::array<PoseMethod, 3> kMethods{PoseMethod::superellipsoid, PoseMethod::paraboloid, PoseMethod::plane};

json vec_json(const Vec3& v)
{
    return {v.x(), v.y(), v.z()};
}

Vec3 vec_from(const json& j)
{
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

json optional_vec(const std::optional<Vec3>& v)
{
    return v ? vec_json(*v) : json(nullptr);
}

std::optional<Vec3> optional_vec_from(const json& j)
{
    if (j.is_null())
        return std::nullopt;
    return vec_from(j);
}

std::string flower_stem(std::size_t index)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "flower_%03zu", index);
    return buf;
}

// Runs `fn`, converting library errors into StageError tagged `stage`.
template <typename Fn>
auto staged(const char* stage, Fn&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

SegmentRecord record_of(std::size_t index, const PointCloud& flower, const FlowerSegment* seg, std::string skipped)
{
    SegmentRecord r;
    r.index = index;
    r.flower_centroid = centroid(flower);
    if (seg) {
        r.petal_centroid = seg->petal_centroid;
        r.pistil_centroid = seg->pistil_centroid;
        r.petal_points = seg->petals.size();
        r.pistil_points = seg->pistil.size();
    }
    r.skipped = std::move(skipped);
    return r;
}

struct SegmentedFlower {
    SegmentRecord record;
    std::optional<FlowerSegment> segment;
};

SegmentedFlower segment_one(std::size_t index, const PointCloud& flower, const SegmentationParams& params)
{
    try {
        FlowerSegment seg = segment_flower(flower, params);
        SegmentRecord rec = record_of(index, flower, &seg, "");
        return {std::move(rec), std::move(seg)};
    } catch (const UnfittableFlower& e) {
        return {record_of(index, flower, nullptr, e.what()), std::nullopt};
    }
}

// Segments and fits candidates in parallel; output order follows `flowers`.
std::vector<SegmentedFlower> segment_all(const std::vector<FlowerCandidate>& flowers, const SegmentationParams& params)
{
    std::vector<SegmentedFlower> out(flowers.size());
    std::vector<std::exception_ptr> errors(flowers.size());
    const auto n = static_cast<long long>(flowers.size());
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            out[k] = segment_one(k, flowers[k].cloud, params);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return out;
}

std::vector<FlowerOutcome> fit_all(const std::vector<SegmentRecord>& records, const std::vector<const PointCloud*>& petals,
                                   const SolverOptions& options)
{
    std::vector<FlowerOutcome> out(records.size());
    std::vector<std::exception_ptr> errors(records.size());
    const auto n = static_cast<long long>(records.size());
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            static const PointCloud empty;
            out[k] = fit_segment(records[k], petals[k] ? *petals[k] : empty, options);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return out;
}

void write_flower_files(const fs::path& dir, const FlowerCandidate& candidate, const SegmentedFlower& seg)
{
    const std::string stem = flower_stem(seg.record.index);
    save_ply(dir / (stem + ".ply"), candidate.cloud);
    if (seg.segment) {
        save_ply(dir / (stem + "_petals.ply"), seg.segment->petals);
        save_ply(dir / (stem + "_pistil.ply"), seg.segment->pistil);
    }
    write_json(dir / (stem + "_segment.json"), segment_record_to_json(seg.record));
}

ViewBoxes detect_views(const std::array<ViewProjection, 6>& views, const Detector& detector)
{
    ViewBoxes boxes;
    for (std::size_t v = 0; v < views.size(); ++v)
        boxes[v] = detector.detect(views[v].image);
    return boxes;
}

void write_overlays(const std::array<ViewProjection, 6>& views, const ViewBoxes& kept, const fs::path& dir)
{
    fs::create_directories(dir);
    for (std::size_t v = 0; v < views.size(); ++v)
        write_png(dir / (view_stem(views[v].direction) + ".png"), draw_boxes(views[v].image, kept[v]));
}

std::optional<std::vector<int>> load_membership(const PipelineConfig& config)
{
    if (config.membership_path.empty())
        return std::nullopt;
    return read_membership_flowers(config.membership_path);
}

std::vector<std::vector<std::size_t>> candidate_indices(const ExtractionResult& r)
{
    std::vector<std::vector<std::size_t>> out;
    for (const auto& f : r.flowers)
        out.push_back(f.indices);
    return out;
}

} // namespace

std::unique_ptr<Detector> make_detector(const PipelineConfig& config)
{
    if (config.detector == DetectorKind::external) {
        if (config.exchange_dir.empty())
            throw ConfigError("detector.kind is 'external' but detector.exchange_dir is empty");
        return std::make_unique<ExternalDetector>(config.exchange_dir,
                                                  std::chrono::milliseconds(config.exchange_timeout_ms));
    }
    return std::make_unique<ColorThresholdDetector>(config.color_threshold);
}

std::string view_stem(ViewDirection d)
{
    const char axis = "xyz"[static_cast<int>(d.axis)];
    return std::string("view_") + (d.sign == Sign::positive ? "p" : "n") + axis;
}

json grid_to_json(const ViewProjection& view)
{
    json cells = json::array();
    for (int y = 0; y < view.raster_height(); ++y)
        for (int x = 0; x < view.raster_width(); ++x)
            if (const auto idx = view.cell(x, y))
                cells.push_back({x, y, *idx});
    return {{"view", view.direction.name()},
            {"width", view.raster_width()},
            {"height", view.raster_height()},
            {"cells", cells}};
}

void write_views(const std::array<ViewProjection, 6>& views, const fs::path& dir)
{
    fs::create_directories(dir);
    for (const auto& v : views) {
        write_png(dir / (view_stem(v.direction) + ".png"), v.image);
        write_json(dir / (view_stem(v.direction) + ".grid.json"), grid_to_json(v));
    }
}

json view_boxes_to_json(const ViewBoxes& boxes)
{
    json out = json::object();
    for (std::size_t v = 0; v < boxes.size(); ++v)
        out[ViewDirection::all()[v].name()] = boxes_to_json(boxes[v]);
    return out;
}

ViewBoxes view_boxes_from_json(const json& j)
{
    ViewBoxes out;
    for (std::size_t v = 0; v < out.size(); ++v) {
        const auto name = ViewDirection::all()[v].name();
        if (!j.contains(name))
            throw InvalidArgument("detections file lacks view " + name);
        for (const auto& b : j[name])
            out[v].push_back({b.at("x_min").get<int>(), b.at("x_max").get<int>(), b.at("y_min").get<int>(),
                              b.at("y_max").get<int>(), b.at("score").get<double>()});
    }
    return out;
}

RgbImage draw_boxes(const RgbImage& image, const std::vector<BBox2D>& boxes)
{
    RgbImage out = image;
    const Rgb8 red{255, 0, 0};
    auto put = [&](int x, int y) {
        if (x >= 0 && y >= 0 && x < out.width() && y < out.height())
            out.at(x, y) = red;
    };
    for (const auto& b : boxes)
        for (int t = 0; t < 2; ++t) {
            for (int x = b.x_min - t; x <= b.x_max + t; ++x) {
                put(x, b.y_min - t);
                put(x, b.y_max + t);
            }
            for (int y = b.y_min - t; y <= b.y_max + t; ++y) {
                put(b.x_min - t, y);
                put(b.x_max + t, y);
            }
        }
    return out;
}

json segment_record_to_json(const SegmentRecord& r)
{
    return {{"index", r.index},
            {"flower_centroid", vec_json(r.flower_centroid)},
            {"petal_centroid", vec_json(r.petal_centroid)},
            {"pistil_centroid", optional_vec(r.pistil_centroid)},
            {"petal_points", r.petal_points},
            {"pistil_points", r.pistil_points},
            {"skipped", r.skipped.empty() ? json(nullptr) : json(r.skipped)}};
}

SegmentRecord segment_record_from_json(const json& j)
{
    try {
        SegmentRecord r;
        r.index = j.at("index").get<std::size_t>();
        r.flower_centroid = vec_from(j.at("flower_centroid"));
        r.petal_centroid = vec_from(j.at("petal_centroid"));
        r.pistil_centroid = optional_vec_from(j.at("pistil_centroid"));
        r.petal_points = j.at("petal_points").get<std::size_t>();
        r.pistil_points = j.at("pistil_points").get<std::size_t>();
        if (!j.at("skipped").is_null())
            r.skipped = j.at("skipped").get<std::string>();
        return r;
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed segment record: ") + e.what());
    }
}

FlowerOutcome fit_segment(const SegmentRecord& record, const PointCloud& petals, const SolverOptions& options)
{
    FlowerOutcome out;
    out.index = record.index;
    out.centroid = record.flower_centroid;
    out.pistil_centroid = record.pistil_centroid;
    out.petal_points = petals.size();
    if (!record.skipped.empty()) {
        out.skipped = record.skipped;
        return out;
    }

    std::vector<Vec3> centered;
    centered.reserve(petals.size());
    for (const auto& p : petals.positions())
        centered.push_back(p - record.petal_centroid);

    std::optional<Vec3> hint;
    if (record.pistil_centroid)
        hint = *record.pistil_centroid - record.flower_centroid;

    auto attempt = [&](MethodOutcome& slot, auto&& fit) {
        try {
            slot.pose = fit();
        } catch (const Error& e) {
            slot.error = e.what();
            log::warn(flower_stem(record.index) + ": " + e.what());
        }
    };
    attempt(out.methods[0], [&] {
        return superellipsoid_pose(fit_superellipsoid(centered, options), record.flower_centroid,
                                   record.pistil_centroid);
    });
    attempt(out.methods[1], [&] {
        auto pose = paraboloid_pose(fit_paraboloid(centered, hint, options));
        pose.low_confidence = !hint.has_value();
        return pose;
    });
    attempt(out.methods[2], [&] {
        return plane_pose(fit_plane(centered), record.flower_centroid, record.pistil_centroid);
    });
    return out;
}

json outcomes_to_json(const std::vector<FlowerOutcome>& outcomes)
{
    json flowers = json::array();
    for (const auto& o : outcomes) {
        json poses = json::array();
        if (o.skipped.empty())
            for (std::size_t m = 0; m < 3; ++m) {
                if (o.methods[m].pose)
                    poses.push_back(to_json(*o.methods[m].pose));
                else
                    poses.push_back({{"method", to_string(kMethods[m])}, {"error", o.methods[m].error}});
            }
        flowers.push_back({{"index", o.index},
                           {"centroid", vec_json(o.centroid)},
                           {"pistil_centroid", optional_vec(o.pistil_centroid)},
                           {"petal_points", o.petal_points},
                           {"skipped", o.skipped.empty() ? json(nullptr) : json(o.skipped)},
                           {"poses", poses}});
    }
    return {{"flowers", flowers}};
}

std::vector<FlowerOutcome> outcomes_from_json(const json& j)
{
    std::vector<FlowerOutcome> out;
    try {
        for (const auto& f : j.at("flowers")) {
            FlowerOutcome o;
            o.index = f.at("index").get<std::size_t>();
            o.centroid = vec_from(f.at("centroid"));
            o.pistil_centroid = optional_vec_from(f.at("pistil_centroid"));
            o.petal_points = f.at("petal_points").get<std::size_t>();
            if (!f.at("skipped").is_null())
                o.skipped = f.at("skipped").get<std::string>();
            for (const auto& p : f.at("poses")) {
                const auto method = p.at("method").get<std::string>();
                const auto it = std::find_if(kMethods.begin(), kMethods.end(),
                                             [&](PoseMethod m) { return to_string(m) == method; });
                if (it == kMethods.end())
                    throw InvalidArgument("poses file: unknown method '" + method + "'");
                auto& slot = o.methods[static_cast<std::size_t>(it - kMethods.begin())];
                if (p.contains("error")) {
                    slot.error = p["error"].get<std::string>();
                    continue;
                }
                PoseEstimate pose;
                pose.method = *it;
                pose.direction = vec_from(p.at("direction"));
                if (!p.at("residual_rms").is_null())
                    pose.residual_rms = p["residual_rms"].get<double>();
                for (const auto& [k, v] : p.at("parameters").items())
                    pose.parameters.emplace_back(k, v.get<double>());
                for (const auto& flag : p.at("flags")) {
                    pose.low_confidence |= flag == "low_confidence";
                    pose.axis_tie |= flag == "axis_tie";
                }
                slot.pose = std::move(pose);
            }
            out.push_back(std::move(o));
        }
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed poses file: ") + e.what());
    }
    return out;
}

json extraction_to_json(const ExtractionResult& r)
{
    json views = json::array();
    for (std::size_t v = 0; v < r.boxes.size(); ++v)
        views.push_back({{"view", ViewDirection::all()[v].name()}, {"boxes", boxes_to_json(r.boxes[v])}});
    json flowers = json::array();
    for (std::size_t k = 0; k < r.flowers.size(); ++k) {
        const auto& f = r.flowers[k];
        flowers.push_back({{"index", k},
                           {"points", f.indices.size()},
                           {"centroid", vec_json(centroid(f.cloud))},
                           {"min", vec_json(f.cuboid.min_corner)},
                           {"max", vec_json(f.cuboid.max_corner)},
                           {"indices", f.indices}});
    }
    return {{"views", views},
            {"recovered_points", r.recovered.size()},
            {"filtered_points", r.filtered.size()},
            {"flowers", flowers}};
}

std::vector<bool> overlap_flags(const std::vector<FlowerOutcome>& outcomes,
                                const std::vector<std::vector<std::size_t>>& candidate_indices,
                                const std::optional<std::vector<int>>& membership,
                                const std::vector<GroundTruthLabel>& labels, double max_dist)
{
    std::vector<bool> out(outcomes.size(), false);
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
        if (membership && outcomes[k].index < candidate_indices.size()) {
            for (auto i : candidate_indices[outcomes[k].index])
                if (i < membership->size() && (*membership)[i] >= 0) {
                    out[k] = true;
                    break;
                }
        } else {
            for (const auto& l : labels)
                if ((l.position - outcomes[k].centroid).norm() <= 2 * max_dist)
                    out[k] = true;
        }
    }
    return out;
}

PlantRow evaluate_outcomes(std::string name, const std::vector<FlowerOutcome>& outcomes,
                           const std::vector<GroundTruthLabel>& labels, double max_dist,
                           const std::vector<bool>& overlaps)
{
    std::vector<Vec3> centroids;
    std::vector<std::array<std::optional<Vec3>, 3>> dirs;
    for (const auto& o : outcomes) {
        centroids.push_back(o.centroid);
        std::array<std::optional<Vec3>, 3> d;
        for (std::size_t m = 0; m < 3; ++m)
            if (o.methods[m].pose)
                d[m] = o.methods[m].pose->direction;
        dirs.push_back(d);
    }
    return evaluate_plant(std::move(name), centroids, dirs, labels, max_dist, overlaps);
}

bool report_within_limits(const EvaluationReport& report, const PipelineConfig& config)
{
    bool ok = true;
    if (report.total_ground_truth() > 0 &&
        detection_rate(report.total_found(), report.total_ground_truth()) < config.min_detection_rate)
        ok = false;
    const auto agg = report.aggregate();
    if (agg[2] && agg[2]->mean > config.max_mean_plane_error_deg)
        ok = false;
    return ok;
}

PipelineResult process_cloud(const PointCloud& cloud, const PipelineConfig& config, const Detector& detector)
{
    PipelineResult result;
    if (cloud.empty())
        throw StageError("load", "input cloud is empty");
    auto scene = staged("project", [&] { return project_scene(cloud, config.extraction); });
    const auto detected = staged("detect", [&] { return detect_views(scene.views, detector); });
    result.extraction =
        staged("extract", [&] { return extract_with_boxes(cloud, std::move(scene), detected, config.extraction); });
    const auto segs = staged("segment", [&] { return segment_all(result.extraction.flowers, config.segmentation); });

    std::vector<SegmentRecord> records;
    std::vector<const PointCloud*> petals;
    for (const auto& s : segs) {
        records.push_back(s.record);
        petals.push_back(s.segment ? &s.segment->petals : nullptr);
    }
    result.flowers = staged("fit", [&] { return fit_all(records, petals, config.fitting); });
    return result;
}

PipelineResult run_pipeline(const PipelineOptions& opt)
{
    const auto& config = opt.config;
    const PointCloud cloud = staged("load", [&] { return load_ply(opt.input); });
    if (cloud.empty())
        throw StageError("load", "input cloud " + opt.input.string() + " is empty");

    std::unique_ptr<Detector> owned;
    const Detector* detector = opt.detector;
    if (!detector) {
        owned = staged("detect", [&] { return make_detector(config); });
        detector = owned.get();
    }

    std::optional<std::vector<GroundTruthLabel>> labels;
    if (opt.ground_truth)
        labels = staged("evaluate", [&] { return load_labels(*opt.ground_truth); });

    staged("output", [&] {
        fs::create_directories(opt.out_dir);
        return 0;
    });

    PipelineResult result;
    auto scene = staged("project", [&] { return project_scene(cloud, config.extraction); });
    if (opt.write_views)
        staged("project", [&] {
            write_views(scene.views, opt.out_dir / "views");
            return 0;
        });

    const auto detected = staged("detect", [&] { return detect_views(scene.views, *detector); });
    staged("detect", [&] {
        write_json(opt.out_dir / "detections.json", view_boxes_to_json(detected));
        return 0;
    });

    result.extraction =
        staged("extract", [&] { return extract_with_boxes(cloud, std::move(scene), detected, config.extraction); });
    staged("extract", [&] {
        if (opt.write_views)
            write_overlays(result.extraction.views, result.extraction.boxes, opt.out_dir / "overlays");
        write_json(opt.out_dir / "extraction.json", extraction_to_json(result.extraction));
        return 0;
    });

    const auto segs = staged("segment", [&] { return segment_all(result.extraction.flowers, config.segmentation); });
    staged("segment", [&] {
        const fs::path dir = opt.out_dir / "flowers";
        fs::create_directories(dir);
        for (std::size_t k = 0; k < segs.size(); ++k)
            write_flower_files(dir, result.extraction.flowers[k], segs[k]);
        return 0;
    });

    std::vector<SegmentRecord> records;
    std::vector<const PointCloud*> petals;
    for (const auto& s : segs) {
        records.push_back(s.record);
        petals.push_back(s.segment ? &s.segment->petals : nullptr);
    }
    result.flowers = staged("fit", [&] { return fit_all(records, petals, config.fitting); });
    staged("fit", [&] {
        write_json(opt.out_dir / "poses.json", outcomes_to_json(result.flowers));
        return 0;
    });

    if (labels) {
        staged("evaluate", [&] {
            const auto membership = load_membership(config);
            const auto overlaps = overlap_flags(result.flowers, candidate_indices(result.extraction), membership,
                                                *labels, config.match_max_dist);
            EvaluationReport report;
            report.plants.push_back(evaluate_outcomes(opt.ground_truth->stem().string(), result.flowers, *labels,
                                                      config.match_max_dist, overlaps));
            write_json(opt.out_dir / "report.json", report_to_json(report));
            std::ofstream(opt.out_dir / "report.txt") << format_report(report);
            result.within_limits = report_within_limits(report, config);
            result.report = std::move(report);
            return 0;
        });
    }
    return result;
}

void stage_project(const fs::path& input, const fs::path& out_dir, const PipelineConfig& config)
{
    const PointCloud cloud = staged("load", [&] { return load_ply(input); });
    if (cloud.empty())
        throw StageError("load", "input cloud " + input.string() + " is empty");
    staged("project", [&] {
        const auto scene = project_scene(cloud, config.extraction);
        write_views(scene.views, out_dir / "views");
        return 0;
    });
}

void stage_detect(const fs::path& views_dir, const fs::path& out_dir, const PipelineConfig& config,
                  const Detector& detector)
{
    staged("detect", [&] {
        const fs::path dir = fs::is_directory(views_dir / "views") ? views_dir / "views" : views_dir;
        std::array<ViewProjection, 6> views;
        ViewBoxes raw, kept;
        for (std::size_t v = 0; v < views.size(); ++v) {
            const auto d = ViewDirection::all()[v];
            views[v].direction = d;
            views[v].image = read_png_rgb(dir / (view_stem(d) + ".png"));
            raw[v] = detector.detect(views[v].image);
            for (const auto& b : raw[v])
                if (b.score >= config.extraction.score_threshold)
                    kept[v].push_back(b);
        }
        fs::create_directories(out_dir);
        write_json(out_dir / "detections.json", view_boxes_to_json(raw));
        write_overlays(views, kept, out_dir / "overlays");
        return 0;
    });
}

void stage_extract(const fs::path& input, const std::optional<fs::path>& detections, const fs::path& out_dir,
                   const PipelineConfig& config, const Detector& detector)
{
    const PointCloud cloud = staged("load", [&] { return load_ply(input); });
    if (cloud.empty())
        throw StageError("load", "input cloud " + input.string() + " is empty");
    auto scene = staged("project", [&] { return project_scene(cloud, config.extraction); });
    const ViewBoxes boxes = staged("detect", [&] {
        return detections ? view_boxes_from_json(read_json(*detections)) : detect_views(scene.views, detector);
    });
    const auto result =
        staged("extract", [&] { return extract_with_boxes(cloud, std::move(scene), boxes, config.extraction); });
    staged("extract", [&] {
        fs::create_directories(out_dir / "flowers");
        write_json(out_dir / "extraction.json", extraction_to_json(result));
        for (std::size_t k = 0; k < result.flowers.size(); ++k)
            save_ply(out_dir / "flowers" / (flower_stem(k) + ".ply"), result.flowers[k].cloud);
        return 0;
    });
}

namespace {

// flower_NNN.ply files of a directory (or the single given file), sorted.
std::vector<std::pair<std::size_t, fs::path>> flower_files(const fs::path& input, const std::regex& pattern)
{
    std::vector<std::pair<std::size_t, fs::path>> out;
    auto consider = [&](const fs::path& p) {
        std::smatch m;
        const std::string name = p.filename().string();
        if (std::regex_match(name, m, pattern))
            out.emplace_back(std::stoul(m[1].str()), p);
    };
    if (fs::is_directory(input)) {
        const fs::path dir = fs::is_directory(input / "flowers") ? input / "flowers" : input;
        for (const auto& e : fs::directory_iterator(dir))
            consider(e.path());
    } else {
        consider(input);
        if (out.empty())
            out.emplace_back(0, input);
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

void stage_segment(const fs::path& input, const fs::path& out_dir, const PipelineConfig& config)
{
    const auto files = staged("segment", [&] { return flower_files(input, std::regex(R"(flower_(\d+)\.ply)")); });
    if (files.empty())
        throw StageError("segment", "no flower_NNN.ply files under " + input.string());
    staged("segment", [&] {
        fs::create_directories(out_dir);
        for (const auto& [index, path] : files) {
            const PointCloud flower = load_ply(path);
            const auto seg = segment_one(index, flower, config.segmentation);
            FlowerCandidate candidate;
            candidate.cloud = flower;
            write_flower_files(out_dir, candidate, seg);
        }
        return 0;
    });
}

void stage_fit(const fs::path& input, const fs::path& out_dir, const PipelineConfig& config)
{
    std::vector<SegmentRecord> records;
    std::vector<PointCloud> clouds;
    staged("fit", [&] {
        if (fs::is_directory(input)) {
            for (const auto& [index, path] : flower_files(input, std::regex(R"(flower_(\d+)_segment\.json)"))) {
                records.push_back(segment_record_from_json(read_json(path)));
                const fs::path petals = path.parent_path() / (flower_stem(index) + "_petals.ply");
                clouds.push_back(records.back().skipped.empty() ? load_ply(petals) : PointCloud{});
            }
            if (records.empty())
                throw InvalidArgument("no flower_NNN_segment.json files under " + input.string());
        } else {
            // a single petal cloud; centroids come from its segment record when present
            PointCloud petals = load_ply(input);
            std::string name = input.filename().string();
            const std::string suffix = "_petals.ply";
            const fs::path record = name.size() > suffix.size() && name.ends_with(suffix)
                                        ? input.parent_path() / (name.substr(0, name.size() - suffix.size()) + "_segment.json")
                                        : fs::path();
            if (!record.empty() && fs::exists(record)) {
                records.push_back(segment_record_from_json(read_json(record)));
            } else {
                if (petals.empty())
                    throw InvalidArgument("petal cloud " + input.string() + " is empty");
                SegmentRecord r;
                r.flower_centroid = r.petal_centroid = centroid(petals);
                r.petal_points = petals.size();
                records.push_back(r);
            }
            clouds.push_back(std::move(petals));
        }
        return 0;
    });

    std::vector<const PointCloud*> ptrs;
    for (const auto& c : clouds)
        ptrs.push_back(&c);
    const auto outcomes = staged("fit", [&] { return fit_all(records, ptrs, config.fitting); });
    staged("fit", [&] {
        fs::create_directories(out_dir);
        write_json(out_dir / "poses.json", outcomes_to_json(outcomes));
        return 0;
    });
}

EvaluationReport stage_evaluate(const fs::path& poses, const fs::path& ground_truth, const fs::path& out_dir,
                                const PipelineConfig& config)
{
    return staged("evaluate", [&] {
        const auto outcomes = outcomes_from_json(read_json(poses));
        const auto labels = load_labels(ground_truth);
        const auto membership = load_membership(config);
        std::vector<std::vector<std::size_t>> indices;
        const fs::path extraction = poses.parent_path() / "extraction.json";
        if (membership) {
            if (!fs::exists(extraction))
                throw InvalidArgument("membership given but " + extraction.string() + " is missing");
            for (const auto& f : read_json(extraction).at("flowers"))
                indices.push_back(f.at("indices").get<std::vector<std::size_t>>());
        }
        const auto overlaps = overlap_flags(outcomes, indices, membership, labels, config.match_max_dist);
        EvaluationReport report;
        report.plants.push_back(evaluate_outcomes(ground_truth.stem().string(), outcomes, labels, config.match_max_dist, overlaps));
        fs::create_directories(out_dir);
        write_json(out_dir / "report.json", report_to_json(report));
        std::ofstream(out_dir / "report.txt") << format_report(report);
        return report;
    });
}

void write_json(const fs::path& path, const json& j)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out)
        throw Error("write failed for " + path.string());
}

json read_json(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidArgument("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InvalidArgument(path.string() + ": " + e.what());
    }
}

} // namespace flowerpose
