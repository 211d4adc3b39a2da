#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowerpose/config.hpp"
#include "flowerpose/evaluation.hpp"
#include "flowerpose/extraction.hpp"
#include "flowerpose/pose.hpp"
#include "flowerpose/segmentation.hpp"

namespace flowerpose {

// Error raised by a pipeline stage; what() starts with "[stage] ".
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& message)
        : Error("[" + stage + "] " + message), stage_(std::move(stage))
    {
    }
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

using ViewBoxes = std::array<std::vector<BBox2D>, 6>;

std::unique_ptr<Detector> make_detector(const PipelineConfig& config);

// "view_px", "view_nx", ... for +X, -X, ...
std::string view_stem(ViewDirection direction);

// Sparse pixel -> point map: {"view", "width", "height", "cells": [[x, y, index], ...]}.
nlohmann::json grid_to_json(const ViewProjection& view);
void write_views(const std::array<ViewProjection, 6>& views, const std::filesystem::path& dir);

nlohmann::json view_boxes_to_json(const ViewBoxes& boxes);
ViewBoxes view_boxes_from_json(const nlohmann::json& j);

// Copy of `image` with a 2-pixel red frame around every box.
RgbImage draw_boxes(const RgbImage& image, const std::vector<BBox2D>& boxes);

// Per-flower outcome of segmentation and fitting.
struct MethodOutcome {
    std::optional<PoseEstimate> pose;
    std::string error; // set when this fit failed
};

struct FlowerOutcome {
    std::size_t index = 0;
    Vec3 centroid = Vec3::Zero(); // of the whole candidate cloud
    std::optional<Vec3> pistil_centroid;
    std::size_t petal_points = 0;
    std::string skipped; // non-empty when the flower could not be fitted
    std::array<MethodOutcome, 3> methods;
};

// Record of one segmented (or skipped) flower, the handoff between the
// segment and fit stages.
struct SegmentRecord {
    std::size_t index = 0;
    Vec3 flower_centroid = Vec3::Zero();
    Vec3 petal_centroid = Vec3::Zero();
    std::optional<Vec3> pistil_centroid;
    std::size_t petal_points = 0;
    std::size_t pistil_points = 0;
    std::string skipped;
};

nlohmann::json segment_record_to_json(const SegmentRecord& r);
SegmentRecord segment_record_from_json(const nlohmann::json& j);

// Fits all three models; individual fit failures are recorded, not thrown.
FlowerOutcome fit_segment(const SegmentRecord& record, const PointCloud& petals, const SolverOptions& options);

nlohmann::json outcomes_to_json(const std::vector<FlowerOutcome>& outcomes);
std::vector<FlowerOutcome> outcomes_from_json(const nlohmann::json& j);

nlohmann::json extraction_to_json(const ExtractionResult& result);

// Detections overlapping a labeled flower's points, given per-point label
// indices of the input cloud (-1 = none). Without membership, a detection
// counts as overlapping when its centroid lies within 2 * max_dist of a label.
std::vector<bool> overlap_flags(const std::vector<FlowerOutcome>& outcomes,
                                const std::vector<std::vector<std::size_t>>& candidate_indices,
                                const std::optional<std::vector<int>>& membership,
                                const std::vector<GroundTruthLabel>& labels, double max_dist);

PlantRow evaluate_outcomes(std::string name, const std::vector<FlowerOutcome>& outcomes,
                           const std::vector<GroundTruthLabel>& labels, double max_dist,
                           const std::vector<bool>& overlaps);

// True when the report meets the configured detection-rate and plane-error limits.
bool report_within_limits(const EvaluationReport& report, const PipelineConfig& config);

struct PipelineOptions {
    std::filesystem::path input;
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> ground_truth;
    PipelineConfig config;
    const Detector* detector = nullptr; // overrides the configured detector
    bool write_views = true;
};

struct PipelineResult {
    ExtractionResult extraction;
    std::vector<FlowerOutcome> flowers;
    std::optional<EvaluationReport> report;
    bool within_limits = true;
};

// Whole pipeline on one PLY file. Writes under out_dir:
//   views/view_*.png, views/view_*.grid.json   renderings and pixel maps
//   detections.json, overlays/view_*.png       raw boxes and kept boxes drawn
//   extraction.json, flowers/flower_NNN*.ply   candidates, petals, pistils
//   flowers/flower_NNN_segment.json, poses.json
//   report.json, report.txt                    when ground truth is given
// Stage failures throw StageError.
PipelineResult run_pipeline(const PipelineOptions& options);

// In-memory variant used by tests: no files are written.
PipelineResult process_cloud(const PointCloud& cloud, const PipelineConfig& config, const Detector& detector);

// Individual stages with file handoff, as used by the CLI subcommands.
void stage_project(const std::filesystem::path& input, const std::filesystem::path& out_dir,
                   const PipelineConfig& config);
void stage_detect(const std::filesystem::path& views_dir, const std::filesystem::path& out_dir,
                  const PipelineConfig& config, const Detector& detector);
void stage_extract(const std::filesystem::path& input, const std::optional<std::filesystem::path>& detections,
                   const std::filesystem::path& out_dir, const PipelineConfig& config, const Detector& detector);
void stage_segment(const std::filesystem::path& input, const std::filesystem::path& out_dir,
                   const PipelineConfig& config);
void stage_fit(const std::filesystem::path& input, const std::filesystem::path& out_dir, const PipelineConfig& config);
EvaluationReport stage_evaluate(const std::filesystem::path& poses, const std::filesystem::path& ground_truth,
                                const std::filesystem::path& out_dir, const PipelineConfig& config);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

} // namespace flowerpose
