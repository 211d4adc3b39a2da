#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowerpose/cloud.hpp"
#include "flowerpose/pose.hpp"

namespace flowerpose {

struct GroundTruthLabel {
    std::string id;
    Vec3 position = Vec3::Zero();
    Vec3 direction = Vec3::UnitZ();
};

// Ground truth file: JSON list of {"id", "position": [x,y,z], "direction": [dx,dy,dz]}.
std::vector<GroundTruthLabel> labels_from_json(const nlohmann::json& j);
nlohmann::json labels_to_json(std::span<const GroundTruthLabel> labels);
std::vector<GroundTruthLabel> load_labels(const std::filesystem::path& path);

struct MatchResult {
    std::vector<std::pair<std::size_t, std::string>> matched; // (detection, label id), by detection index
    std::vector<std::size_t> extra;                           // unmatched detections, ascending
    std::vector<std::string> missed;                          // unmatched labels, in label order
};

// Greedy matching: pairs are taken by ascending distance (ties by
// detection, then label index) while both ends are free and the distance
// is at most max_dist.
MatchResult match_detections(std::span<const Vec3> detections, std::span<const GroundTruthLabel> labels,
                             double max_dist);

// 100 * found / ground_truth rounded to one decimal.
double detection_rate(std::size_t found, std::size_t ground_truth);

struct ErrorSummary {
    double mean = 0.0;
    double median = 0.0;
    double std_dev = 0.0; // population
};

ErrorSummary summarize(std::span<const double> errors);

// One matched flower: angular error per method, NaN where that fit failed.
struct FlowerError {
    std::size_t detection = 0;
    std::string label;
    std::array<double, 3> degrees{}; // superellipsoid, paraboloid, plane
};

struct PlantRow {
    std::string name;
    std::size_t ground_truth = 0;
    std::size_t found = 0;
    std::size_t extra = 0;
    std::size_t false_positives = 0;
    std::vector<FlowerError> flowers;
};

struct EvaluationReport {
    std::vector<PlantRow> plants;

    std::size_t total_ground_truth() const;
    std::size_t total_found() const;
    // Per-method statistics over every matched flower with a finite error.
    std::array<std::optional<ErrorSummary>, 3> aggregate() const;
};

// Unmatched detections split into false positives and extras. A detection
// is a false positive when `overlaps_labeled` is false for it.
PlantRow evaluate_plant(std::string name, std::span<const Vec3> detection_centroids,
                        std::span<const std::array<std::optional<Vec3>, 3>> directions,
                        std::span<const GroundTruthLabel> labels, double max_dist,
                        const std::vector<bool>& overlaps_labeled);

nlohmann::json report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& j);

// Aligned text table with one row per plant plus mean / median / std rows.
std::string format_report(const EvaluationReport& report);

} // namespace flowerpose
