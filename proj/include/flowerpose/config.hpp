#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowerpose/detection.hpp"
#include "flowerpose/extraction.hpp"
#include "flowerpose/segmentation.hpp"
#include "flowerpose/solvers.hpp"
#include "flowerpose/synth.hpp"

namespace flowerpose {

enum class DetectorKind { builtin, external };

struct SynthConfig {
    int n_flowers = 6;
    Aabb bed{Vec3(0.0, 0.0, 0.0), Vec3(0.6, 0.6, 0.3)};
    double foliage_density = 2.5e5; // points per m^3
    PlantParams plant;
};

// Every tunable constant of the pipeline. Built from a JSON document
// merged over the defaults; see default_config_json() for the layout.
struct PipelineConfig {
    ExtractionParams extraction;
    DetectorKind detector = DetectorKind::builtin;
    ColorThresholdParams color_threshold;
    std::filesystem::path exchange_dir;
    int exchange_timeout_ms = 30000;
    SegmentationParams segmentation;
    SolverOptions fitting;
    double match_max_dist = 0.05;
    std::string membership_path; // optional per-point flower ids for FP accounting
    double min_detection_rate = 0.0;         // percent; report fails below
    double max_mean_plane_error_deg = 180.0; // report fails above
    double capture_center_fraction = 0.5;
    std::size_t capture_bins = 200;
    SynthConfig synth;
    std::uint64_t seed = 42;
    int threads = 0; // 0 = OpenMP default

    nlohmann::json to_json() const;
};

nlohmann::json default_config_json();

// Merges `user` over the defaults. Unknown keys and type mismatches throw
// ConfigError naming the offending path.
nlohmann::json merge_config(const nlohmann::json& user);

PipelineConfig config_from_json(const nlohmann::json& user);

// Applies FLOWERPOSE__<section>__<key>=<value> overrides. The value is
// parsed as JSON, falling back to a plain string.
void apply_overrides(nlohmann::json& config, const std::vector<std::pair<std::string, std::string>>& env);

// FLOWERPOSE__* variables of the current process, sorted by name.
std::vector<std::pair<std::string, std::string>> environment_overrides();

// Reads the file (if given), merges defaults, then environment overrides.
PipelineConfig load_config(const std::optional<std::filesystem::path>& path);

} // namespace flowerpose
