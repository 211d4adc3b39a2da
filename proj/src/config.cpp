#include "flowerpose/config.hpp"

#include <algorithm>
#include <fstream>

#include "flowerpose/error.hpp"

extern char** environ;

using nlohmann::json;

namespace flowerpose {
namespace {

constexpr const char* kEnvPrefix = "FLOWERPOSE__";

json hsv_json(const HsvRange& r)
{
    return {{"hue_min", r.hue_min}, {"hue_max", r.hue_max}, {"sat_min", r.sat_min},
            {"sat_max", r.sat_max}, {"val_min", r.val_min}, {"val_max", r.val_max}};
}

HsvRange hsv_from(const json& j)
{
    HsvRange r{j.at("hue_min").get<double>(), j.at("hue_max").get<double>(), j.at("sat_min").get<double>(),
               j.at("sat_max").get<double>(), j.at("val_min").get<double>(), j.at("val_max").get<double>()};
    r.validate();
    return r;
}

json vec_json(const Vec3& v)
{
    return {v.x(), v.y(), v.z()};
}

Vec3 vec_from(const json& j, const std::string& where)
{
    if (!j.is_array() || j.size() != 3 || !std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_number(); }))
        throw ConfigError(where + ": expected [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

bool same_kind(const json& a, const json& b)
{
    if (a.is_number() && b.is_number())
        return true;
    return a.type() == b.type();
}

void merge_into(json& base, const json& user, const std::string& path)
{
    if (!user.is_object())
        throw ConfigError((path.empty() ? std::string("config") : path) + ": expected an object");
    for (const auto& [key, value] : user.items()) {
        const std::string where = path.empty() ? key : path + "." + key;
        if (!base.contains(key))
            throw ConfigError("unknown config key '" + where + "'");
        json& slot = base[key];
        if (slot.is_object()) {
            merge_into(slot, value, where);
        } else {
            if (!same_kind(slot, value))
                throw ConfigError("config key '" + where + "' has the wrong type (expected " +
                                  std::string(slot.type_name()) + ")");
            slot = value;
        }
    }
}

template <typename T>
T get(const json& j, const char* key, const std::string& section)
{
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config key '" + section + "." + key + "': " + e.what());
    }
}

} // namespace

json PipelineConfig::to_json() const
{
    json crop = json::array();
    for (const auto& b : extraction.crop_boxes)
        crop.push_back({{"min", vec_json(b.min_corner)}, {"max", vec_json(b.max_corner)}});

    const auto& p = synth.plant;
    return {
        {"projection",
         {{"width", extraction.projection.width},
          {"height", extraction.projection.height},
          {"resolution", extraction.projection.resolution}}},
        {"detector",
         {{"kind", detector == DetectorKind::builtin ? "builtin" : "external"},
          {"score_threshold", extraction.score_threshold},
          {"petal_filter", hsv_json(color_threshold.petal_filter)},
          {"min_area", color_threshold.min_area},
          {"merge_gap", color_threshold.merge_gap},
          {"exchange_dir", exchange_dir.string()},
          {"timeout_ms", exchange_timeout_ms}}},
        {"outliers",
         {{"statistical_k", extraction.outliers.statistical_k},
          {"statistical_std_ratio", extraction.outliers.statistical_std_ratio},
          {"radius", extraction.outliers.radius},
          {"radius_min_neighbors", extraction.outliers.radius_min_neighbors}}},
        {"clustering", {{"eps", extraction.dbscan_eps}, {"min_points", extraction.dbscan_min_points}}},
        {"crop_boxes", crop},
        {"segmentation",
         {{"petal_range", hsv_json(segmentation.petal_range)},
          {"pistil_range", hsv_json(segmentation.pistil_range)},
          {"pistil_eps", segmentation.pistil_eps},
          {"pistil_min_points", segmentation.pistil_min_points},
          {"min_petal_points", segmentation.min_petal_points}}},
        {"fitting", {{"tol", fitting.tol}, {"max_iter", fitting.max_iter}}},
        {"evaluation",
         {{"max_dist", match_max_dist},
          {"membership", membership_path},
          {"min_detection_rate", min_detection_rate},
          {"max_mean_plane_error_deg", max_mean_plane_error_deg}}},
        {"capture", {{"center_fraction", capture_center_fraction}, {"bins", capture_bins}}},
        {"synth",
         {{"n_flowers", synth.n_flowers},
          {"bed_min", vec_json(synth.bed.min_corner)},
          {"bed_max", vec_json(synth.bed.max_corner)},
          {"foliage_density", synth.foliage_density},
          {"petal_radius_min", p.petal_radius_min},
          {"petal_radius_max", p.petal_radius_max},
          {"curvature_min", p.curvature_min},
          {"curvature_max", p.curvature_max},
          {"max_tilt_deg", p.max_tilt_deg},
          {"pistil_radius", p.pistil_radius},
          {"point_density", p.point_density},
          {"noise_sigma", p.noise_sigma},
          {"ground_density", p.ground_density},
          {"leaf_points", p.leaf_points}}},
        {"seed", seed},
        {"threads", threads},
    };
}

json default_config_json()
{
    return PipelineConfig{}.to_json();
}

json merge_config(const json& user)
{
    json base = default_config_json();
    if (user.is_null())
        return base;
    merge_into(base, user, "");
    return base;
}

PipelineConfig config_from_json(const json& user)
{
    const json j = merge_config(user);
    PipelineConfig c;

    const auto& pr = j["projection"];
    c.extraction.projection = {get<int>(pr, "width", "projection"), get<int>(pr, "height", "projection"),
                               get<int>(pr, "resolution", "projection")};
    if (c.extraction.projection.width < 1 || c.extraction.projection.height < 1 ||
        c.extraction.projection.resolution < 0)
        throw ConfigError("projection: width/height must be positive and resolution non-negative");

    const auto& d = j["detector"];
    const auto kind = get<std::string>(d, "kind", "detector");
    if (kind == "builtin")
        c.detector = DetectorKind::builtin;
    else if (kind == "external")
        c.detector = DetectorKind::external;
    else
        throw ConfigError("detector.kind must be 'builtin' or 'external', got '" + kind + "'");
    c.extraction.score_threshold = get<double>(d, "score_threshold", "detector");
    try {
        c.color_threshold.petal_filter = hsv_from(d["petal_filter"]);
        c.segmentation.petal_range = hsv_from(j["segmentation"]["petal_range"]);
        c.segmentation.pistil_range = hsv_from(j["segmentation"]["pistil_range"]);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("HSV range: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("HSV range: ") + e.what());
    }
    c.color_threshold.min_area = get<long long>(d, "min_area", "detector");
    c.color_threshold.merge_gap = get<int>(d, "merge_gap", "detector");
    c.exchange_dir = get<std::string>(d, "exchange_dir", "detector");
    c.exchange_timeout_ms = get<int>(d, "timeout_ms", "detector");

    const auto& o = j["outliers"];
    c.extraction.outliers = {get<int>(o, "statistical_k", "outliers"), get<double>(o, "statistical_std_ratio", "outliers"),
                             get<double>(o, "radius", "outliers"), get<int>(o, "radius_min_neighbors", "outliers")};

    c.extraction.dbscan_eps = get<double>(j["clustering"], "eps", "clustering");
    c.extraction.dbscan_min_points = get<int>(j["clustering"], "min_points", "clustering");
    if (!(c.extraction.dbscan_eps > 0) || c.extraction.dbscan_min_points < 1)
        throw ConfigError("clustering: eps must be positive and min_points at least 1");

    for (const auto& b : j["crop_boxes"]) {
        if (!b.is_object() || !b.contains("min") || !b.contains("max") || b.size() != 2)
            throw ConfigError("crop_boxes: each entry needs exactly 'min' and 'max'");
        try {
            c.extraction.crop_boxes.emplace_back(vec_from(b["min"], "crop_boxes.min"), vec_from(b["max"], "crop_boxes.max"));
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("crop_boxes: ") + e.what());
        }
    }

    const auto& s = j["segmentation"];
    c.segmentation.pistil_eps = get<double>(s, "pistil_eps", "segmentation");
    c.segmentation.pistil_min_points = get<int>(s, "pistil_min_points", "segmentation");
    c.segmentation.min_petal_points = get<int>(s, "min_petal_points", "segmentation");

    c.fitting.tol = get<double>(j["fitting"], "tol", "fitting");
    c.fitting.max_iter = get<int>(j["fitting"], "max_iter", "fitting");
    if (!(c.fitting.tol > 0) || c.fitting.max_iter < 1)
        throw ConfigError("fitting: tol must be positive and max_iter at least 1");

    const auto& e = j["evaluation"];
    c.match_max_dist = get<double>(e, "max_dist", "evaluation");
    if (!(c.match_max_dist > 0))
        throw ConfigError("evaluation.max_dist must be positive");
    c.membership_path = get<std::string>(e, "membership", "evaluation");
    c.min_detection_rate = get<double>(e, "min_detection_rate", "evaluation");
    c.max_mean_plane_error_deg = get<double>(e, "max_mean_plane_error_deg", "evaluation");

    c.capture_center_fraction = get<double>(j["capture"], "center_fraction", "capture");
    c.capture_bins = get<std::size_t>(j["capture"], "bins", "capture");

    const auto& sy = j["synth"];
    c.synth.n_flowers = get<int>(sy, "n_flowers", "synth");
    try {
        c.synth.bed = Aabb(vec_from(sy["bed_min"], "synth.bed_min"), vec_from(sy["bed_max"], "synth.bed_max"));
    } catch (const InvalidArgument& ex) {
        throw ConfigError(std::string("synth bed: ") + ex.what());
    }
    c.synth.foliage_density = get<double>(sy, "foliage_density", "synth");
    auto& p = c.synth.plant;
    p.petal_radius_min = get<double>(sy, "petal_radius_min", "synth");
    p.petal_radius_max = get<double>(sy, "petal_radius_max", "synth");
    p.curvature_min = get<double>(sy, "curvature_min", "synth");
    p.curvature_max = get<double>(sy, "curvature_max", "synth");
    p.max_tilt_deg = get<double>(sy, "max_tilt_deg", "synth");
    p.pistil_radius = get<double>(sy, "pistil_radius", "synth");
    p.point_density = get<double>(sy, "point_density", "synth");
    p.noise_sigma = get<double>(sy, "noise_sigma", "synth");
    p.ground_density = get<double>(sy, "ground_density", "synth");
    p.leaf_points = get<double>(sy, "leaf_points", "synth");

    c.seed = get<std::uint64_t>(j, "seed", "");
    c.threads = get<int>(j, "threads", "");
    if (c.threads < 0)
        throw ConfigError("threads must be non-negative");
    return c;
}

void apply_overrides(json& config, const std::vector<std::pair<std::string, std::string>>& env)
{
    const std::string prefix = kEnvPrefix;
    for (const auto& [name, value] : env) {
        if (name.rfind(prefix, 0) != 0)
            continue;
        std::vector<std::string> parts;
        std::size_t pos = prefix.size();
        while (true) {
            const auto next = name.find("__", pos);
            parts.push_back(name.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
            if (next == std::string::npos)
                break;
            pos = next + 2;
        }
        json* slot = &config;
        for (const auto& part : parts) {
            if (!slot->is_object() || !slot->contains(part))
                throw ConfigError("environment override " + name + " names an unknown config key");
            slot = &(*slot)[part];
        }
        json parsed;
        try {
            parsed = json::parse(value);
        } catch (const json::exception&) {
            parsed = value;
        }
        *slot = parsed;
    }
}

std::vector<std::pair<std::string, std::string>> environment_overrides()
{
    std::vector<std::pair<std::string, std::string>> out;
    for (char** e = environ; e && *e; ++e) {
        const std::string entry = *e;
        if (entry.rfind(kEnvPrefix, 0) != 0)
            continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos)
            continue;
        out.emplace_back(entry.substr(0, eq), entry.substr(eq + 1));
    }
    std::sort(out.begin(), out.end());
    return out;
}

PipelineConfig load_config(const std::optional<std::filesystem::path>& path)
{
    json user = json::object();
    if (path) {
        std::ifstream in(*path);
        if (!in)
            throw ConfigError("cannot open config " + path->string());
        try {
            user = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError("config " + path->string() + ": " + e.what());
        }
    }
    json merged = merge_config(user);
    apply_overrides(merged, environment_overrides());
    return config_from_json(merged);
}

} // namespace flowerpose
