#include "flowerpose/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <tuple>

#include "flowerpose/error.hpp"

using nlohmann::json;

namespace flowerpose {
namespace {

constexpr std::array<PoseMethod, 3> kMethods{PoseMethod::superellipsoid, PoseMethod::paraboloid, PoseMethod::plane};

Vec3 vec_from_json(const json& j, const char* what)
{
    if (!j.is_array() || j.size() != 3)
        throw InvalidArgument(std::string("ground truth: '") + what + "' must be a 3-element array");
    Vec3 v;
    for (int i = 0; i < 3; ++i) {
        if (!j[static_cast<std::size_t>(i)].is_number())
            throw InvalidArgument(std::string("ground truth: '") + what + "' must hold numbers");
        v[i] = j[static_cast<std::size_t>(i)].get<double>();
    }
    if (!v.allFinite())
        throw InvalidArgument(std::string("ground truth: '") + what + "' is not finite");
    return v;
}

json number_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

double number_or_nan(const json& j)
{
    return j.is_number() ? j.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> finite_errors(const std::vector<FlowerError>& flowers, std::size_t method)
{
    std::vector<double> out;
    for (const auto& f : flowers)
        if (std::isfinite(f.degrees[method]))
            out.push_back(f.degrees[method]);
    return out;
}

} // namespace

std::vector<GroundTruthLabel> labels_from_json(const json& j)
{
    if (!j.is_array())
        throw InvalidArgument("ground truth: expected a JSON list of labels");
    std::vector<GroundTruthLabel> out;
    for (const auto& e : j) {
        if (!e.is_object() || !e.contains("id") || !e["id"].is_string() || !e.contains("position") ||
            !e.contains("direction"))
            throw InvalidArgument("ground truth: each label needs id, position and direction");
        GroundTruthLabel l{e["id"].get<std::string>(), vec_from_json(e["position"], "position"),
                           vec_from_json(e["direction"], "direction")};
        if (std::abs(l.direction.norm() - 1.0) > 1e-6)
            throw InvalidArgument("ground truth: direction of '" + l.id + "' is not a unit vector");
        out.push_back(std::move(l));
    }
    return out;
}

json labels_to_json(std::span<const GroundTruthLabel> labels)
{
    json arr = json::array();
    for (const auto& l : labels)
        arr.push_back({{"id", l.id},
                       {"position", {l.position.x(), l.position.y(), l.position.z()}},
                       {"direction", {l.direction.x(), l.direction.y(), l.direction.z()}}});
    return arr;
}

std::vector<GroundTruthLabel> load_labels(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidArgument("cannot open ground truth " + path.string());
    try {
        return labels_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw InvalidArgument("ground truth " + path.string() + ": " + e.what());
    }
}

MatchResult match_detections(std::span<const Vec3> detections, std::span<const GroundTruthLabel> labels,
                             double max_dist)
{
    if (!(max_dist > 0))
        throw InvalidArgument("match_detections: max_dist must be positive");

    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < detections.size(); ++i)
        for (std::size_t j = 0; j < labels.size(); ++j) {
            const double d = (detections[i] - labels[j].position).norm();
            if (d <= max_dist)
                pairs.emplace_back(d, i, j);
        }
    std::sort(pairs.begin(), pairs.end());

    std::vector<bool> det_used(detections.size(), false), lab_used(labels.size(), false);
    std::vector<std::pair<std::size_t, std::size_t>> chosen;
    for (const auto& [d, i, j] : pairs) {
        if (det_used[i] || lab_used[j])
            continue;
        det_used[i] = lab_used[j] = true;
        chosen.emplace_back(i, j);
    }
    std::sort(chosen.begin(), chosen.end());

    MatchResult res;
    for (const auto& [i, j] : chosen)
        res.matched.emplace_back(i, labels[j].id);
    for (std::size_t i = 0; i < detections.size(); ++i)
        if (!det_used[i])
            res.extra.push_back(i);
    for (std::size_t j = 0; j < labels.size(); ++j)
        if (!lab_used[j])
            res.missed.push_back(labels[j].id);
    return res;
}

double detection_rate(std::size_t found, std::size_t ground_truth)
{
    if (ground_truth == 0)
        throw InvalidArgument("detection_rate: ground truth count is zero");
    return std::round(1000.0 * static_cast<double>(found) / static_cast<double>(ground_truth)) / 10.0;
}

ErrorSummary summarize(std::span<const double> errors)
{
    if (errors.empty())
        throw InvalidArgument("summarize: empty error list");
    const double n = static_cast<double>(errors.size());
    ErrorSummary s;
    s.mean = std::accumulate(errors.begin(), errors.end(), 0.0) / n;
    std::vector<double> sorted(errors.begin(), errors.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    s.median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    double ss = 0.0;
    for (double e : errors)
        ss += (e - s.mean) * (e - s.mean);
    s.std_dev = std::sqrt(ss / n);
    return s;
}

std::size_t EvaluationReport::total_ground_truth() const
{
    std::size_t n = 0;
    for (const auto& p : plants)
        n += p.ground_truth;
    return n;
}

std::size_t EvaluationReport::total_found() const
{
    std::size_t n = 0;
    for (const auto& p : plants)
        n += p.found;
    return n;
}

std::array<std::optional<ErrorSummary>, 3> EvaluationReport::aggregate() const
{
    std::array<std::optional<ErrorSummary>, 3> out;
    for (std::size_t m = 0; m < 3; ++m) {
        std::vector<double> all;
        for (const auto& p : plants) {
            const auto e = finite_errors(p.flowers, m);
            all.insert(all.end(), e.begin(), e.end());
        }
        if (!all.empty())
            out[m] = summarize(all);
    }
    return out;
}

PlantRow evaluate_plant(std::string name, std::span<const Vec3> detection_centroids,
                        std::span<const std::array<std::optional<Vec3>, 3>> directions,
                        std::span<const GroundTruthLabel> labels, double max_dist,
                        const std::vector<bool>& overlaps_labeled)
{
    if (directions.size() != detection_centroids.size() || overlaps_labeled.size() != detection_centroids.size())
        throw InvalidArgument("evaluate_plant: per-detection inputs differ in length");

    const auto match = match_detections(detection_centroids, labels, max_dist);
    PlantRow row;
    row.name = std::move(name);
    row.ground_truth = labels.size();
    row.found = match.matched.size();
    for (std::size_t i : match.extra)
        (overlaps_labeled[i] ? row.extra : row.false_positives) += 1;

    for (const auto& [det, id] : match.matched) {
        const auto label = std::find_if(labels.begin(), labels.end(), [&](const auto& l) { return l.id == id; });
        FlowerError fe{det, id, {}};
        for (std::size_t m = 0; m < 3; ++m)
            fe.degrees[m] = directions[det][m] ? angular_error(*directions[det][m], label->direction)
                                               : std::numeric_limits<double>::quiet_NaN();
        row.flowers.push_back(std::move(fe));
    }
    return row;
}

json report_to_json(const EvaluationReport& report)
{
    json plants = json::array();
    for (const auto& p : report.plants) {
        json flowers = json::array();
        for (const auto& f : p.flowers) {
            json errs = json::object();
            for (std::size_t m = 0; m < 3; ++m)
                errs[to_string(kMethods[m])] = number_or_null(f.degrees[m]);
            flowers.push_back({{"detection", f.detection}, {"label", f.label}, {"errors_deg", errs}});
        }
        json means = json::object();
        for (std::size_t m = 0; m < 3; ++m) {
            const auto e = finite_errors(p.flowers, m);
            means[to_string(kMethods[m])] = e.empty() ? json(nullptr) : json(summarize(e).mean);
        }
        plants.push_back({{"name", p.name},
                          {"ground_truth", p.ground_truth},
                          {"found", p.found},
                          {"found_percent", p.ground_truth ? json(detection_rate(p.found, p.ground_truth)) : json(nullptr)},
                          {"extra", p.extra},
                          {"false_positives", p.false_positives},
                          {"mean_error_deg", means},
                          {"flowers", flowers}});
    }

    json methods = json::object();
    const auto agg = report.aggregate();
    for (std::size_t m = 0; m < 3; ++m)
        methods[to_string(kMethods[m])] =
            agg[m] ? json{{"mean", agg[m]->mean}, {"median", agg[m]->median}, {"std", agg[m]->std_dev}} : json(nullptr);
    const auto gt = report.total_ground_truth();
    return {{"plants", plants},
            {"aggregate",
             {{"ground_truth", gt},
              {"found", report.total_found()},
              {"found_percent", gt ? json(detection_rate(report.total_found(), gt)) : json(nullptr)},
              {"error_deg", methods}}}};
}

EvaluationReport report_from_json(const json& j)
{
    EvaluationReport r;
    try {
        for (const auto& p : j.at("plants")) {
            PlantRow row;
            row.name = p.at("name").get<std::string>();
            row.ground_truth = p.at("ground_truth").get<std::size_t>();
            row.found = p.at("found").get<std::size_t>();
            row.extra = p.at("extra").get<std::size_t>();
            row.false_positives = p.at("false_positives").get<std::size_t>();
            for (const auto& f : p.at("flowers")) {
                FlowerError fe{f.at("detection").get<std::size_t>(), f.at("label").get<std::string>(), {}};
                for (std::size_t m = 0; m < 3; ++m)
                    fe.degrees[m] = number_or_nan(f.at("errors_deg").at(to_string(kMethods[m])));
                row.flowers.push_back(std::move(fe));
            }
            r.plants.push_back(std::move(row));
        }
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed evaluation report: ") + e.what());
    }
    return r;
}

std::string format_report(const EvaluationReport& report)
{
    std::string out;
    char line[256];
    auto cell = [](const std::optional<double>& v) {
        char buf[32];
        if (v)
            std::snprintf(buf, sizeof buf, "%8.1f", *v);
        else
            std::snprintf(buf, sizeof buf, "%8s", "-");
        return std::string(buf);
    };

    std::snprintf(line, sizeof line, "%-12s %6s %14s %6s %4s %8s %8s %8s\n", "plant", "GT", "found (%)", "extra",
                  "FP", "superell", "parabol", "plane");
    out += line;
    for (const auto& p : report.plants) {
        char found[32];
        if (p.ground_truth)
            std::snprintf(found, sizeof found, "%zu (%.1f)", p.found, detection_rate(p.found, p.ground_truth));
        else
            std::snprintf(found, sizeof found, "%zu (-)", p.found);
        std::snprintf(line, sizeof line, "%-12s %6zu %14s %6zu %4zu", p.name.c_str(), p.ground_truth, found, p.extra,
                      p.false_positives);
        out += line;
        for (std::size_t m = 0; m < 3; ++m) {
            const auto e = finite_errors(p.flowers, m);
            out += " " + cell(e.empty() ? std::nullopt : std::optional<double>(summarize(e).mean));
        }
        out += "\n";
    }

    const auto gt = report.total_ground_truth();
    char found[32];
    if (gt)
        std::snprintf(found, sizeof found, "%zu (%.1f)", report.total_found(), detection_rate(report.total_found(), gt));
    else
        std::snprintf(found, sizeof found, "%zu (-)", report.total_found());
    std::snprintf(line, sizeof line, "%-12s %6zu %14s\n", "total", gt, found);
    out += line;

    const auto agg = report.aggregate();
    const char* names[3] = {"mean", "median", "std dev"};
    for (int k = 0; k < 3; ++k) {
        std::snprintf(line, sizeof line, "%-12s %6s %14s %6s %4s", names[k], "", "", "", "");
        out += line;
        for (std::size_t m = 0; m < 3; ++m) {
            std::optional<double> v;
            if (agg[m])
                v = k == 0 ? agg[m]->mean : k == 1 ? agg[m]->median : agg[m]->std_dev;
            out += " " + cell(v);
        }
        out += "\n";
    }
    return out;
}

} // namespace flowerpose
