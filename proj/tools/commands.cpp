#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <omp.h>

#include "CLI11.hpp"
#include "flowerpose/capture.hpp"
#include "flowerpose/config.hpp"
#include "flowerpose/error.hpp"
#include "flowerpose/exchange.hpp"
#include "flowerpose/pipeline.hpp"
#include "flowerpose/ply.hpp"
#include "flowerpose/synth.hpp"

namespace fs = std::filesystem;

namespace flowerpose::cli {
namespace {

struct Common {
    std::string config;
    std::string detector;
    int threads = -1;
    std::optional<std::uint64_t> seed;
    std::string membership;
};

struct Paths {
    std::string input;
    std::string out;
    std::string ground_truth;
    std::string boxes;
};

PipelineConfig resolve(const Common& c)
{
    PipelineConfig config = load_config(c.config.empty() ? std::nullopt : std::optional<fs::path>(c.config));
    if (c.detector == "builtin")
        config.detector = DetectorKind::builtin;
    else if (c.detector == "external")
        config.detector = DetectorKind::external;
    if (c.seed)
        config.seed = *c.seed;
    if (c.threads >= 0)
        config.threads = c.threads;
    if (!c.membership.empty())
        config.membership_path = c.membership;
    if (config.threads > 0)
        omp_set_num_threads(config.threads);
    return config;
}

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("--config", c.config, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--detector", c.detector, "2D detector")->check(CLI::IsMember({"builtin", "external"}));
    sub->add_option("--threads", c.threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", c.seed, "random seed");
}

int cmd_synth(const Common& c, const Paths& p)
{
    const PipelineConfig config = resolve(c);
    const fs::path out(p.out);
    fs::create_directories(out);
    const auto& s = config.synth;
    const SyntheticScene scene = make_plant(s.n_flowers, s.bed, s.foliage_density, config.seed, s.plant);
    save_ply(out / "cloud.ply", scene.cloud);
    write_json(out / "labels.json", labels_to_json(scene.labels));
    write_membership_csv(out / "membership.csv", scene);
    std::printf("%zu points, %zu flowers -> %s\n", scene.cloud.size(), scene.labels.size(), out.string().c_str());
    return 0;
}

int cmd_select_frames(const Common& c, const Paths& p)
{
    const PipelineConfig config = resolve(c);
    const auto files = list_frames(p.input);
    if (files.empty())
        throw InvalidArgument("no PNG frames in " + p.input);
    std::vector<GrayImage> frames;
    frames.reserve(files.size());
    for (const auto& f : files)
        frames.push_back(read_png_gray(f));
    const auto scores = score_frames(frames, config.capture_center_fraction);
    const auto picked = select_frames(scores, std::min(config.capture_bins, scores.size()));
    std::string text;
    for (std::size_t i : picked)
        text += std::to_string(i) + ' ' + files[i].filename().string() + '\n';
    if (!p.out.empty()) {
        fs::create_directories(p.out);
        write_file_atomic(fs::path(p.out) / "selected.txt", text);
    }
    std::fputs(text.c_str(), stdout);
    return 0;
}

int cmd_run(const Common& c, const Paths& p)
{
    PipelineOptions opt;
    opt.config = resolve(c);
    opt.input = p.input;
    opt.out_dir = p.out;
    if (!p.ground_truth.empty())
        opt.ground_truth = p.ground_truth;
    const PipelineResult result = run_pipeline(opt);
    std::printf("%zu flower candidates\n", result.flowers.size());
    if (result.report)
        std::fputs(format_report(*result.report).c_str(), stdout);
    return result.within_limits ? 0 : 3;
}

int cmd_evaluate(const Common& c, const Paths& p)
{
    const PipelineConfig config = resolve(c);
    const EvaluationReport report = stage_evaluate(p.input, p.ground_truth, p.out, config);
    std::fputs(format_report(report).c_str(), stdout);
    return report_within_limits(report, config) ? 0 : 3;
}

} // namespace

int run(int argc, char** argv)
{
    CLI::App app{"Flower detection and pose estimation for colored point clouds"};
    app.name("flowerpose");
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    Common common;
    Paths paths;
    const auto describe = [&](const char* name, const char* help) {
        CLI::App* sub = app.add_subcommand(name, help);
        add_common(sub, common);
        return sub;
    };
    const auto input = [&](CLI::App* sub, const char* help) { sub->add_option("--input", paths.input, help)->required(); };
    const auto out = [&](CLI::App* sub) { sub->add_option("--out", paths.out, "output directory")->required(); };

    CLI::App* synth = describe("synth", "generate a synthetic plant with ground truth");
    out(synth);

    CLI::App* project = describe("project", "render the six orthographic views");
    input(project, "PLY cloud");
    out(project);

    CLI::App* detect = describe("detect", "run the 2D detector on rendered views");
    input(detect, "directory with view_*.png");
    out(detect);

    CLI::App* extract = describe("extract", "back-project, filter and cluster flower candidates");
    input(extract, "PLY cloud");
    extract->add_option("--boxes", paths.boxes, "detections.json from 'detect' (otherwise detect now)")
        ->check(CLI::ExistingFile);
    out(extract);

    CLI::App* segment = describe("segment", "split candidates into petals and pistil");
    input(segment, "flower_NNN.ply file or directory");
    out(segment);

    CLI::App* fit = describe("fit", "fit the three pose models");
    input(fit, "directory of flower_NNN_segment.json or a petals PLY");
    out(fit);

    CLI::App* evaluate = describe("evaluate", "score poses against ground truth");
    input(evaluate, "poses.json");
    evaluate->add_option("--ground-truth", paths.ground_truth, "labels JSON")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--membership", common.membership, "per-point membership CSV");
    out(evaluate);

    CLI::App* select = describe("select-frames", "pick the sharpest frame of each sequential bin");
    input(select, "directory of PNG frames");
    select->add_option("--out", paths.out, "directory for selected.txt");

    CLI::App* run_all = describe("run", "whole pipeline on one cloud");
    input(run_all, "PLY cloud");
    out(run_all);
    run_all->add_option("--ground-truth", paths.ground_truth, "labels JSON")->check(CLI::ExistingFile);
    run_all->add_option("--membership", common.membership, "per-point membership CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*synth)
            return cmd_synth(common, paths);
        if (*project) {
            stage_project(paths.input, paths.out, resolve(common));
            return 0;
        }
        if (*detect) {
            const PipelineConfig config = resolve(common);
            stage_detect(paths.input, paths.out, config, *make_detector(config));
            return 0;
        }
        if (*extract) {
            const PipelineConfig config = resolve(common);
            const auto boxes = paths.boxes.empty() ? std::nullopt : std::optional<fs::path>(paths.boxes);
            stage_extract(paths.input, boxes, paths.out, config, *make_detector(config));
            return 0;
        }
        if (*segment) {
            stage_segment(paths.input, paths.out, resolve(common));
            return 0;
        }
        if (*fit) {
            stage_fit(paths.input, paths.out, resolve(common));
            return 0;
        }
        if (*evaluate)
            return cmd_evaluate(common, paths);
        if (*select)
            return cmd_select_frames(common, paths);
        return cmd_run(common, paths);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "flowerpose: %s\n", e.what());
        return 1;
    }
}

} // namespace flowerpose::cli
