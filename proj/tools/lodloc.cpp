// Command-line front end: render / match / lift / resect / run / report.
// Every failure exits nonzero with "error: <category>: <message>" on
// stderr, where the category is a stable machine-readable token.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lodloc/errors.hpp"
#include "lodloc/filters.hpp"
#include "lodloc/lift.hpp"
#include "lodloc/matching.hpp"
#include "lodloc/pipeline.hpp"
#include "lodloc/raycast.hpp"
#include "lodloc/resection.hpp"
#include "lodloc/stats.hpp"

namespace {

using namespace lodloc;

struct SceneArgs {
    std::vector<std::string> models;
    std::string lod_override;
};

void add_scene_options(CLI::App* cmd, SceneArgs& args) {
    cmd->add_option("--model", args.models, "model file (repeatable)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--lod", args.lod_override,
                    "LoD tag for models without a header entry (LoD2/LoD3)");
}

SemanticMesh compose_from_args(const SceneArgs& args) {
    std::optional<LoD> lod;
    if (!args.lod_override.empty()) lod = lod_from_string(args.lod_override);
    std::vector<SemanticModel> models;
    models.reserve(args.models.size());
    for (const auto& path : args.models) models.push_back(load_model(path, lod));
    return compose_scene(models);
}

struct PoseArgs {
    std::string track;
    int frame = -1;
    double roll = 0, pitch = 0, yaw = 0;
    double r_gnss = 0;
    double camera_height = 0;
};

void add_pose_options(CLI::App* cmd, PoseArgs& args) {
    cmd->add_option("--track", args.track, "GNSS track file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--frame", args.frame, "frame id (default: first track entry)");
    cmd->add_option("--roll", args.roll, "roll offset, degrees");
    cmd->add_option("--pitch", args.pitch, "pitch offset, degrees");
    cmd->add_option("--yaw", args.yaw, "yaw offset, degrees");
    cmd->add_option("--r-gnss", args.r_gnss,
                    "offset arc radius, meters (<= 0: consecutive-point distance)");
    cmd->add_option("--camera-height", args.camera_height,
                    "camera height above the antenna, meters");
}

CameraPose pose_from_args(const PoseArgs& args) {
    GnssTrack track = load_track(args.track);
    track.antenna_to_camera_height = args.camera_height;
    int index = 0;
    if (args.frame >= 0) {
        index = track.find_frame(args.frame);
        if (index < 0)
            throw ValidationError("frame " + std::to_string(args.frame) +
                                  " is not in the track");
    }
    return build_lookat_pose(track, static_cast<size_t>(index),
                             {args.roll, args.pitch, args.yaw}, args.r_gnss);
}

void add_detector_options(CLI::App* cmd, PipelineParams& params) {
    cmd->add_option("--ratio", params.ratio, "Lowe ratio threshold");
    cmd->add_option("--max-features", params.detector.max_features, "keypoint budget");
    cmd->add_option("--fast-threshold", params.detector.fast_threshold,
                    "FAST contrast threshold");
    cmd->add_option("--levels", params.detector.levels, "pyramid levels");
    cmd->add_option("--scale-factor", params.detector.scale_factor, "pyramid scale step");
    cmd->add_option("--canny-low", params.canny_low, "Canny low threshold");
    cmd->add_option("--canny-high", params.canny_high, "Canny high threshold");
    cmd->add_option("--feature-image-smoothing", params.feature_image_smoothing,
                    "Gaussian sigma applied to feature images before matching");
    cmd->add_flag("--mask-virtual", params.mask_virtual,
                  "apply the mask to the virtual image too");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LoD building-model visual localization pipeline"};
    app.require_subcommand(1);

    // render
    auto* render = app.add_subcommand(
        "render", "ray-cast a virtual view and dump the per-pixel buffers");
    SceneArgs render_scene;
    PoseArgs render_pose;
    std::string render_intrinsics, render_out;
    int render_workers = 0;
    add_scene_options(render, render_scene);
    add_pose_options(render, render_pose);
    render->add_option("--intrinsics", render_intrinsics, "camera file")
        ->required()
        ->check(CLI::ExistingFile);
    render->add_option("--out", render_out, "output directory")->required();
    render->add_option("--workers", render_workers, "render threads (0: all cores)");
    render->callback([&] {
        const SemanticMesh mesh = compose_from_args(render_scene);
        const CameraPose pose = pose_from_args(render_pose);
        const CameraIntrinsics k = load_intrinsics(render_intrinsics);
        const RaycastBuffers buffers = cast_scene(mesh, pose, k, render_workers);
        dump_buffers(buffers, render_out);
        save_pgm(to_gray(render_normal_image(buffers)),
                 (std::filesystem::path(render_out) / "gray.pgm").string());
        std::cout << buffers.hit_count() << " of " << buffers.hit_distance.size()
                  << " pixels hit\n";
    });

    // match
    auto* match = app.add_subcommand("match", "match a real/virtual image pair");
    std::string match_real, match_virtual, match_mask, match_method = "direct";
    std::string match_out;
    PipelineParams match_params;
    match->add_option("--real", match_real, "real image")
        ->required()
        ->check(CLI::ExistingFile);
    match->add_option("--virtual", match_virtual, "virtual image")
        ->required()
        ->check(CLI::ExistingFile);
    match->add_option("--mask", match_mask, "segmentation mask")->check(CLI::ExistingFile);
    match->add_option("--method", match_method,
                      "direct|feature-images|sobel|canny|mask|mask-sobel|mask-canny");
    match->add_option("--out", match_out, "matches CSV")->required();
    add_detector_options(match, match_params);
    match->callback([&] {
        const GrayImage real = load_gray(match_real);
        const GrayImage virt = load_gray(match_virtual);
        std::optional<GrayImage> mask;
        if (!match_mask.empty()) mask = load_gray(match_mask);
        const PipelineMatches result = match_pipeline(
            real, virt, mask, match_method_from_string(match_method), match_params);
        save_matches(result, match_out);
        std::cout << result.set.matches.size() << " matches\n";
    });

    // lift
    auto* lift = app.add_subcommand(
        "lift", "turn matches into 2D-3D correspondences via render buffers");
    SceneArgs lift_scene;
    std::string lift_buffers, lift_matches, lift_out, lift_weights = "identity";
    add_scene_options(lift, lift_scene);
    lift->add_option("--buffers", lift_buffers, "buffer directory from render")
        ->required()
        ->check(CLI::ExistingDirectory);
    lift->add_option("--matches", lift_matches, "matches CSV")
        ->required()
        ->check(CLI::ExistingFile);
    lift->add_option("--weights", lift_weights, "identity|inverse-distance");
    lift->add_option("--out", lift_out, "correspondence CSV")->required();
    lift->callback([&] {
        const SemanticMesh mesh = compose_from_args(lift_scene);
        const RaycastBuffers buffers = load_buffers(lift_buffers);
        const PipelineMatches matches = load_matches(lift_matches);
        WeightPolicy policy;
        if (lift_weights == "identity") {
            policy = WeightPolicy::Identity;
        } else if (lift_weights == "inverse-distance") {
            policy = WeightPolicy::InverseDistance;
        } else {
            throw ConfigError("unknown weight policy '" + lift_weights + "'");
        }
        const CorrespondenceSet set =
            build_correspondences(matches.set, matches.keypoints_real,
                                  matches.keypoints_virtual, buffers, mesh, policy);
        save_correspondences(set.correspondences, lift_out);
        std::cout << set.correspondences.size() << " correspondences, " << set.dropped
                  << " dropped\n";
    });

    // resect
    auto* resect = app.add_subcommand("resect", "estimate the camera pose");
    std::string resect_corr, resect_intrinsics, resect_out;
    std::vector<double> resect_gnss;
    ResectionConfig resect_config;
    resect->add_option("--correspondences", resect_corr, "correspondence CSV")
        ->required()
        ->check(CLI::ExistingFile);
    resect->add_option("--intrinsics", resect_intrinsics, "camera file")
        ->required()
        ->check(CLI::ExistingFile);
    resect->add_option("--gnss", resect_gnss, "approximate position X Y Z")
        ->required()
        ->expected(3);
    resect->add_option("--tolerance", resect_config.tolerance, "update max-norm cutoff");
    resect->add_option("--max-iterations", resect_config.max_iterations,
                       "iteration budget");
    resect->add_option("--out", resect_out, "solution CSV")->required();
    resect->callback([&] {
        ResectionProblem problem;
        problem.correspondences = load_correspondences(resect_corr);
        problem.intrinsics = load_intrinsics(resect_intrinsics);
        problem.approx_position =
            Eigen::Vector3d(resect_gnss[0], resect_gnss[1], resect_gnss[2]);
        const ResectionSolution solution = resect_frame(problem, resect_config);
        save_solution(solution, resect_out);
        std::cout << "converged in " << solution.iterations << " iterations, s0 "
                  << solution.s0 << " px\n";
    });

    // run
    auto* run = app.add_subcommand("run", "full trajectory pipeline from a config");
    std::string run_config_path;
    run->add_option("--config", run_config_path, "JSON run config")
        ->required()
        ->check(CLI::ExistingFile);
    run->callback([&] {
        const RunConfig config = load_run_config(run_config_path);
        const RunResult result = run_trajectory(config);
        emit_report(result, config.out_dir);
        int ok = 0;
        for (const FrameRecord& r : result.records) ok += r.ok() ? 1 : 0;
        std::cout << result.records.size() << " cells processed, " << ok
                  << " with solutions; report under " << config.out_dir << "\n";
    });

    // report
    auto* report = app.add_subcommand("report", "rebuild the report from frames.csv");
    std::string report_frames, report_out;
    report->add_option("--frames", report_frames, "frames.csv from a run")
        ->required()
        ->check(CLI::ExistingFile);
    report->add_option("--out", report_out, "output directory")->required();
    report->callback([&] {
        RunResult result;
        result.records = load_frames(report_frames);
        std::vector<MatchMethod> methods;
        for (const FrameRecord& r : result.records)
            if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
                methods.push_back(r.method);
        result.stats = aggregate_stats(result.records, methods);
        emit_report(result, report_out);
        std::cout << result.stats.rows.size() << " method rows; report under "
                  << report_out << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const lodloc::Error& e) {
        std::cerr << "error: " << e.category() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
