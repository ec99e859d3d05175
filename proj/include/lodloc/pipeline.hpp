#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lodloc/camera.hpp"
#include "lodloc/matching.hpp"
#include "lodloc/resection.hpp"
#include "lodloc/semantic_model.hpp"
#include "lodloc/trajectory.hpp"

namespace lodloc {

/// Full-pipeline run description, loaded from a JSON file. The LoD2 scene
/// is composed from lod2_models; the LoD3 scene replaces the buildings
/// named in lod3_replaces with the contents of lod3_models (hybrid scene:
/// refined models where available, coarse ones elsewhere).
struct RunConfig {
    std::vector<std::string> lod2_models;
    std::vector<std::string> lod3_models;
    std::vector<std::string> lod3_replaces;  // building ids dropped from the LoD2 set

    std::string track;
    std::string intrinsics;
    std::string real_dir;            // frame_<id>.pgm / .ppm per usable frame
    std::string mask_dir;            // optional, same naming as real_dir
    std::string out_dir;

    std::vector<MatchMethod> methods;
    AngularOffsets offsets;
    double r_gnss = 0;               // <= 0: consecutive-point distance
    double camera_height = 0;        // camera above the antenna, meters

    PipelineParams pipeline;
    ResectionConfig resection;
    WeightPolicy weight_policy = WeightPolicy::Identity;
    int workers = 1;
};

RunConfig load_run_config(const std::string& path);

/// One processed (frame, scene LoD, method) cell. status "ok" means a
/// converged solution; anything else is the failure tag (no-hits,
/// too-few-correspondences, degenerate-config, singular-normal-matrix,
/// not-converged, behind-camera, missing-mask).
struct FrameRecord {
    int frame = 0;
    LoD lod = LoD::LoD2;
    MatchMethod method = MatchMethod::Direct;
    std::string status = "ok";
    int matches = 0;
    int correspondences = 0;
    int dropped = 0;
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector3d angles = Eigen::Vector3d::Zero();
    Eigen::Matrix<double, 6, 1> sigma = Eigen::Matrix<double, 6, 1>::Zero();
    double s0 = 0;
    int iterations = 0;

    bool ok() const { return status == "ok"; }
};

/// Per-method medians for one scene LoD, over frames with a valid
/// (converged) solution; failed frames are only counted.
struct MethodLodDigest {
    int frames_ok = 0;
    int frames_failed = 0;
    double median_features = std::numeric_limits<double>::quiet_NaN();
    double median_sigma_x = std::numeric_limits<double>::quiet_NaN();
    double median_sigma_y = std::numeric_limits<double>::quiet_NaN();
    double median_sigma_z = std::numeric_limits<double>::quiet_NaN();
};

struct MethodComparison {
    MatchMethod method = MatchMethod::Direct;
    MethodLodDigest lod2;
    MethodLodDigest lod3;
    // Rounded percent gains; NaN when a side has no valid frames.
    double gain_features = std::numeric_limits<double>::quiet_NaN();
    double gain_sigma_x = std::numeric_limits<double>::quiet_NaN();
    double gain_sigma_y = std::numeric_limits<double>::quiet_NaN();
    double gain_sigma_z = std::numeric_limits<double>::quiet_NaN();
};

struct AreaStats {
    std::vector<MethodComparison> rows;  // one per method, config order
};

struct RunResult {
    AreaStats stats;
    std::vector<FrameRecord> records;  // frame-major, then LoD, then method
};

/// Renders, matches, lifts, and resects every usable track frame for both
/// scene LoDs and every configured method. Per-frame pipeline failures
/// become tagged records; infrastructure problems (unreadable files,
/// malformed configs) throw.
RunResult run_trajectory(const RunConfig& config);

/// Medians and gains from per-frame records, in the method order given.
AreaStats aggregate_stats(const std::vector<FrameRecord>& records,
                          const std::vector<MatchMethod>& methods);

/// Writes report.csv (method rows), frames.csv (per-frame detail), and
/// summary.txt under dir.
void emit_report(const RunResult& result, const std::string& dir);

/// Round-trip readers for the emitted files.
std::vector<FrameRecord> load_frames(const std::string& path);
AreaStats load_report(const std::string& path);

}  // namespace lodloc
