#include "lodloc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "lodloc/lift.hpp"
#include "lodloc/raycast.hpp"
#include "lodloc/stats.hpp"

namespace lodloc {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string resolve(const fs::path& base, const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return (base / p).lexically_normal().string();
}

void require_file(const std::string& path, const char* what) {
    if (!fs::exists(path))
        throw ConfigError(std::string(what) + " '" + path + "' does not exist");
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }

    RunConfig c;
    const fs::path base = fs::path(path).parent_path();
    try {
        for (const auto& m : j.value("lod2_models", json::array()))
            c.lod2_models.push_back(resolve(base, m.get<std::string>()));
        for (const auto& m : j.value("lod3_models", json::array()))
            c.lod3_models.push_back(resolve(base, m.get<std::string>()));
        for (const auto& b : j.value("lod3_replaces", json::array()))
            c.lod3_replaces.push_back(b.get<std::string>());

        c.track = resolve(base, j.value("track", ""));
        c.intrinsics = resolve(base, j.value("intrinsics", ""));
        c.real_dir = resolve(base, j.value("real_dir", ""));
        c.mask_dir = resolve(base, j.value("mask_dir", ""));
        c.out_dir = resolve(base, j.value("out_dir", "out"));

        for (const auto& m : j.value("methods", json::array()))
            c.methods.push_back(match_method_from_string(m.get<std::string>()));

        c.offsets.roll = j.value("roll", 0.0);
        c.offsets.pitch = j.value("pitch", 0.0);
        c.offsets.yaw = j.value("yaw", 0.0);
        c.r_gnss = j.value("r_gnss", 0.0);
        c.camera_height = j.value("camera_height", 0.0);

        c.pipeline.ratio = j.value("ratio", 0.75);
        c.pipeline.canny_low = j.value("canny_low", 50.0);
        c.pipeline.canny_high = j.value("canny_high", 150.0);
        c.pipeline.feature_image_smoothing = j.value("feature_image_smoothing", 0.0);
        c.pipeline.mask_virtual = j.value("mask_virtual", false);
        c.pipeline.detector.max_features = j.value("max_features", 500);
        c.pipeline.detector.fast_threshold = j.value("fast_threshold", 20);
        c.pipeline.detector.levels = j.value("levels", 3);
        c.pipeline.detector.scale_factor = j.value("scale_factor", 1.2);

        c.resection.tolerance = j.value("tolerance", 1e-6);
        c.resection.max_iterations = j.value("max_iterations", 50);

        const std::string policy = j.value("weight_policy", "identity");
        if (policy == "identity") {
            c.weight_policy = WeightPolicy::Identity;
        } else if (policy == "inverse-distance") {
            c.weight_policy = WeightPolicy::InverseDistance;
        } else {
            throw ConfigError("unknown weight_policy '" + policy + "'");
        }
        c.workers = j.value("workers", 1);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }

    if (c.methods.empty()) throw ConfigError(path + ": at least one method required");
    if (c.lod2_models.empty() && c.lod3_models.empty())
        throw ConfigError(path + ": no model files given");
    for (const auto& m : c.lod2_models) require_file(m, "model");
    for (const auto& m : c.lod3_models) require_file(m, "model");
    require_file(c.track, "track");
    require_file(c.intrinsics, "intrinsics file");
    if (!c.real_dir.empty()) require_file(c.real_dir, "real-image directory");

    const bool masked = std::any_of(c.methods.begin(), c.methods.end(), [](MatchMethod m) {
        return m == MatchMethod::Mask || m == MatchMethod::MaskSobel ||
               m == MatchMethod::MaskCanny;
    });
    if (masked && c.mask_dir.empty())
        throw ConfigError(path + ": mask methods configured but no mask_dir");
    if (!c.mask_dir.empty()) require_file(c.mask_dir, "mask directory");
    return c;
}

namespace {

// The frame_<id> raster for a track point, gray or color.
GrayImage load_frame_image(const std::string& dir, int frame) {
    const fs::path pgm = fs::path(dir) / ("frame_" + std::to_string(frame) + ".pgm");
    if (fs::exists(pgm)) return load_gray(pgm.string());
    const fs::path ppm = fs::path(dir) / ("frame_" + std::to_string(frame) + ".ppm");
    if (fs::exists(ppm)) return load_gray(ppm.string());
    throw IoError("no frame image for frame " + std::to_string(frame) + " under " + dir);
}

SemanticMesh compose_lod2_scene(const RunConfig& config,
                                std::vector<SemanticModel>& lod2_models_out) {
    lod2_models_out.clear();
    for (const auto& p : config.lod2_models)
        lod2_models_out.push_back(load_model(p, LoD::LoD2));
    return compose_scene(lod2_models_out);
}

SemanticMesh compose_lod3_scene(const RunConfig& config,
                                const std::vector<SemanticModel>& lod2_models) {
    // Hybrid scene: detailed models plus the coarse ones they do not replace.
    std::vector<SemanticModel> scene;
    const std::set<std::string> replaced(config.lod3_replaces.begin(),
                                         config.lod3_replaces.end());
    for (const SemanticModel& m : lod2_models) {
        SemanticModel kept = m;
        kept.buildings.clear();
        for (const Building& b : m.buildings)
            if (!replaced.count(b.id)) kept.buildings.push_back(b);
        if (!kept.buildings.empty()) scene.push_back(std::move(kept));
    }
    for (const auto& p : config.lod3_models) scene.push_back(load_model(p, LoD::LoD3));
    return compose_scene(scene);
}

// Failure categories that are data, not bugs; anything else propagates.
bool is_frame_failure(const std::string& category) {
    static const std::set<std::string> tags = {
        "degenerate-config", "singular-normal-matrix", "behind-camera",
        "precondition",      "missing-mask",           "miss",
    };
    return tags.count(category) > 0;
}

struct FrameTaskContext {
    const RunConfig* config;
    const SemanticMesh* scene_lod2;
    const SemanticMesh* scene_lod3;
    const GnssTrack* track;
    CameraIntrinsics intrinsics;
    bool masked_methods;
};

void process_frame(const FrameTaskContext& ctx, size_t track_index,
                   std::vector<FrameRecord>& records, size_t slot_base) {
    const RunConfig& config = *ctx.config;
    const int frame = ctx.track->points[track_index].frame;
    const CameraPose pose =
        build_lookat_pose(*ctx.track, track_index, config.offsets, config.r_gnss);

    const GrayImage real = load_frame_image(config.real_dir, frame);
    std::optional<GrayImage> mask;
    if (ctx.masked_methods) mask = load_frame_image(config.mask_dir, frame);

    const size_t n_methods = config.methods.size();
    for (int lod_index = 0; lod_index < 2; ++lod_index) {
        const LoD lod = lod_index == 0 ? LoD::LoD2 : LoD::LoD3;
        const SemanticMesh& scene = lod_index == 0 ? *ctx.scene_lod2 : *ctx.scene_lod3;
        // Frame tasks already run in parallel; the render stays serial.
        const RaycastBuffers buffers = cast_scene(scene, pose, ctx.intrinsics, 1);
        const bool any_hit = buffers.hit_count() > 0;
        const GrayImage virtual_img = to_gray(render_normal_image(buffers));

        for (size_t mi = 0; mi < n_methods; ++mi) {
            FrameRecord rec;
            rec.frame = frame;
            rec.lod = lod;
            rec.method = config.methods[mi];

            if (!any_hit) {
                rec.status = "no-hits";
            } else {
                try {
                    const PipelineMatches pm = match_pipeline(
                        real, virtual_img, mask, rec.method, config.pipeline);
                    rec.matches = static_cast<int>(pm.set.matches.size());
                    const CorrespondenceSet cs = build_correspondences(
                        pm.set, pm.keypoints_real, pm.keypoints_virtual, buffers,
                        scene, config.weight_policy);
                    rec.correspondences = static_cast<int>(cs.correspondences.size());
                    rec.dropped = cs.dropped;
                    if (cs.correspondences.size() < 6) {
                        rec.status = "too-few-correspondences";
                    } else {
                        ResectionProblem problem;
                        problem.correspondences = cs.correspondences;
                        problem.intrinsics = ctx.intrinsics;
                        problem.approx_position = pose.position;
                        const ResectionSolution sol =
                            resect_frame(problem, config.resection);
                        rec.position = sol.pose.position;
                        rec.angles = sol.pose.angles;
                        rec.sigma = sol.sigma;
                        rec.s0 = sol.s0;
                        rec.iterations = sol.iterations;
                    }
                } catch (const NonConvergenceError&) {
                    rec.status = "not-converged";
                } catch (const Error& e) {
                    if (!is_frame_failure(e.category())) throw;
                    rec.status = e.category();
                }
            }
            records[slot_base + static_cast<size_t>(lod_index) * n_methods + mi] = rec;
        }
    }
}

}  // namespace

RunResult run_trajectory(const RunConfig& config) {
    std::vector<SemanticModel> lod2_models;
    const SemanticMesh scene_lod2 = compose_lod2_scene(config, lod2_models);
    const SemanticMesh scene_lod3 = compose_lod3_scene(config, lod2_models);

    GnssTrack track = load_track(config.track);
    track.antenna_to_camera_height = config.camera_height;
    if (track.points.size() < 2)
        throw ConfigError("track needs at least two points to derive a viewing direction");
    const CameraIntrinsics intrinsics = load_intrinsics(config.intrinsics);

    FrameTaskContext ctx;
    ctx.config = &config;
    ctx.scene_lod2 = &scene_lod2;
    ctx.scene_lod3 = &scene_lod3;
    ctx.track = &track;
    ctx.intrinsics = intrinsics;
    ctx.masked_methods =
        std::any_of(config.methods.begin(), config.methods.end(), [](MatchMethod m) {
            return m == MatchMethod::Mask || m == MatchMethod::MaskSobel ||
                   m == MatchMethod::MaskCanny;
        });

    const size_t n_frames = track.points.size() - 1;  // last point has no successor
    const size_t per_frame = 2 * config.methods.size();

    RunResult result;
    result.records.resize(n_frames * per_frame);

    int workers = config.workers;
    if (workers <= 0) {
        const unsigned hc = std::thread::hardware_concurrency();
        workers = hc == 0 ? 1 : static_cast<int>(hc);
    }
    workers = static_cast<int>(std::min<size_t>(workers, n_frames));

    // The records vector is pre-sliced per frame, so any worker count
    // produces identical content; exceptions are re-thrown after join.
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run_range = [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i) {
            try {
                process_frame(ctx, i, result.records, i * per_frame);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    if (workers <= 1) {
        run_range(0, n_frames);
    } else {
        std::vector<std::thread> pool;
        const size_t chunk = (n_frames + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const size_t b = static_cast<size_t>(w) * chunk;
            if (b >= n_frames) break;
            pool.emplace_back(run_range, b, std::min(n_frames, b + chunk));
        }
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    result.stats = aggregate_stats(result.records, config.methods);
    return result;
}

AreaStats aggregate_stats(const std::vector<FrameRecord>& records,
                          const std::vector<MatchMethod>& methods) {
    AreaStats stats;
    for (MatchMethod method : methods) {
        MethodComparison row;
        row.method = method;
        for (int lod_index = 0; lod_index < 2; ++lod_index) {
            const LoD lod = lod_index == 0 ? LoD::LoD2 : LoD::LoD3;
            MethodLodDigest& digest = lod_index == 0 ? row.lod2 : row.lod3;
            std::vector<double> features, sx, sy, sz;
            for (const FrameRecord& r : records) {
                if (r.method != method || r.lod != lod) continue;
                if (!r.ok()) {
                    ++digest.frames_failed;
                    continue;
                }
                ++digest.frames_ok;
                features.push_back(r.matches);
                sx.push_back(r.sigma(0));
                sy.push_back(r.sigma(1));
                sz.push_back(r.sigma(2));
            }
            if (digest.frames_ok > 0) {
                digest.median_features = median(features);
                digest.median_sigma_x = median(sx);
                digest.median_sigma_y = median(sy);
                digest.median_sigma_z = median(sz);
            }
        }

        auto feature_gain = [](double l2, double l3) {
            if (!std::isfinite(l2) || !std::isfinite(l3) || l3 == 0)
                return std::numeric_limits<double>::quiet_NaN();
            return static_cast<double>(compute_gain(l2, l3));
        };
        auto sig_gain = [](double l2, double l3) {
            if (!std::isfinite(l2) || !std::isfinite(l3) || l2 == 0)
                return std::numeric_limits<double>::quiet_NaN();
            return static_cast<double>(sigma_gain(l2, l3));
        };
        row.gain_features = feature_gain(row.lod2.median_features, row.lod3.median_features);
        row.gain_sigma_x = sig_gain(row.lod2.median_sigma_x, row.lod3.median_sigma_x);
        row.gain_sigma_y = sig_gain(row.lod2.median_sigma_y, row.lod3.median_sigma_y);
        row.gain_sigma_z = sig_gain(row.lod2.median_sigma_z, row.lod3.median_sigma_z);
        stats.rows.push_back(row);
    }
    return stats;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& tok, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        throw ParseError(where + ": bad number '" + tok + "'");
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

constexpr const char* kFramesHeader =
    "frame,lod,method,status,matches,correspondences,dropped,X0,Y0,Z0,omega,phi,"
    "kappa,sigma_X,sigma_Y,sigma_Z,sigma_omega,sigma_phi,sigma_kappa,s0,iterations";

constexpr const char* kReportHeader =
    "method,lod2_frames,lod2_failures,lod3_frames,lod3_failures,lod2_features,"
    "lod3_features,gain_features,lod2_sigma_x,lod3_sigma_x,gain_sigma_x,"
    "lod2_sigma_y,lod3_sigma_y,gain_sigma_y,lod2_sigma_z,lod3_sigma_z,gain_sigma_z";

}  // namespace

void emit_report(const RunResult& result, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir);

    {
        std::ofstream out(fs::path(dir) / "frames.csv");
        if (!out) throw IoError("cannot write frames.csv under " + dir);
        out << kFramesHeader << '\n';
        for (const FrameRecord& r : result.records) {
            out << r.frame << ',' << to_string(r.lod) << ',' << to_string(r.method)
                << ',' << r.status << ',' << r.matches << ',' << r.correspondences
                << ',' << r.dropped;
            for (int i = 0; i < 3; ++i) out << ',' << fmt(r.position(i));
            for (int i = 0; i < 3; ++i) out << ',' << fmt(r.angles(i));
            for (int i = 0; i < 6; ++i) out << ',' << fmt(r.sigma(i));
            out << ',' << fmt(r.s0) << ',' << r.iterations << '\n';
        }
    }
    {
        std::ofstream out(fs::path(dir) / "report.csv");
        if (!out) throw IoError("cannot write report.csv under " + dir);
        out << kReportHeader << '\n';
        for (const MethodComparison& row : result.stats.rows) {
            out << to_string(row.method) << ',' << row.lod2.frames_ok << ','
                << row.lod2.frames_failed << ',' << row.lod3.frames_ok << ','
                << row.lod3.frames_failed << ',' << fmt(row.lod2.median_features)
                << ',' << fmt(row.lod3.median_features) << ',' << fmt(row.gain_features)
                << ',' << fmt(row.lod2.median_sigma_x) << ',' << fmt(row.lod3.median_sigma_x)
                << ',' << fmt(row.gain_sigma_x) << ',' << fmt(row.lod2.median_sigma_y)
                << ',' << fmt(row.lod3.median_sigma_y) << ',' << fmt(row.gain_sigma_y)
                << ',' << fmt(row.lod2.median_sigma_z) << ',' << fmt(row.lod3.median_sigma_z)
                << ',' << fmt(row.gain_sigma_z) << '\n';
        }
    }
    {
        std::ofstream out(fs::path(dir) / "summary.txt");
        if (!out) throw IoError("cannot write summary.txt under " + dir);
        for (const MethodComparison& row : result.stats.rows) {
            out << to_string(row.method) << ": features " << fmt(row.lod2.median_features)
                << " -> " << fmt(row.lod3.median_features) << " (gain "
                << fmt(row.gain_features) << "%), sigma_X " << fmt(row.lod2.median_sigma_x)
                << " -> " << fmt(row.lod3.median_sigma_x) << " (gain "
                << fmt(row.gain_sigma_x) << "%), ok " << row.lod2.frames_ok << '/'
                << row.lod3.frames_ok << ", failed " << row.lod2.frames_failed << '/'
                << row.lod3.frames_failed << '\n';
        }
    }
}

std::vector<FrameRecord> load_frames(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::string line;
    if (!std::getline(in, line) || line != kFramesHeader)
        throw ParseError(path + ": unexpected frames.csv header");

    std::vector<FrameRecord> out;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cols = split_csv(line);
        const std::string where = path + ":" + std::to_string(lineno);
        if (cols.size() != 21) throw ParseError(where + ": expected 21 columns");
        FrameRecord r;
        r.frame = static_cast<int>(parse_double(cols[0], where));
        r.lod = lod_from_string(cols[1]);
        r.method = match_method_from_string(cols[2]);
        r.status = cols[3];
        r.matches = static_cast<int>(parse_double(cols[4], where));
        r.correspondences = static_cast<int>(parse_double(cols[5], where));
        r.dropped = static_cast<int>(parse_double(cols[6], where));
        for (int i = 0; i < 3; ++i) r.position(i) = parse_double(cols[7 + i], where);
        for (int i = 0; i < 3; ++i) r.angles(i) = parse_double(cols[10 + i], where);
        for (int i = 0; i < 6; ++i) r.sigma(i) = parse_double(cols[13 + i], where);
        r.s0 = parse_double(cols[19], where);
        r.iterations = static_cast<int>(parse_double(cols[20], where));
        out.push_back(r);
    }
    return out;
}

AreaStats load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::string line;
    if (!std::getline(in, line) || line != kReportHeader)
        throw ParseError(path + ": unexpected report.csv header");

    AreaStats stats;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cols = split_csv(line);
        const std::string where = path + ":" + std::to_string(lineno);
        if (cols.size() != 17) throw ParseError(where + ": expected 17 columns");
        MethodComparison row;
        row.method = match_method_from_string(cols[0]);
        row.lod2.frames_ok = static_cast<int>(parse_double(cols[1], where));
        row.lod2.frames_failed = static_cast<int>(parse_double(cols[2], where));
        row.lod3.frames_ok = static_cast<int>(parse_double(cols[3], where));
        row.lod3.frames_failed = static_cast<int>(parse_double(cols[4], where));
        row.lod2.median_features = parse_double(cols[5], where);
        row.lod3.median_features = parse_double(cols[6], where);
        row.gain_features = parse_double(cols[7], where);
        row.lod2.median_sigma_x = parse_double(cols[8], where);
        row.lod3.median_sigma_x = parse_double(cols[9], where);
        row.gain_sigma_x = parse_double(cols[10], where);
        row.lod2.median_sigma_y = parse_double(cols[11], where);
        row.lod3.median_sigma_y = parse_double(cols[12], where);
        row.gain_sigma_y = parse_double(cols[13], where);
        row.lod2.median_sigma_z = parse_double(cols[14], where);
        row.lod3.median_sigma_z = parse_double(cols[15], where);
        row.gain_sigma_z = parse_double(cols[16], where);
        stats.rows.push_back(row);
    }
    return stats;
}

}  // namespace lodloc
