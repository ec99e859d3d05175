#pragma once

// Shared scene builders and scratch-space plumbing for the test binaries.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "lodloc/camera.hpp"
#include "lodloc/features.hpp"
#include "lodloc/image.hpp"
#include "lodloc/mesh.hpp"
#include "lodloc/raycast.hpp"
#include "lodloc/resection.hpp"
#include "lodloc/semantic_model.hpp"

namespace testutil {

inline std::string fixture_path(const std::string& name) {
    return std::string(LODLOC_FIXTURE_DIR) + "/" + name;
}

/// Fresh per-test scratch directory (recreated on every call).
inline std::string scratch_dir(const std::string& name) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "lodloc_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

/// NaN-tolerant equality for round-trip comparisons.
inline bool same_value(double a, double b) {
    if (std::isnan(a) && std::isnan(b)) return true;
    return a == b;
}

inline lodloc::CameraIntrinsics test_intrinsics(int w = 160, int h = 120,
                                                double z = 140) {
    lodloc::CameraIntrinsics k;
    k.width = w;
    k.height = h;
    k.principal_distance = z;
    k.x0 = (w - 1) / 2.0;
    k.y0 = (h - 1) / 2.0;
    return k;
}

/// One rectangular surface from explicit corner points.
inline lodloc::Surface quad_surface(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                    const Eigen::Vector3d& c, const Eigen::Vector3d& d,
                                    lodloc::SurfaceSemantics sem =
                                        lodloc::SurfaceSemantics::Wall) {
    lodloc::Surface s;
    s.semantics = sem;
    s.outer_ring = {a, b, c, d};
    return s;
}

/// A single frontal wall at z = depth spanning +-half in x and y, facing
/// the origin (normal -Z), wrapped in a one-building model. With an
/// identity pose at the origin the camera looks straight at it.
inline lodloc::SemanticModel frontal_plane_model(double depth, double half,
                                                 const std::string& id = "plane") {
    lodloc::SemanticModel m;
    m.lod = lodloc::LoD::LoD2;
    lodloc::Building b;
    b.id = id;
    // wound so the normal is -Z (toward the camera at the origin)
    b.surfaces.push_back(quad_surface({-half, -half, depth}, {-half, half, depth},
                                      {half, half, depth}, {half, -half, depth}));
    // three dummy far-away faces to satisfy the >= 4 surfaces invariant,
    // well outside any test frustum
    const double far = depth + 1000;
    b.surfaces.push_back(quad_surface({-1, -1, far}, {1, -1, far}, {1, 1, far},
                                      {-1, 1, far}));
    b.surfaces.push_back(quad_surface({-1, -1, far + 1}, {1, -1, far + 1},
                                      {1, 1, far + 1}, {-1, 1, far + 1}));
    b.surfaces.push_back(quad_surface({-1, -1, far + 2}, {1, -1, far + 2},
                                      {1, 1, far + 2}, {-1, 1, far + 2}));
    m.buildings.push_back(b);
    return m;
}

/// Grid of bright squares on a dark background. Square corners are
/// analytic and FAST-detectable (unlike ideal checkerboard X-junctions,
/// where no contiguous circle arc exists). Returns the corner positions.
inline lodloc::GrayImage block_grid_image(int width, int height, int block,
                                          int pitch, int margin,
                                          std::vector<Eigen::Vector2d>* corners = nullptr) {
    lodloc::GrayImage img(width, height, 30);
    for (int by = margin; by + block < height - margin; by += pitch) {
        for (int bx = margin; bx + block < width - margin; bx += pitch) {
            for (int y = by; y < by + block; ++y)
                for (int x = bx; x < bx + block; ++x) img.at(x, y) = 220;
            if (corners) {
                corners->push_back({bx - 0.5, by - 0.5});
                corners->push_back({bx + block - 0.5, by - 0.5});
                corners->push_back({bx - 0.5, by + block - 0.5});
                corners->push_back({bx + block - 0.5, by + block - 0.5});
            }
        }
    }
    return img;
}

inline lodloc::BinaryDescriptor random_descriptor(std::mt19937& rng) {
    lodloc::BinaryDescriptor d;
    for (auto& word : d.bits)
        word = (static_cast<std::uint64_t>(rng()) << 32) | rng();
    return d;
}

/// Synthetic resection problem: a known pose observing points spread over
/// two wall-like planes (non-coplanar by construction).
struct SyntheticResection {
    lodloc::ResectionProblem problem;
    lodloc::CameraPose truth;
};

inline SyntheticResection make_resection_problem(std::mt19937& rng, int n_points,
                                                 double pixel_noise = 0.0) {
    using Eigen::Vector3d;
    std::uniform_real_distribution<double> u01(0, 1);
    std::normal_distribution<double> gauss(0, 1);

    SyntheticResection out;
    out.problem.intrinsics = test_intrinsics(640, 480, 800);

    const Vector3d position(u01(rng) * 10 - 5, u01(rng) * 10 - 5, u01(rng) * 4);
    const double omega = (u01(rng) - 0.5) * 0.4;
    const double phi = (u01(rng) - 0.5) * 0.4;
    const double kappa = (u01(rng) - 0.5) * 2 * 3.0;
    out.truth = lodloc::CameraPose::from_angles(position, omega, phi, kappa);
    out.problem.approx_position = position;

    const Vector3d forward = out.truth.forward();
    const Vector3d right = out.truth.rotation.row(0).transpose();
    const Vector3d down = out.truth.rotation.row(1).transpose();

    // two facades: frontal-ish planes at different depths, tilted against
    // each other so the point cloud is never coplanar
    int placed = 0;
    while (placed < n_points) {
        const int facade = placed % 2;
        const double depth = facade == 0 ? 20.0 : 35.0;
        const double tilt = facade == 0 ? 0.35 : -0.35;
        const double a = (u01(rng) - 0.5) * 1.2;  // frustum fractions
        const double b = (u01(rng) - 0.5) * 1.2;
        Vector3d p = position + forward * depth + right * (a * depth * 0.7) +
                     down * (b * depth * 0.5);
        p += right * 0.0 + forward * (tilt * a * depth);  // slanted facade
        const Eigen::Vector2d px =
            lodloc::project(out.truth, out.problem.intrinsics, p);
        if (px.x() < 5 || px.x() > 635 || px.y() < 5 || px.y() > 475) continue;

        lodloc::Correspondence2D3D c;
        c.world = p;
        c.x = px.x() + pixel_noise * gauss(rng);
        c.y = px.y() + pixel_noise * gauss(rng);
        out.problem.correspondences.push_back(c);
        ++placed;
    }
    return out;
}

/// Rotation distance in radians (geodesic angle between two rotations).
inline double rotation_angle(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
    const double c = ((a * b.transpose()).trace() - 1.0) / 2.0;
    return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace testutil
