#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "lodloc/camera.hpp"
#include "lodloc/image.hpp"
#include "lodloc/mesh.hpp"

namespace lodloc {

/// Miss sentinel for the id buffers.
inline constexpr std::uint32_t kMissId = std::numeric_limits<std::uint32_t>::max();

/// Per-pixel ray-casting results. For hit pixels: hit_distance is the
/// metric distance from the ray origin to the hit point; (u, v) are the
/// barycentric weights of the hit triangle's first and second stored
/// vertex, the third being s = 1 - u - v. Misses carry +inf distance,
/// kMissId ids and a zero normal.
struct RaycastBuffers {
    int width = 0;
    int height = 0;
    std::vector<double> hit_distance;
    std::vector<std::uint32_t> geometry_id;
    std::vector<std::uint32_t> primitive_id;
    std::vector<Eigen::Vector3d> normal;
    std::vector<double> bary_u;
    std::vector<double> bary_v;

    size_t index(int x, int y) const { return static_cast<size_t>(y) * width + x; }
    bool is_hit(int x, int y) const { return primitive_id[index(x, y)] != kMissId; }
    size_t hit_count() const;
};

/// Axis-aligned bounding-box hierarchy over mesh triangles, median split.
class Bvh {
public:
    explicit Bvh(const SemanticMesh& mesh);

    struct Hit {
        double t = std::numeric_limits<double>::infinity();
        std::uint32_t triangle = kMissId;
        double u = 0;  // weight of the first stored vertex
        double v = 0;  // weight of the second stored vertex
        bool ok() const { return triangle != kMissId; }
    };

    /// Nearest intersection with t > 0; equal-t ties go to the lowest
    /// triangle index. Backfaces are hit (open facades are viewed from
    /// either side).
    Hit intersect(const Ray& ray) const;

private:
    struct Node {
        Eigen::Vector3d lo, hi;
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::uint32_t first = 0;
        std::uint32_t count = 0;  // leaf iff count > 0
    };

    const SemanticMesh* mesh_;
    std::vector<Node> nodes_;
    std::vector<std::uint32_t> order_;

    std::int32_t build(std::vector<std::uint32_t>& tris, size_t begin, size_t end);
};

/// Casts one ray per pixel center and records the nearest hit. `workers`
/// <= 0 uses the hardware thread count; output is bitwise independent of
/// the worker count.
RaycastBuffers cast_scene(const SemanticMesh& mesh, const CameraPose& pose,
                          const CameraIntrinsics& k, int workers = 0);

/// Componentwise absolute value of the hit normal scaled to [0, 255];
/// opposite normals get the same color. Background is black, which no
/// unit normal can produce.
ColorImage render_normal_image(const RaycastBuffers& buffers);

/// One file per channel under `dir`: normal.ppm plus text grids
/// (distance.grid, geometry_id.grid, primitive_id.grid, normal.grid,
/// barycentric.grid). Format documented in docs/file_formats.md.
void dump_buffers(const RaycastBuffers& buffers, const std::string& dir);
RaycastBuffers load_buffers(const std::string& dir);

}  // namespace lodloc
