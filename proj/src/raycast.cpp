#include "lodloc/raycast.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "lodloc/errors.hpp"

namespace lodloc {
namespace {

constexpr double kRayEpsilon = 1e-9;

struct Slab {
    Eigen::Vector3d lo, hi;
};

Slab triangle_bounds(const SemanticMesh& mesh, std::uint32_t tri) {
    const auto& t = mesh.triangles[tri];
    Slab s{mesh.vertices[t[0]], mesh.vertices[t[0]]};
    for (int i = 1; i < 3; ++i) {
        s.lo = s.lo.cwiseMin(mesh.vertices[t[i]]);
        s.hi = s.hi.cwiseMax(mesh.vertices[t[i]]);
    }
    return s;
}

Eigen::Vector3d triangle_centroid(const SemanticMesh& mesh, std::uint32_t tri) {
    const auto& t = mesh.triangles[tri];
    return (mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]]) / 3.0;
}

// Slab test against the node box; returns false when the box cannot
// contain a hit closer than t_max.
bool box_hit(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, const Ray& ray,
             const Eigen::Vector3d& inv_dir, double t_max) {
    double t0 = 0.0;
    double t1 = t_max;
    for (int a = 0; a < 3; ++a) {
        double near = (lo[a] - ray.origin[a]) * inv_dir[a];
        double far = (hi[a] - ray.origin[a]) * inv_dir[a];
        if (near > far) std::swap(near, far);
        t0 = std::max(t0, near);
        t1 = std::min(t1, far);
        if (t0 > t1) return false;
    }
    return true;
}

}  // namespace

size_t RaycastBuffers::hit_count() const {
    size_t n = 0;
    for (std::uint32_t id : primitive_id)
        if (id != kMissId) ++n;
    return n;
}

Bvh::Bvh(const SemanticMesh& mesh) : mesh_(&mesh) {
    std::vector<std::uint32_t> tris(mesh.triangles.size());
    for (std::uint32_t i = 0; i < tris.size(); ++i) tris[i] = i;
    order_.reserve(tris.size());
    if (!tris.empty()) {
        nodes_.reserve(2 * tris.size());
        build(tris, 0, tris.size());
    }
}

std::int32_t Bvh::build(std::vector<std::uint32_t>& tris, size_t begin, size_t end) {
    Node node;
    node.lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    node.hi = -node.lo;
    Eigen::Vector3d clo = node.lo, chi = node.hi;
    for (size_t i = begin; i < end; ++i) {
        Slab s = triangle_bounds(*mesh_, tris[i]);
        node.lo = node.lo.cwiseMin(s.lo);
        node.hi = node.hi.cwiseMax(s.hi);
        Eigen::Vector3d c = triangle_centroid(*mesh_, tris[i]);
        clo = clo.cwiseMin(c);
        chi = chi.cwiseMax(c);
    }

    const size_t count = end - begin;
    Eigen::Vector3d extent = chi - clo;
    int axis = 0;
    extent.maxCoeff(&axis);
    if (count <= 4 || extent[axis] <= 0.0) {
        node.first = static_cast<std::uint32_t>(order_.size());
        node.count = static_cast<std::uint32_t>(count);
        for (size_t i = begin; i < end; ++i) order_.push_back(tris[i]);
        nodes_.push_back(node);
        return static_cast<std::int32_t>(nodes_.size() - 1);
    }

    // Median split on the widest centroid axis; the index tie-break keeps
    // the layout reproducible.
    std::sort(tris.begin() + begin, tris.begin() + end,
              [&](std::uint32_t a, std::uint32_t b) {
                  double ca = triangle_centroid(*mesh_, a)[axis];
                  double cb = triangle_centroid(*mesh_, b)[axis];
                  return ca != cb ? ca < cb : a < b;
              });
    const size_t mid = begin + count / 2;

    const std::int32_t self = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(node);
    const std::int32_t left = build(tris, begin, mid);
    const std::int32_t right = build(tris, mid, end);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
}

Bvh::Hit Bvh::intersect(const Ray& ray) const {
    Hit best;
    if (nodes_.empty()) return best;

    const Eigen::Vector3d inv_dir = ray.direction.cwiseInverse();
    std::int32_t stack[64];
    int top = 0;
    stack[top++] = 0;

    while (top > 0) {
        const Node& node = nodes_[stack[--top]];
        if (!box_hit(node.lo, node.hi, ray, inv_dir, best.t)) continue;
        if (node.count == 0) {
            stack[top++] = node.right;
            stack[top++] = node.left;
            continue;
        }
        for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
            const std::uint32_t tri = order_[i];
            const auto& tv = mesh_->triangles[tri];
            const Eigen::Vector3d& p0 = mesh_->vertices[tv[0]];
            const Eigen::Vector3d edge1 = mesh_->vertices[tv[1]] - p0;
            const Eigen::Vector3d edge2 = mesh_->vertices[tv[2]] - p0;

            const Eigen::Vector3d pvec = ray.direction.cross(edge2);
            const double det = edge1.dot(pvec);
            if (std::abs(det) < kRayEpsilon) continue;  // parallel, front or back
            const double inv_det = 1.0 / det;

            const Eigen::Vector3d tvec = ray.origin - p0;
            const double u = tvec.dot(pvec) * inv_det;
            if (u < 0.0 || u > 1.0) continue;
            const Eigen::Vector3d qvec = tvec.cross(edge1);
            const double v = ray.direction.dot(qvec) * inv_det;
            if (v < 0.0 || u + v > 1.0) continue;
            const double t = edge2.dot(qvec) * inv_det;
            if (t <= kRayEpsilon) continue;

            if (t < best.t || (t == best.t && tri < best.triangle)) {
                best.t = t;
                best.triangle = tri;
                // The intersection weights come out attached to the second
                // and third stored vertex; our convention leads with the
                // first.
                best.u = 1.0 - u - v;
                best.v = u;
            }
        }
    }
    return best;
}

namespace {

void cast_rows(const SemanticMesh& mesh, const Bvh& bvh, const CameraPose& pose,
               const CameraIntrinsics& k, int y_begin, int y_end,
               RaycastBuffers& out) {
    for (int y = y_begin; y < y_end; ++y) {
        for (int x = 0; x < k.width; ++x) {
            const Ray ray = pixel_ray(pose, k, x, y);
            const Bvh::Hit hit = bvh.intersect(ray);
            const size_t i = out.index(x, y);
            if (!hit.ok()) continue;
            out.hit_distance[i] = hit.t;
            out.geometry_id[i] = mesh.tri_building[hit.triangle];
            out.primitive_id[i] = hit.triangle;
            out.normal[i] = mesh.tri_normals[hit.triangle];
            out.bary_u[i] = hit.u;
            out.bary_v[i] = hit.v;
        }
    }
}

}  // namespace

RaycastBuffers cast_scene(const SemanticMesh& mesh, const CameraPose& pose,
                          const CameraIntrinsics& k, int workers) {
    if (k.width <= 0 || k.height <= 0)
        throw ValidationError("cast_scene: empty image extent");

    RaycastBuffers out;
    out.width = k.width;
    out.height = k.height;
    const size_t n = static_cast<size_t>(k.width) * k.height;
    out.hit_distance.assign(n, std::numeric_limits<double>::infinity());
    out.geometry_id.assign(n, kMissId);
    out.primitive_id.assign(n, kMissId);
    out.normal.assign(n, Eigen::Vector3d::Zero());
    out.bary_u.assign(n, 0.0);
    out.bary_v.assign(n, 0.0);

    const Bvh bvh(mesh);

    if (workers <= 0) {
        unsigned hc = std::thread::hardware_concurrency();
        workers = hc == 0 ? 1 : static_cast<int>(hc);
    }
    workers = std::min(workers, k.height);

    if (workers <= 1) {
        cast_rows(mesh, bvh, pose, k, 0, k.height, out);
        return out;
    }

    // Each worker owns a contiguous band of rows, so the result does not
    // depend on the worker count.
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const int rows_per = (k.height + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int y0 = w * rows_per;
        const int y1 = std::min(k.height, y0 + rows_per);
        if (y0 >= y1) break;
        pool.emplace_back(cast_rows, std::cref(mesh), std::cref(bvh), std::cref(pose),
                          std::cref(k), y0, y1, std::ref(out));
    }
    for (auto& t : pool) t.join();
    return out;
}

ColorImage render_normal_image(const RaycastBuffers& buffers) {
    ColorImage img(buffers.width, buffers.height);
    for (int y = 0; y < buffers.height; ++y) {
        for (int x = 0; x < buffers.width; ++x) {
            const size_t i = buffers.index(x, y);
            if (buffers.primitive_id[i] == kMissId) continue;  // stays black
            const Eigen::Vector3d& n = buffers.normal[i];
            std::uint8_t* px = img.pixel(x, y);
            for (int c = 0; c < 3; ++c)
                px[c] = static_cast<std::uint8_t>(
                    std::lround(std::min(1.0, std::abs(n[c])) * 255.0));
        }
    }
    return img;
}

namespace {

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_grid_header(std::ofstream& out, const char* type, int width, int height,
                       int channels) {
    out << "grid " << type << ' ' << width << ' ' << height << ' ' << channels
        << '\n';
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    return in;
}

struct GridHeader {
    std::string type;
    int width = 0;
    int height = 0;
    int channels = 0;
};

GridHeader read_grid_header(std::ifstream& in, const std::string& name) {
    std::string magic;
    GridHeader h;
    if (!(in >> magic >> h.type >> h.width >> h.height >> h.channels) ||
        magic != "grid" || h.width <= 0 || h.height <= 0 || h.channels <= 0)
        throw ParseError(name + ": malformed grid header");
    return h;
}

double read_double_token(std::ifstream& in, const std::string& name) {
    std::string tok;
    if (!(in >> tok)) throw ParseError(name + ": truncated grid");
    char* end = nullptr;
    // strtod handles the "inf" the writer emits for misses.
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        throw ParseError(name + ": bad value '" + tok + "'");
    return v;
}

std::uint32_t read_u32_token(std::ifstream& in, const std::string& name) {
    std::string tok;
    if (!(in >> tok)) throw ParseError(name + ": truncated grid");
    char* end = nullptr;
    const unsigned long v = std::strtoul(tok.c_str(), &end, 10);
    if (end == tok.c_str() || *end != '\0' || v > kMissId)
        throw ParseError(name + ": bad value '" + tok + "'");
    return static_cast<std::uint32_t>(v);
}

}  // namespace

void dump_buffers(const RaycastBuffers& buffers, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir);
    const fs::path base(dir);

    {
        auto out = open_out(base / "distance.grid");
        write_grid_header(out, "f64", buffers.width, buffers.height, 1);
        for (int y = 0; y < buffers.height; ++y) {
            for (int x = 0; x < buffers.width; ++x) {
                if (x) out << ' ';
                out << format_value(buffers.hit_distance[buffers.index(x, y)]);
            }
            out << '\n';
        }
    }
    {
        auto out = open_out(base / "geometry_id.grid");
        write_grid_header(out, "u32", buffers.width, buffers.height, 1);
        for (int y = 0; y < buffers.height; ++y) {
            for (int x = 0; x < buffers.width; ++x) {
                if (x) out << ' ';
                out << buffers.geometry_id[buffers.index(x, y)];
            }
            out << '\n';
        }
    }
    {
        auto out = open_out(base / "primitive_id.grid");
        write_grid_header(out, "u32", buffers.width, buffers.height, 1);
        for (int y = 0; y < buffers.height; ++y) {
            for (int x = 0; x < buffers.width; ++x) {
                if (x) out << ' ';
                out << buffers.primitive_id[buffers.index(x, y)];
            }
            out << '\n';
        }
    }
    {
        auto out = open_out(base / "normal.grid");
        write_grid_header(out, "f64", buffers.width, buffers.height, 3);
        for (int y = 0; y < buffers.height; ++y) {
            for (int x = 0; x < buffers.width; ++x) {
                const Eigen::Vector3d& n = buffers.normal[buffers.index(x, y)];
                if (x) out << ' ';
                out << format_value(n.x()) << ' ' << format_value(n.y()) << ' '
                    << format_value(n.z());
            }
            out << '\n';
        }
    }
    {
        auto out = open_out(base / "barycentric.grid");
        write_grid_header(out, "f64", buffers.width, buffers.height, 2);
        for (int y = 0; y < buffers.height; ++y) {
            for (int x = 0; x < buffers.width; ++x) {
                const size_t i = buffers.index(x, y);
                if (x) out << ' ';
                out << format_value(buffers.bary_u[i]) << ' '
                    << format_value(buffers.bary_v[i]);
            }
            out << '\n';
        }
    }
    save_ppm(render_normal_image(buffers), (base / "normal.ppm").string());
}

RaycastBuffers load_buffers(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path base(dir);
    RaycastBuffers out;

    auto check = [&](const GridHeader& h, const std::string& name,
                     const std::string& type, int channels) {
        if (h.type != type || h.channels != channels)
            throw ParseError(name + ": expected " + type + " x" +
                             std::to_string(channels));
        if (out.width == 0) {
            out.width = h.width;
            out.height = h.height;
        } else if (h.width != out.width || h.height != out.height) {
            throw ParseError(name + ": extent differs from the other channels");
        }
    };

    {
        auto in = open_in(base / "distance.grid");
        auto h = read_grid_header(in, "distance.grid");
        check(h, "distance.grid", "f64", 1);
        out.hit_distance.resize(static_cast<size_t>(h.width) * h.height);
        for (auto& v : out.hit_distance) v = read_double_token(in, "distance.grid");
    }
    {
        auto in = open_in(base / "geometry_id.grid");
        auto h = read_grid_header(in, "geometry_id.grid");
        check(h, "geometry_id.grid", "u32", 1);
        out.geometry_id.resize(static_cast<size_t>(h.width) * h.height);
        for (auto& v : out.geometry_id) v = read_u32_token(in, "geometry_id.grid");
    }
    {
        auto in = open_in(base / "primitive_id.grid");
        auto h = read_grid_header(in, "primitive_id.grid");
        check(h, "primitive_id.grid", "u32", 1);
        out.primitive_id.resize(static_cast<size_t>(h.width) * h.height);
        for (auto& v : out.primitive_id) v = read_u32_token(in, "primitive_id.grid");
    }
    {
        auto in = open_in(base / "normal.grid");
        auto h = read_grid_header(in, "normal.grid");
        check(h, "normal.grid", "f64", 3);
        out.normal.resize(static_cast<size_t>(h.width) * h.height);
        for (auto& n : out.normal) {
            n.x() = read_double_token(in, "normal.grid");
            n.y() = read_double_token(in, "normal.grid");
            n.z() = read_double_token(in, "normal.grid");
        }
    }
    {
        auto in = open_in(base / "barycentric.grid");
        auto h = read_grid_header(in, "barycentric.grid");
        check(h, "barycentric.grid", "f64", 2);
        const size_t n = static_cast<size_t>(h.width) * h.height;
        out.bary_u.resize(n);
        out.bary_v.resize(n);
        for (size_t i = 0; i < n; ++i) {
            out.bary_u[i] = read_double_token(in, "barycentric.grid");
            out.bary_v[i] = read_double_token(in, "barycentric.grid");
        }
    }
    return out;
}

}  // namespace lodloc
