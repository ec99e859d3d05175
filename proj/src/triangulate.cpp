#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lodloc/errors.hpp"
#include "lodloc/mesh.hpp"

namespace lodloc {

namespace {

struct Vertex2 {
    double x, y;
    std::uint32_t mesh_index;  // into the mesh vertex array
};

double cross2(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

double signed_area2(const std::vector<Vertex2>& ring) {
    double a = 0;
    for (size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
        a += cross2(ring[j].x, ring[j].y, ring[i].x, ring[i].y);
    }
    return a;
}

bool same_point(const Vertex2& a, const Vertex2& b) {
    return a.x == b.x && a.y == b.y;
}

// Strict segment crossing, shared endpoints excluded.
bool segments_cross(const Vertex2& p1, const Vertex2& p2, const Vertex2& q1,
                    const Vertex2& q2) {
    const double d1 = cross2(p2.x - p1.x, p2.y - p1.y, q1.x - p1.x, q1.y - p1.y);
    const double d2 = cross2(p2.x - p1.x, p2.y - p1.y, q2.x - p1.x, q2.y - p1.y);
    const double d3 = cross2(q2.x - q1.x, q2.y - q1.y, p1.x - q1.x, p1.y - q1.y);
    const double d4 = cross2(q2.x - q1.x, q2.y - q1.y, p2.x - q1.x, p2.y - q1.y);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
           ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

bool point_in_ring(const std::vector<Vertex2>& ring, double x, double y) {
    bool inside = false;
    for (size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
        if ((ring[i].y > y) != (ring[j].y > y)) {
            const double xi = ring[i].x + (y - ring[i].y) * (ring[j].x - ring[i].x) /
                                              (ring[j].y - ring[i].y);
            if (x < xi) inside = !inside;
        }
    }
    return inside;
}

// Point inside triangle, boundary included. Orientation-agnostic.
bool point_in_triangle(const Vertex2& a, const Vertex2& b, const Vertex2& c,
                       const Vertex2& p) {
    const double d1 = cross2(b.x - a.x, b.y - a.y, p.x - a.x, p.y - a.y);
    const double d2 = cross2(c.x - b.x, c.y - b.y, p.x - b.x, p.y - b.y);
    const double d3 = cross2(a.x - c.x, a.y - c.y, p.x - c.x, p.y - c.y);
    const bool has_neg = (d1 < 0) || (d2 < 0) || (d3 < 0);
    const bool has_pos = (d1 > 0) || (d2 > 0) || (d3 > 0);
    return !(has_neg && has_pos);
}

// Joins a hole into the polygon by duplicating a mutually visible vertex
// pair. Returns false if no visible bridge exists.
bool splice_hole(std::vector<Vertex2>& poly, const std::vector<Vertex2>& hole,
                 const std::vector<std::vector<Vertex2>>& pending_holes) {
    // hole vertex with maximum x (ties: maximum y) starts the bridge
    size_t hi = 0;
    for (size_t i = 1; i < hole.size(); ++i) {
        if (hole[i].x > hole[hi].x || (hole[i].x == hole[hi].x && hole[i].y > hole[hi].y)) {
            hi = i;
        }
    }
    const Vertex2& m = hole[hi];

    std::vector<size_t> candidates(poly.size());
    std::iota(candidates.begin(), candidates.end(), size_t{0});
    std::sort(candidates.begin(), candidates.end(), [&](size_t a, size_t b) {
        const double da = std::hypot(poly[a].x - m.x, poly[a].y - m.y);
        const double db = std::hypot(poly[b].x - m.x, poly[b].y - m.y);
        if (da != db) return da < db;
        return a < b;
    });

    auto blocked_by = [&](const std::vector<Vertex2>& ring, const Vertex2& v) {
        for (size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
            if (same_point(ring[i], m) || same_point(ring[j], m) ||
                same_point(ring[i], v) || same_point(ring[j], v)) {
                continue;
            }
            if (segments_cross(m, v, ring[j], ring[i])) return true;
        }
        return false;
    };

    for (size_t ci : candidates) {
        const Vertex2& v = poly[ci];
        if (same_point(v, m)) continue;
        if (blocked_by(poly, v) || blocked_by(hole, v)) continue;
        bool blocked = false;
        for (const auto& other : pending_holes) {
            if (blocked_by(other, v)) {
                blocked = true;
                break;
            }
        }
        if (blocked) continue;
        // the bridge midpoint must lie in the surface interior
        const Vertex2 mid{(m.x + v.x) / 2, (m.y + v.y) / 2, 0};
        if (!point_in_ring(poly, mid.x, mid.y)) continue;
        if (point_in_ring(hole, mid.x, mid.y)) continue;

        // poly[..ci], m, hole loop, m, poly[ci..]
        std::vector<Vertex2> merged;
        merged.reserve(poly.size() + hole.size() + 2);
        merged.insert(merged.end(), poly.begin(), poly.begin() + ci + 1);
        for (size_t k = 0; k < hole.size(); ++k) {
            merged.push_back(hole[(hi + k) % hole.size()]);
        }
        merged.push_back(hole[hi]);
        merged.insert(merged.end(), poly.begin() + ci, poly.end());
        poly = std::move(merged);
        return true;
    }
    return false;
}

// Ear clipping of a simple polygon (bridge duplicates allowed). `orient`
// is the sign of the polygon's signed area. Appends index triples.
void clip_ears(std::vector<Vertex2> poly, double orient,
               std::vector<std::array<std::uint32_t, 3>>& out,
               const std::string& where) {
    const auto emit = [&](const Vertex2& a, const Vertex2& b, const Vertex2& c) {
        const double area2 = std::abs(cross2(b.x - a.x, b.y - a.y, c.x - a.x, c.y - a.y));
        if (area2 > 1e-12) {
            out.push_back({a.mesh_index, b.mesh_index, c.mesh_index});
        }
    };

    while (poly.size() > 3) {
        bool clipped = false;
        for (size_t i = 0; i < poly.size(); ++i) {
            const size_t n = poly.size();
            const Vertex2& prev = poly[(i + n - 1) % n];
            const Vertex2& cur = poly[i];
            const Vertex2& next = poly[(i + 1) % n];
            const double a2 =
                cross2(cur.x - prev.x, cur.y - prev.y, next.x - cur.x, next.y - cur.y);
            if (a2 * orient < 0) continue;  // reflex corner
            bool contains = false;
            for (size_t k = 0; k < n && !contains; ++k) {
                const Vertex2& p = poly[k];
                if (k == (i + n - 1) % n || k == i || k == (i + 1) % n) continue;
                if (same_point(p, prev) || same_point(p, cur) || same_point(p, next)) {
                    continue;
                }
                contains = point_in_triangle(prev, cur, next, p);
            }
            if (contains) continue;
            emit(prev, cur, next);
            poly.erase(poly.begin() + static_cast<long>(i));
            clipped = true;
            break;
        }
        if (!clipped) {
            throw TriangulationError(where + ": no ear found (self-intersecting ring?)");
        }
    }
    if (poly.size() == 3) emit(poly[0], poly[1], poly[2]);
}

}  // namespace

SemanticMesh triangulate(const SemanticModel& model) {
    SemanticMesh mesh;
    for (const auto& b : model.buildings) {
        mesh.buildings.push_back(BuildingRef{b.id, model.lod});
    }

    for (std::uint32_t bi = 0; bi < model.buildings.size(); ++bi) {
        const Building& b = model.buildings[bi];
        for (size_t si = 0; si < b.surfaces.size(); ++si) {
            const Surface& s = b.surfaces[si];
            const std::string where =
                "building '" + b.id + "' surface " + std::to_string(si);

            const RingPlane plane = ring_plane(s.outer_ring);
            // in-plane basis; (u, v, normal) is right-handed so a ring that is
            // counter-clockwise about the normal has positive signed area
            const Eigen::Vector3d n = plane.normal;
            Eigen::Vector3d ref = Eigen::Vector3d::UnitX();
            if (std::abs(n.y()) <= std::abs(n.x()) && std::abs(n.y()) <= std::abs(n.z())) {
                ref = Eigen::Vector3d::UnitY();
            } else if (std::abs(n.z()) <= std::abs(n.x()) &&
                       std::abs(n.z()) <= std::abs(n.y())) {
                ref = Eigen::Vector3d::UnitZ();
            }
            const Eigen::Vector3d u = (ref - n * ref.dot(n)).normalized();
            const Eigen::Vector3d v = n.cross(u);

            const auto project_ring = [&](const std::vector<Eigen::Vector3d>& ring) {
                std::vector<Vertex2> out;
                out.reserve(ring.size());
                for (const auto& p : ring) {
                    const std::uint32_t idx = static_cast<std::uint32_t>(mesh.vertices.size());
                    mesh.vertices.push_back(p);
                    const Eigen::Vector3d d = p - plane.point;
                    out.push_back(Vertex2{d.dot(u), d.dot(v), idx});
                }
                return out;
            };

            std::vector<Vertex2> poly = project_ring(s.outer_ring);
            const double outer_area2 = signed_area2(poly);
            if (outer_area2 == 0) {
                throw TriangulationError(where + ": outer ring has zero area");
            }
            const double orient = outer_area2 > 0 ? 1.0 : -1.0;

            std::vector<std::vector<Vertex2>> holes;
            for (const auto& inner : s.inner_rings) {
                std::vector<Vertex2> h = project_ring(inner);
                // traverse holes opposite to the outer ring
                if (signed_area2(h) * orient > 0) std::reverse(h.begin(), h.end());
                holes.push_back(std::move(h));
            }
            // rightmost holes first, so eastward bridges see merged geometry only
            std::sort(holes.begin(), holes.end(), [](const auto& a, const auto& b) {
                const auto max_x = [](const std::vector<Vertex2>& r) {
                    double m = -std::numeric_limits<double>::infinity();
                    for (const auto& p : r) m = std::max(m, p.x);
                    return m;
                };
                return max_x(a) > max_x(b);
            });
            for (size_t hi = 0; hi < holes.size(); ++hi) {
                std::vector<std::vector<Vertex2>> pending(holes.begin() + hi + 1, holes.end());
                if (!splice_hole(poly, holes[hi], pending)) {
                    throw TriangulationError(where + ": cannot connect inner ring " +
                                             std::to_string(hi) + " to the outer ring");
                }
            }

            std::vector<std::array<std::uint32_t, 3>> tris;
            clip_ears(std::move(poly), orient, tris, where);

            for (const auto& t : tris) {
                const Eigen::Vector3d& p1 = mesh.vertices[t[0]];
                const Eigen::Vector3d& p2 = mesh.vertices[t[1]];
                const Eigen::Vector3d& p3 = mesh.vertices[t[2]];
                const Eigen::Vector3d cr = (p2 - p1).cross(p3 - p1);
                const double len = cr.norm();
                if (len < 1e-14) continue;
                mesh.triangles.push_back(t);
                mesh.tri_building.push_back(bi);
                mesh.tri_semantics.push_back(s.semantics);
                mesh.tri_normals.push_back(cr / len);
            }
        }
    }
    return mesh;
}

}  // namespace lodloc
