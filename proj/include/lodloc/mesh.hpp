#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lodloc/semantic_model.hpp"

namespace lodloc {

/// Provenance of one geometry-id slot in a composed scene.
struct BuildingRef {
    std::string id;
    LoD lod = LoD::LoD2;
};

/// Triangulated scene. tri_building[i] is the geometry id of triangle i
/// (an index into `buildings`); tri_normals[i] is the unit cross product
/// (P2-P1)x(P3-P1) of the triangle's vertices in stored order. The stored
/// vertex order preserves the winding of the source surface's outer ring;
/// barycentric lifting depends on that order.
struct SemanticMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;
    std::vector<std::uint32_t> tri_building;
    std::vector<SurfaceSemantics> tri_semantics;
    std::vector<Eigen::Vector3d> tri_normals;
    std::vector<BuildingRef> buildings;

    size_t triangle_count() const { return triangles.size(); }
    double triangle_area(size_t i) const;
};

/// Ear-clipping triangulation of every surface (outer ring minus holes),
/// on the ring's best-fit plane. Holes are joined to the outer ring with
/// bridge edges. Throws TriangulationError on self-intersecting rings.
SemanticMesh triangulate(const SemanticModel& model);

/// Merges several models into one scene. Geometry ids are remapped to be
/// globally unique; per-triangle LoD provenance is kept via `buildings`.
/// Two models contributing the same building id at the same LoD is a
/// DuplicateBuildingError; the same id at different LoDs is retained twice.
SemanticMesh compose_scene(const std::vector<SemanticModel>& models);

/// Per-building winding consistency report. Only buildings named in
/// `solid_ids` are checked (they are assumed closed); a triangle whose
/// normal points inward -- negative dot product with the vector from the
/// building centroid to the triangle centroid -- is listed. Report-only;
/// nothing is repaired.
struct WindingReport {
    struct Entry {
        std::uint32_t building_index;
        std::string building_id;
        bool checked = false;
        std::vector<std::uint32_t> inward_triangles;
    };
    std::vector<Entry> entries;

    bool consistent() const {
        for (const auto& e : entries) {
            if (e.checked && !e.inward_triangles.empty()) return false;
        }
        return true;
    }
};

WindingReport validate_winding(const SemanticMesh& mesh,
                               const std::vector<std::string>& solid_ids);

}  // namespace lodloc
