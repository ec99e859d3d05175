#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

namespace lodloc {

enum class LoD { LoD1, LoD2, LoD3 };

enum class SurfaceSemantics { Wall, Roof, Ground, Window, Door, Other };

const char* to_string(LoD lod);
const char* to_string(SurfaceSemantics s);
LoD lod_from_string(const std::string& s);
SurfaceSemantics semantics_from_string(const std::string& s);

/// Planar polygon with optional holes. Rings are ordered point lists in
/// meters; the outer ring is wound by the right-hand rule about the
/// outward-facing surface normal.
struct Surface {
    SurfaceSemantics semantics = SurfaceSemantics::Other;
    std::vector<Eigen::Vector3d> outer_ring;
    std::vector<std::vector<Eigen::Vector3d>> inner_rings;
};

struct Building {
    std::string id;
    std::vector<Surface> surfaces;
};

/// A polyhedral building model. Coordinates are metric and projected;
/// crs_note is free text carried through for reporting.
struct SemanticModel {
    std::vector<Building> buildings;
    LoD lod = LoD::LoD2;
    std::string crs_note;
};

/// Maximum point-to-plane distance for a ring to count as planar.
inline constexpr double kPlaneTolerance = 1e-3;

/// Checks model invariants: finite coordinates, unique building ids,
/// >= 4 surfaces per building, >= 3 non-collinear points and planarity
/// (within kPlaneTolerance) per ring. Throws ValidationError naming the
/// offending building/surface.
void validate_model(const SemanticModel& model);

/// Best-fit plane of a ring by Newell's method: unit normal and a point on
/// the plane. Throws ValidationError if the ring is degenerate.
struct RingPlane {
    Eigen::Vector3d normal;
    Eigen::Vector3d point;
};
RingPlane ring_plane(const std::vector<Eigen::Vector3d>& ring);

/// Loads a model file (grammar in docs/file_formats.md) and validates it.
/// `lod` overrides a missing header entry; a conflicting header entry is a
/// ValidationError.
SemanticModel load_model(const std::string& path, std::optional<LoD> lod = {});

void save_model(const SemanticModel& model, const std::string& path);

}  // namespace lodloc
