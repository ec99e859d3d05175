#include "lodloc/mesh.hpp"

#include <Eigen/Geometry>
#include <set>

#include "lodloc/errors.hpp"

namespace lodloc {

double SemanticMesh::triangle_area(size_t i) const {
    const auto& t = triangles[i];
    const Eigen::Vector3d& a = vertices[t[0]];
    const Eigen::Vector3d& b = vertices[t[1]];
    const Eigen::Vector3d& c = vertices[t[2]];
    return 0.5 * (b - a).cross(c - a).norm();
}

SemanticMesh compose_scene(const std::vector<SemanticModel>& models) {
    std::set<std::pair<std::string, LoD>> seen;
    for (const auto& model : models) {
        for (const auto& b : model.buildings) {
            if (!seen.insert({b.id, model.lod}).second) {
                throw DuplicateBuildingError("building '" + b.id + "' appears twice at " +
                                             to_string(model.lod));
            }
        }
    }

    SemanticMesh scene;
    for (const auto& model : models) {
        const SemanticMesh part = triangulate(model);
        const std::uint32_t vertex_base = static_cast<std::uint32_t>(scene.vertices.size());
        const std::uint32_t building_base =
            static_cast<std::uint32_t>(scene.buildings.size());
        scene.vertices.insert(scene.vertices.end(), part.vertices.begin(),
                              part.vertices.end());
        scene.buildings.insert(scene.buildings.end(), part.buildings.begin(),
                               part.buildings.end());
        for (size_t i = 0; i < part.triangles.size(); ++i) {
            const auto& t = part.triangles[i];
            scene.triangles.push_back(
                {t[0] + vertex_base, t[1] + vertex_base, t[2] + vertex_base});
            scene.tri_building.push_back(part.tri_building[i] + building_base);
            scene.tri_semantics.push_back(part.tri_semantics[i]);
            scene.tri_normals.push_back(part.tri_normals[i]);
        }
    }
    return scene;
}

WindingReport validate_winding(const SemanticMesh& mesh,
                               const std::vector<std::string>& solid_ids) {
    const std::set<std::string> solids(solid_ids.begin(), solid_ids.end());
    WindingReport report;

    for (std::uint32_t bi = 0; bi < mesh.buildings.size(); ++bi) {
        WindingReport::Entry entry;
        entry.building_index = bi;
        entry.building_id = mesh.buildings[bi].id;
        entry.checked = solids.count(mesh.buildings[bi].id) > 0;
        if (entry.checked) {
            // area-weighted centroid of the building's triangles
            Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
            double total_area = 0;
            for (size_t ti = 0; ti < mesh.triangles.size(); ++ti) {
                if (mesh.tri_building[ti] != bi) continue;
                const auto& t = mesh.triangles[ti];
                const Eigen::Vector3d c =
                    (mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]]) / 3.0;
                const double a = mesh.triangle_area(ti);
                centroid += a * c;
                total_area += a;
            }
            if (total_area > 0) {
                centroid /= total_area;
                for (size_t ti = 0; ti < mesh.triangles.size(); ++ti) {
                    if (mesh.tri_building[ti] != bi) continue;
                    const auto& t = mesh.triangles[ti];
                    const Eigen::Vector3d c = (mesh.vertices[t[0]] + mesh.vertices[t[1]] +
                                               mesh.vertices[t[2]]) /
                                              3.0;
                    if (mesh.tri_normals[ti].dot(c - centroid) < -1e-12) {
                        entry.inward_triangles.push_back(static_cast<std::uint32_t>(ti));
                    }
                }
            }
        }
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace lodloc
