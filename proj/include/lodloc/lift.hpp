#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "lodloc/features.hpp"
#include "lodloc/mesh.hpp"
#include "lodloc/raycast.hpp"

namespace lodloc {

/// One observation for the resection: an image position in the real
/// image paired with the world point its virtual-image counterpart hit.
struct Correspondence2D3D {
    double x = 0;
    double y = 0;
    Eigen::Vector3d world = Eigen::Vector3d::Zero();
    double weight = 1.0;  // > 0
};

/// Interpolates the hit point of a buffer pixel from its triangle's
/// vertices: P = u*P1 + v*P2 + (1-u-v)*P3 in stored vertex order.
Eigen::Vector3d lift_pixel(const RaycastBuffers& buffers, const SemanticMesh& mesh,
                           int x, int y);

enum class WeightPolicy { Identity, InverseDistance };

struct CorrespondenceSet {
    std::vector<Correspondence2D3D> correspondences;
    int dropped = 0;  // matches whose virtual keypoint fell on a miss pixel
};

/// One correspondence per match whose virtual keypoint (rounded to the
/// nearest pixel) lands on a hit; the rest are counted, not errors.
CorrespondenceSet build_correspondences(const MatchSet& matches,
                                        const std::vector<Keypoint>& keypoints_real,
                                        const std::vector<Keypoint>& keypoints_virtual,
                                        const RaycastBuffers& buffers,
                                        const SemanticMesh& mesh,
                                        WeightPolicy policy = WeightPolicy::Identity);

/// Correspondence CSV: header + "x,y,X,Y,Z,weight" rows.
void save_correspondences(const std::vector<Correspondence2D3D>& list,
                          const std::string& path);
std::vector<Correspondence2D3D> load_correspondences(const std::string& path);

}  // namespace lodloc
