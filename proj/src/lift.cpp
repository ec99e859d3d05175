#include "lodloc/lift.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lodloc/errors.hpp"

namespace lodloc {

Eigen::Vector3d lift_pixel(const RaycastBuffers& buffers, const SemanticMesh& mesh,
                           int x, int y) {
    if (x < 0 || x >= buffers.width || y < 0 || y >= buffers.height)
        throw MissError("lift_pixel: (" + std::to_string(x) + ", " + std::to_string(y) +
                        ") outside the buffer");
    const size_t i = buffers.index(x, y);
    const std::uint32_t tri = buffers.primitive_id[i];
    if (tri == kMissId)
        throw MissError("lift_pixel: (" + std::to_string(x) + ", " + std::to_string(y) +
                        ") has no hit");

    const double u = buffers.bary_u[i];
    const double v = buffers.bary_v[i];
    double s = 1.0 - u - v;
    // The weights close to one by construction; squash sign noise only.
    if (s < 0 && s > -1e-9) s = 0;

    const auto& t = mesh.triangles[tri];
    return u * mesh.vertices[t[0]] + v * mesh.vertices[t[1]] + s * mesh.vertices[t[2]];
}

CorrespondenceSet build_correspondences(const MatchSet& matches,
                                        const std::vector<Keypoint>& keypoints_real,
                                        const std::vector<Keypoint>& keypoints_virtual,
                                        const RaycastBuffers& buffers,
                                        const SemanticMesh& mesh, WeightPolicy policy) {
    CorrespondenceSet out;
    out.correspondences.reserve(matches.matches.size());
    for (const Match& m : matches.matches) {
        const Keypoint& real_kp = keypoints_real[m.a];
        const Keypoint& virt_kp = keypoints_virtual[m.b];
        const int px = static_cast<int>(std::lround(virt_kp.x));
        const int py = static_cast<int>(std::lround(virt_kp.y));
        if (px < 0 || px >= buffers.width || py < 0 || py >= buffers.height ||
            !buffers.is_hit(px, py)) {
            ++out.dropped;
            continue;
        }
        Correspondence2D3D c;
        c.x = real_kp.x;
        c.y = real_kp.y;
        c.world = lift_pixel(buffers, mesh, px, py);
        c.weight = policy == WeightPolicy::InverseDistance
                       ? 1.0 / buffers.hit_distance[buffers.index(px, py)]
                       : 1.0;
        out.correspondences.push_back(c);
    }
    return out;
}

void save_correspondences(const std::vector<Correspondence2D3D>& list,
                          const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "x,y,X,Y,Z,weight\n";
    char buf[192];
    for (const Correspondence2D3D& c : list) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", c.x,
                      c.y, c.world.x(), c.world.y(), c.world.z(), c.weight);
        out << buf;
    }
}

std::vector<Correspondence2D3D> load_correspondences(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("x,y,X,Y,Z,weight", 0) != 0)
        throw ParseError(path + ": expected correspondence CSV header");

    std::vector<Correspondence2D3D> out;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        Correspondence2D3D c;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        if (!(row >> c.x >> c.y >> c.world.x() >> c.world.y() >> c.world.z() >>
              c.weight))
            throw ParseError(path + ":" + std::to_string(lineno) + ": malformed row");
        if (!(c.weight > 0))
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": weight must be positive");
        if (!c.world.allFinite())
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": world point must be finite");
        out.push_back(c);
    }
    return out;
}

}  // namespace lodloc
