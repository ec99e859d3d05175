#include "lodloc/trajectory.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "lodloc/errors.hpp"

namespace lodloc {

int GnssTrack::find_frame(int frame) const {
    for (size_t i = 0; i < points.size(); ++i) {
        if (points[i].frame == frame) return static_cast<int>(i);
    }
    return -1;
}

GnssTrack load_track(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    GnssTrack track;
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        const size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::istringstream ls(raw);
        GnssTrack::Point p;
        if (!(ls >> p.frame)) continue;
        if (!(ls >> p.antenna.x() >> p.antenna.y() >> p.antenna.z())) {
            throw ParseError(path + ":" + std::to_string(number) +
                             ": expected 'frame X Y Z'");
        }
        track.points.push_back(p);
    }
    return track;
}

CameraPose build_lookat_pose(const GnssTrack& track, size_t index,
                             const AngularOffsets& offsets, double r_gnss) {
    if (index + 1 >= track.points.size()) {
        throw LastFrameError("frame index " + std::to_string(index) +
                             " has no successor in the track");
    }
    const Eigen::Vector3d height(0, 0, track.antenna_to_camera_height);
    const Eigen::Vector3d camera = track.points[index].antenna + height;
    Eigen::Vector3d target = track.points[index + 1].antenna + height;

    const double r = r_gnss > 0 ? r_gnss : (target - camera).norm();
    constexpr double kDegToMeters = std::numbers::pi / 180.0;
    const Eigen::Vector3d up = Eigen::Vector3d::UnitZ();

    // arc-length displacements of the look-at target
    target += up * (r * offsets.pitch * kDegToMeters);
    Eigen::Vector3d forward0 = (target - camera).normalized();
    Eigen::Vector3d right_h = forward0.cross(up);
    if (right_h.norm() < 1e-9) right_h = Eigen::Vector3d::UnitX();
    right_h.normalize();
    target += right_h * (r * offsets.yaw * kDegToMeters);

    const Eigen::Vector3d forward = (target - camera).normalized();
    Eigen::Vector3d right = forward.cross(up);
    if (right.norm() < 1e-9) right = Eigen::Vector3d::UnitX();
    right.normalize();
    const Eigen::Vector3d down = forward.cross(right);

    Eigen::Matrix3d r0;
    r0.row(0) = right;
    r0.row(1) = down;
    r0.row(2) = forward;

    // positive roll follows the right-hand rule about the viewing direction
    const double rho = offsets.roll * std::numbers::pi / 180.0;
    Eigen::Matrix3d roll;
    roll << std::cos(rho), std::sin(rho), 0, -std::sin(rho), std::cos(rho), 0, 0, 0, 1;

    return CameraPose::from_rotation(camera, roll * r0);
}

}  // namespace lodloc
