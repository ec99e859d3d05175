#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "lodloc/camera.hpp"

namespace lodloc {

/// Ordered antenna positions plus the camera height above the antenna.
struct GnssTrack {
    struct Point {
        int frame = 0;
        Eigen::Vector3d antenna = Eigen::Vector3d::Zero();
    };
    std::vector<Point> points;
    double antenna_to_camera_height = 0;

    /// Index of the entry with the given frame id, or -1.
    int find_frame(int frame) const;
};

/// Text track, one "frame X Y Z" record per line, '#' comments.
GnssTrack load_track(const std::string& path);

/// Angular corrections in degrees applied to the look-at construction.
struct AngularOffsets {
    double roll = 0;
    double pitch = 0;
    double yaw = 0;
};

/// Camera pose for the entry at `index`: the camera sits at the antenna
/// plus the height offset and points at the next entry's adapted position.
/// Pitch and yaw offsets each move the look-at target by the arc length
/// r_gnss * offset_deg * pi/180 -- pitch along world-vertical, yaw along
/// the horizontal axis transverse to the viewing direction (positive to
/// the image right); roll rotates about the viewing axis. r_gnss <= 0
/// means the distance between the two adapted positions.
CameraPose build_lookat_pose(const GnssTrack& track, size_t index,
                             const AngularOffsets& offsets, double r_gnss);

}  // namespace lodloc
