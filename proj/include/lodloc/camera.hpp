#pragma once

#include <Eigen/Core>
#include <string>

namespace lodloc {

/// Pinhole interior orientation. The principal distance plays the scale
/// role in the projection ratio and is expressed in pixels, like the
/// principal point. Pixel axes: x right, y down, origin at the top-left
/// pixel center.
struct CameraIntrinsics {
    int width = 0;
    int height = 0;
    double principal_distance = 0;  // > 0
    double x0 = 0;
    double y0 = 0;
};

CameraIntrinsics load_intrinsics(const std::string& path);
void save_intrinsics(const CameraIntrinsics& k, const std::string& path);

/// Builds the world-to-camera rotation R = Rz(kappa) * Ry(phi) * Rx(omega)
/// from the exterior-orientation angles (radians). Camera axes: X right,
/// Y down, Z forward, so p_cam = R * (P - position).
Eigen::Matrix3d rotation_from_angles(double omega, double phi, double kappa);

/// Inverse of rotation_from_angles; unique for |phi| < pi/2.
Eigen::Vector3d angles_from_rotation(const Eigen::Matrix3d& r);

/// Exterior orientation: position (X0, Y0, Z0) in meters and angles
/// (omega, phi, kappa) in radians, kept consistent with the cached
/// world-to-camera matrix.
struct CameraPose {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector3d angles = Eigen::Vector3d::Zero();  // omega, phi, kappa
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();

    static CameraPose from_angles(const Eigen::Vector3d& position, double omega,
                                  double phi, double kappa);
    static CameraPose from_rotation(const Eigen::Vector3d& position,
                                    const Eigen::Matrix3d& rotation);

    /// Camera forward axis in world coordinates (third row of R).
    Eigen::Vector3d forward() const { return rotation.row(2).transpose(); }
};

/// Central projection of a world point. The third camera-frame coordinate
/// (the projection denominator) must be positive.
Eigen::Vector2d project(const CameraPose& pose, const CameraIntrinsics& k,
                        const Eigen::Vector3d& world_point);

struct Ray {
    Eigen::Vector3d origin;
    Eigen::Vector3d direction;  // unit
};

/// Ray through an image position (sub-pixel allowed, bounds checked
/// against the pixel-center raster extent). project(ray point) returns the
/// same image position for every t > 0.
Ray pixel_ray(const CameraPose& pose, const CameraIntrinsics& k, double x, double y);

}  // namespace lodloc
