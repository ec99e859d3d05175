#include "lodloc/camera.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "lodloc/errors.hpp"

namespace lodloc {

Eigen::Matrix3d rotation_from_angles(double omega, double phi, double kappa) {
    const double cw = std::cos(omega), sw = std::sin(omega);
    const double cp = std::cos(phi), sp = std::sin(phi);
    const double ck = std::cos(kappa), sk = std::sin(kappa);
    Eigen::Matrix3d rx, ry, rz;
    rx << 1, 0, 0, 0, cw, -sw, 0, sw, cw;
    ry << cp, 0, sp, 0, 1, 0, -sp, 0, cp;
    rz << ck, -sk, 0, sk, ck, 0, 0, 0, 1;
    return rz * ry * rx;
}

Eigen::Vector3d angles_from_rotation(const Eigen::Matrix3d& r) {
    const double phi = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
    const double omega = std::atan2(r(2, 1), r(2, 2));
    const double kappa = std::atan2(r(1, 0), r(0, 0));
    return {omega, phi, kappa};
}

CameraPose CameraPose::from_angles(const Eigen::Vector3d& position, double omega,
                                   double phi, double kappa) {
    CameraPose pose;
    pose.position = position;
    pose.angles = {omega, phi, kappa};
    pose.rotation = rotation_from_angles(omega, phi, kappa);
    return pose;
}

CameraPose CameraPose::from_rotation(const Eigen::Vector3d& position,
                                     const Eigen::Matrix3d& rotation) {
    CameraPose pose;
    pose.position = position;
    pose.rotation = rotation;
    pose.angles = angles_from_rotation(rotation);
    return pose;
}

Eigen::Vector2d project(const CameraPose& pose, const CameraIntrinsics& k,
                        const Eigen::Vector3d& world_point) {
    const Eigen::Vector3d p = pose.rotation * (world_point - pose.position);
    if (p.z() <= 0) {
        throw BehindCameraError("projection denominator is not positive");
    }
    return {k.x0 + k.principal_distance * p.x() / p.z(),
            k.y0 + k.principal_distance * p.y() / p.z()};
}

Ray pixel_ray(const CameraPose& pose, const CameraIntrinsics& k, double x, double y) {
    if (x < -0.5 || x > k.width - 0.5 || y < -0.5 || y > k.height - 0.5) {
        std::ostringstream os;
        os << "pixel (" << x << ", " << y << ") outside a " << k.width << "x" << k.height
           << " image";
        throw OutOfBoundsError(os.str());
    }
    const Eigen::Vector3d dir_cam(x - k.x0, y - k.y0, k.principal_distance);
    return {pose.position, (pose.rotation.transpose() * dir_cam).normalized()};
}

CameraIntrinsics load_intrinsics(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    CameraIntrinsics k;
    bool got_w = false, got_h = false, got_z = false;
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        const size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::istringstream ls(raw);
        std::string key;
        if (!(ls >> key)) continue;
        double value;
        if (!(ls >> value)) {
            throw ParseError(path + ":" + std::to_string(number) + ": expected '" + key +
                             " <value>'");
        }
        if (key == "width") {
            k.width = static_cast<int>(value);
            got_w = true;
        } else if (key == "height") {
            k.height = static_cast<int>(value);
            got_h = true;
        } else if (key == "z") {
            k.principal_distance = value;
            got_z = true;
        } else if (key == "x0") {
            k.x0 = value;
        } else if (key == "y0") {
            k.y0 = value;
        } else {
            throw ParseError(path + ":" + std::to_string(number) + ": unknown key '" +
                             key + "'");
        }
    }
    if (!got_w || !got_h || !got_z) {
        throw ParseError(path + ": width, height and z are required");
    }
    if (k.width <= 0 || k.height <= 0 || k.principal_distance <= 0) {
        throw ValidationError(path + ": width, height and z must be positive");
    }
    return k;
}

void save_intrinsics(const CameraIntrinsics& k, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(17);
    out << "width " << k.width << "\nheight " << k.height << "\nz "
        << k.principal_distance << "\nx0 " << k.x0 << "\ny0 " << k.y0 << "\n";
}

}  // namespace lodloc
