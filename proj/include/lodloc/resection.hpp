#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "lodloc/camera.hpp"
#include "lodloc/errors.hpp"
#include "lodloc/lift.hpp"

namespace lodloc {

struct ResectionProblem {
    std::vector<Correspondence2D3D> correspondences;  // >= 6
    CameraIntrinsics intrinsics;
    Eigen::Vector3d approx_position = Eigen::Vector3d::Zero();  // GNSS
};

/// Exterior orientation with its adjustment statistics. sigma holds
/// (X0, Y0, Z0, omega, phi, kappa) standard deviations, scaled by the
/// a-posteriori unit-weight deviation s0.
struct ResectionSolution {
    CameraPose pose;
    Eigen::Matrix<double, 6, 1> sigma = Eigen::Matrix<double, 6, 1>::Zero();
    Eigen::VectorXd residuals;  // 2 rows per correspondence, pixels
    int iterations = 0;
    bool converged = false;
    double s0 = 0;
};

/// Raised when the iteration budget runs out; carries the best iterate
/// seen so far so callers can still inspect it.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& message, ResectionSolution best)
        : Error("not-converged", message), best_(std::move(best)) {}

    const ResectionSolution& best() const noexcept { return best_; }

private:
    ResectionSolution best_;
};

struct ResectionConfig {
    double tolerance = 1e-6;  // max-norm of the update, meters and radians
    int max_iterations = 50;
};

/// Direct linear transformation for the approximate orientation. The
/// returned rotation is the orthonormalized DLT solution; the position is
/// the GNSS approximation, which is what seeds the adjustment.
CameraPose dlt_init(const ResectionProblem& problem);

struct NormalSystem {
    Eigen::MatrixXd a;  // 2k x 6, columns X0 Y0 Z0 omega phi kappa
    Eigen::VectorXd w;  // observed - computed image coordinates
};

/// Collinearity design matrix and misclosure vector at the given pose.
NormalSystem build_normal_system(const CameraPose& pose, const ResectionProblem& problem);

/// Iterated weighted least squares on the collinearity equations; each
/// correspondence weight applies to both of its observation rows.
ResectionSolution gauss_newton_resect(const ResectionProblem& problem,
                                      const CameraPose& init,
                                      const ResectionConfig& config = {});

/// dlt_init followed by gauss_newton_resect.
ResectionSolution resect_frame(const ResectionProblem& problem,
                               const ResectionConfig& config = {});

/// Solution CSV: single header + value row, angles in radians.
void save_solution(const ResectionSolution& solution, const std::string& path);
ResectionSolution load_solution(const std::string& path);

}  // namespace lodloc
