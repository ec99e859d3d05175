#include "lodloc/resection.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace lodloc {
namespace {

constexpr double kConditionLimit = 1e12;

void require_enough_points(const ResectionProblem& problem) {
    if (problem.correspondences.size() < 6)
        throw InsufficientPointsError(
            "resection needs at least six corresponding points, got " +
            std::to_string(problem.correspondences.size()));
    for (const Correspondence2D3D& c : problem.correspondences)
        if (!(c.weight > 0))
            throw ValidationError("resection: correspondence weights must be positive");
}

Eigen::Matrix3d calibration(const CameraIntrinsics& k) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    m(0, 0) = k.principal_distance;
    m(1, 1) = k.principal_distance;
    m(0, 2) = k.x0;
    m(1, 2) = k.y0;
    m(2, 2) = 1.0;
    return m;
}

}  // namespace

CameraPose dlt_init(const ResectionProblem& problem) {
    require_enough_points(problem);
    const auto& pts = problem.correspondences;
    const int n = static_cast<int>(pts.size());

    // Hartley-style conditioning keeps the design system's singular values
    // meaningful for the degeneracy check.
    Eigen::Vector2d img_c = Eigen::Vector2d::Zero();
    Eigen::Vector3d wld_c = Eigen::Vector3d::Zero();
    for (const auto& c : pts) {
        img_c += Eigen::Vector2d(c.x, c.y);
        wld_c += c.world;
    }
    img_c /= n;
    wld_c /= n;
    double img_d = 0, wld_d = 0;
    for (const auto& c : pts) {
        img_d += (Eigen::Vector2d(c.x, c.y) - img_c).norm();
        wld_d += (c.world - wld_c).norm();
    }
    img_d /= n;
    wld_d /= n;
    const double img_s = img_d > 0 ? std::sqrt(2.0) / img_d : 1.0;
    const double wld_s = wld_d > 0 ? std::sqrt(3.0) / wld_d : 1.0;

    Eigen::Matrix3d t = Eigen::Matrix3d::Identity();  // image conditioning
    t(0, 0) = t(1, 1) = img_s;
    t(0, 2) = -img_s * img_c.x();
    t(1, 2) = -img_s * img_c.y();
    Eigen::Matrix4d u = Eigen::Matrix4d::Identity();  // world conditioning
    u.block<3, 3>(0, 0) *= wld_s;
    u.block<3, 1>(0, 3) = -wld_s * wld_c;

    Eigen::MatrixXd design(2 * n, 12);
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector3d pw = wld_s * (pts[i].world - wld_c);
        const double x = img_s * (pts[i].x - img_c.x());
        const double y = img_s * (pts[i].y - img_c.y());
        design.row(2 * i) << pw.x(), pw.y(), pw.z(), 1, 0, 0, 0, 0, -x * pw.x(),
            -x * pw.y(), -x * pw.z(), -x;
        design.row(2 * i + 1) << 0, 0, 0, 0, pw.x(), pw.y(), pw.z(), 1, -y * pw.x(),
            -y * pw.y(), -y * pw.z(), -y;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    // The smallest singular value is the solution direction; a collapsing
    // second-smallest means the null space has extra dimensions (coplanar
    // or otherwise degenerate input).
    if (!(sv(10) > 0) || sv(0) / sv(10) > kConditionLimit)
        throw DegenerateConfigError(
            "dlt_init: design system is rank-deficient (coplanar points?)");

    Eigen::Matrix<double, 3, 4> p_cond;
    const Eigen::VectorXd h = svd.matrixV().col(11);
    p_cond.row(0) = h.segment<4>(0).transpose();
    p_cond.row(1) = h.segment<4>(4).transpose();
    p_cond.row(2) = h.segment<4>(8).transpose();
    const Eigen::Matrix<double, 3, 4> p = t.inverse() * p_cond * u;

    // P = s * K * R * [I | -C]; peel off K, fix the overall sign by the
    // determinant, and project onto the nearest rotation.
    Eigen::Matrix3d a = calibration(problem.intrinsics).inverse() * p.leftCols<3>();
    if (a.determinant() < 0) a = -a;
    Eigen::JacobiSVD<Eigen::Matrix3d> rsvd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d r = rsvd.matrixU() * rsvd.matrixV().transpose();
    if (r.determinant() < 0) {
        Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
        flip(2, 2) = -1;
        r = rsvd.matrixU() * flip * rsvd.matrixV().transpose();
    }

    return CameraPose::from_rotation(problem.approx_position, r);
}

namespace {

Eigen::Matrix3d drx(double w) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    m(1, 1) = -std::sin(w);
    m(1, 2) = -std::cos(w);
    m(2, 1) = std::cos(w);
    m(2, 2) = -std::sin(w);
    return m;
}

Eigen::Matrix3d dry(double p) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    m(0, 0) = -std::sin(p);
    m(0, 2) = std::cos(p);
    m(2, 0) = -std::cos(p);
    m(2, 2) = -std::sin(p);
    return m;
}

Eigen::Matrix3d drz(double k) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    m(0, 0) = -std::sin(k);
    m(0, 1) = -std::cos(k);
    m(1, 0) = std::cos(k);
    m(1, 1) = -std::sin(k);
    return m;
}

Eigen::Matrix3d rx(double w) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(1, 1) = std::cos(w);
    m(1, 2) = -std::sin(w);
    m(2, 1) = std::sin(w);
    m(2, 2) = std::cos(w);
    return m;
}

Eigen::Matrix3d ry(double p) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(0, 0) = std::cos(p);
    m(0, 2) = std::sin(p);
    m(2, 0) = -std::sin(p);
    m(2, 2) = std::cos(p);
    return m;
}

Eigen::Matrix3d rz(double k) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(0, 0) = std::cos(k);
    m(0, 1) = -std::sin(k);
    m(1, 0) = std::sin(k);
    m(1, 1) = std::cos(k);
    return m;
}

}  // namespace

NormalSystem build_normal_system(const CameraPose& pose, const ResectionProblem& problem) {
    const auto& pts = problem.correspondences;
    const int k = static_cast<int>(pts.size());
    NormalSystem sys;
    sys.a.resize(2 * k, 6);
    sys.w.resize(2 * k);

    const double z = problem.intrinsics.principal_distance;
    const double omega = pose.angles(0), phi = pose.angles(1), kappa = pose.angles(2);
    const Eigen::Matrix3d r = pose.rotation;
    // Angle sensitivities of R = Rz * Ry * Rx, one factor at a time.
    const Eigen::Matrix3d dr_dw = rz(kappa) * ry(phi) * drx(omega);
    const Eigen::Matrix3d dr_dp = rz(kappa) * dry(phi) * rx(omega);
    const Eigen::Matrix3d dr_dk = drz(kappa) * ry(phi) * rx(omega);

    for (int i = 0; i < k; ++i) {
        const Eigen::Vector3d d = pts[i].world - pose.position;
        const Eigen::Vector3d p = r * d;
        if (p.z() <= 0)
            throw BehindCameraError("build_normal_system: point " + std::to_string(i) +
                                    " is behind the camera");

        const double inv_pz = 1.0 / p.z();
        sys.w(2 * i) = pts[i].x - (problem.intrinsics.x0 + z * p.x() * inv_pz);
        sys.w(2 * i + 1) = pts[i].y - (problem.intrinsics.y0 + z * p.y() * inv_pz);

        // dp/d(X0,Y0,Z0) = -R; dp/d(angle) = dR/d(angle) * (P - C).
        Eigen::Matrix<double, 3, 6> dp;
        dp.block<3, 3>(0, 0) = -r;
        dp.col(3) = dr_dw * d;
        dp.col(4) = dr_dp * d;
        dp.col(5) = dr_dk * d;

        // x = x0 + z * px/pz  =>  dx = z * (pz*dpx - px*dpz) / pz^2
        for (int j = 0; j < 6; ++j) {
            sys.a(2 * i, j) = z * (dp(0, j) * p.z() - p.x() * dp(2, j)) * inv_pz * inv_pz;
            sys.a(2 * i + 1, j) = z * (dp(1, j) * p.z() - p.y() * dp(2, j)) * inv_pz * inv_pz;
        }
    }
    return sys;
}

ResectionSolution gauss_newton_resect(const ResectionProblem& problem,
                                      const CameraPose& init,
                                      const ResectionConfig& config) {
    require_enough_points(problem);
    const int k = static_cast<int>(problem.correspondences.size());
    const int n = 2 * k;
    const int m = 6;

    Eigen::VectorXd weights(n);
    for (int i = 0; i < k; ++i) {
        weights(2 * i) = problem.correspondences[i].weight;
        weights(2 * i + 1) = problem.correspondences[i].weight;
    }

    ResectionSolution best;
    best.pose = init;
    double best_delta = std::numeric_limits<double>::infinity();

    CameraPose pose = init;
    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        const NormalSystem sys = build_normal_system(pose, problem);
        const Eigen::MatrixXd atp = sys.a.transpose() * weights.asDiagonal();
        const Eigen::Matrix<double, 6, 6> normal = atp * sys.a;

        Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(normal);
        const double lo = eig.eigenvalues()(0);
        const double hi = eig.eigenvalues()(5);
        if (!(lo > 0) || hi / lo > kConditionLimit)
            throw SingularNormalMatrixError(
                "gauss_newton_resect: normal matrix is ill-conditioned");

        const Eigen::Matrix<double, 6, 1> delta = normal.ldlt().solve(atp * sys.w);
        const Eigen::VectorXd residuals = sys.a * delta - sys.w;
        const double vtpv = residuals.dot(weights.cwiseProduct(residuals));
        const double s0 = std::sqrt(std::max(0.0, vtpv) / (n - m));
        const Eigen::Matrix<double, 6, 6> cofactor =
            normal.ldlt().solve(Eigen::Matrix<double, 6, 6>::Identity());

        pose = CameraPose::from_angles(pose.position + delta.head<3>(),
                                       pose.angles(0) + delta(3),
                                       pose.angles(1) + delta(4),
                                       pose.angles(2) + delta(5));

        ResectionSolution sol;
        sol.pose = pose;
        sol.sigma = s0 * cofactor.diagonal().cwiseMax(0.0).cwiseSqrt();
        sol.residuals = residuals;
        sol.iterations = iter;
        sol.s0 = s0;

        const double step = delta.cwiseAbs().maxCoeff();
        if (step < best_delta) {
            best_delta = step;
            best = sol;
        }
        if (step < config.tolerance) {
            sol.converged = true;
            return sol;
        }
    }

    throw NonConvergenceError("gauss_newton_resect: no convergence within " +
                                  std::to_string(config.max_iterations) + " iterations",
                              best);
}

ResectionSolution resect_frame(const ResectionProblem& problem,
                               const ResectionConfig& config) {
    return gauss_newton_resect(problem, dlt_init(problem), config);
}

void save_solution(const ResectionSolution& solution, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "X0,Y0,Z0,omega,phi,kappa,sigma_X,sigma_Y,sigma_Z,sigma_omega,sigma_phi,"
           "sigma_kappa,s0,iterations,converged\n";
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                  "%.17g,%.17g,%d,%d\n",
                  solution.pose.position.x(), solution.pose.position.y(),
                  solution.pose.position.z(), solution.pose.angles(0),
                  solution.pose.angles(1), solution.pose.angles(2), solution.sigma(0),
                  solution.sigma(1), solution.sigma(2), solution.sigma(3),
                  solution.sigma(4), solution.sigma(5), solution.s0,
                  solution.iterations, solution.converged ? 1 : 0);
    out << buf;
}

ResectionSolution load_solution(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::string header, line;
    if (!std::getline(in, header) || header.rfind("X0,Y0,Z0", 0) != 0 ||
        !std::getline(in, line))
        throw ParseError(path + ": expected solution CSV");
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    Eigen::Vector3d c;
    Eigen::Vector3d angles;
    ResectionSolution sol;
    int converged = 0;
    if (!(row >> c.x() >> c.y() >> c.z() >> angles.x() >> angles.y() >> angles.z() >>
          sol.sigma(0) >> sol.sigma(1) >> sol.sigma(2) >> sol.sigma(3) >>
          sol.sigma(4) >> sol.sigma(5) >> sol.s0 >> sol.iterations >> converged))
        throw ParseError(path + ": malformed solution row");
    sol.pose = CameraPose::from_angles(c, angles.x(), angles.y(), angles.z());
    sol.converged = converged != 0;
    return sol;
}

}  // namespace lodloc
