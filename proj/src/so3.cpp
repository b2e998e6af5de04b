#include "rotubes/so3.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "rotubes/errors.hpp"

namespace rotubes {

namespace {

constexpr double kSmallAngle = 1e-6;
// Beyond this angle the axis is read from the symmetric part instead of
// dividing the skew part by sin(theta).
constexpr double kNearPi = std::numbers::pi - 1e-2;
constexpr double kCutLocusSine = 1e-12;

AlgebraVector skew_vector(const Eigen::Matrix3d& m) {
  return 0.5 * AlgebraVector(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
}

// Axis of a rotation with angle close to pi, from (R + R^T)/2 = c I + (1 - c) n n^T.
AlgebraVector axis_near_pi(const Eigen::Matrix3d& r, double cos_theta) {
  const Eigen::Matrix3d b = 0.5 * (r + r.transpose()) - cos_theta * Eigen::Matrix3d::Identity();
  int j = 0;
  b.diagonal().maxCoeff(&j);
  AlgebraVector n = b.col(j);
  return n.normalized();
}

}  // namespace

double rotation_defect(const Eigen::Matrix3d& m) {
  const double orth = (m.transpose() * m - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return std::max(orth, std::abs(m.determinant() - 1.0));
}

bool is_rotation(const Eigen::Matrix3d& m, double tol) {
  return m.allFinite() && rotation_defect(m) <= tol;
}

Rotation::Rotation(const Eigen::Matrix3d& m) : m_(m) {
  if (!is_rotation(m)) {
    throw InvalidRotation("matrix is not a rotation (defect " +
                          std::to_string(m.allFinite() ? rotation_defect(m) : INFINITY) + ")");
  }
}

Eigen::Matrix3d hat(const AlgebraVector& a) {
  Eigen::Matrix3d m;
  m << 0.0, -a(2), a(1),
       a(2), 0.0, -a(0),
       -a(1), a(0), 0.0;
  return m;
}

AlgebraVector vee(const Eigen::Matrix3d& a) {
  const double asym = (a + a.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= 1e-9)) {
    throw NonSkewInput("matrix is not skew-symmetric (|A + A^T| = " + std::to_string(asym) + ")");
  }
  return skew_vector(a);
}

double frob_norm_rescaled(const Eigen::Matrix3d& a) {
  return std::sqrt((a * a.transpose()).trace() / 2.0);
}

Rotation exp_so3(const AlgebraVector& a) {
  const double theta2 = a.squaredNorm();
  const double theta = std::sqrt(theta2);
  double sinc;
  double cosc;  // (1 - cos x) / x^2
  if (theta < kSmallAngle) {
    sinc = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
    cosc = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
  } else {
    sinc = std::sin(theta) / theta;
    cosc = (1.0 - std::cos(theta)) / theta2;
  }
  const Eigen::Matrix3d k = hat(a);
  return Rotation::trusted(Eigen::Matrix3d::Identity() + sinc * k + cosc * (k * k));
}

double rotation_angle(const Rotation& r) {
  const Eigen::Matrix3d& m = r.matrix();
  const double s = skew_vector(m).norm();
  const double c = std::clamp((m.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::atan2(s, c);
}

AlgebraVector log_so3(const Rotation& r) {
  const Eigen::Matrix3d& m = r.matrix();
  const AlgebraVector v = skew_vector(m);  // sin(theta) * axis
  const double s = v.norm();
  const double c = std::clamp((m.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double theta = std::atan2(s, c);

  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    return v * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0);
  }
  if (theta < kNearPi) {
    return v * (theta / s);
  }

  AlgebraVector n = axis_near_pi(m, c);
  if (s > kCutLocusSine) {
    if (n.dot(v) < 0.0) n = -n;
  } else {
    // cut locus: first nonzero component positive
    for (int i = 0; i < 3; ++i) {
      if (std::abs(n(i)) > kCutLocusSine) {
        if (n(i) < 0.0) n = -n;
        break;
      }
    }
  }
  return theta * n;
}

double geodesic_distance(const Rotation& r1, const Rotation& r2) {
  return rotation_angle(r1.transpose() * r2);
}

Rotation project_to_so3(const Eigen::Matrix3d& m) {
  if (!m.allFinite()) throw InvalidArgument("project_to_so3: non-finite input");
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  const Eigen::Vector3d& sv = svd.singularValues();
  const double d = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;

  const double tol = 1e-9 * std::max(sv(0), 1e-300);
  const bool tied = std::abs(sv(1) - sv(2)) <= tol;
  if (sv(0) == 0.0 || (tied && (d < 0.0 || sv(1) <= tol))) {
    throw DegenerateMean("nearest rotation is not unique (singular values " +
                         std::to_string(sv(0)) + ", " + std::to_string(sv(1)) + ", " +
                         std::to_string(sv(2)) + ")");
  }
  const Eigen::Vector3d diag(1.0, 1.0, d);
  return Rotation::trusted(u * diag.asDiagonal() * v.transpose());
}

Eigen::Matrix3d right_jacobian(const AlgebraVector& a) {
  const double t2 = a.squaredNorm();
  const double t = std::sqrt(t2);
  const Eigen::Matrix3d k = hat(a);
  double c1;  // (1 - cos t) / t^2
  double c2;  // (t - sin t) / t^3
  if (t < 1e-4) {
    c1 = 0.5 - t2 / 24.0;
    c2 = 1.0 / 6.0 - t2 / 120.0;
  } else {
    c1 = (1.0 - std::cos(t)) / t2;
    c2 = (t - std::sin(t)) / (t2 * t);
  }
  return Eigen::Matrix3d::Identity() - c1 * k + c2 * (k * k);
}

Eigen::Matrix3d right_jacobian_inverse(const AlgebraVector& a) {
  const double t2 = a.squaredNorm();
  const double t = std::sqrt(t2);
  const Eigen::Matrix3d k = hat(a);
  double c;
  if (t < 1e-4) {
    c = 1.0 / 12.0 + t2 / 720.0;
  } else {
    c = 1.0 / t2 - (1.0 + std::cos(t)) / (2.0 * t * std::sin(t));
  }
  return Eigen::Matrix3d::Identity() + 0.5 * k + c * (k * k);
}

}  // namespace rotubes
