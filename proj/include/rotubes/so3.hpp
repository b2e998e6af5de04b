#pragma once

#include <Eigen/Core>

namespace rotubes {

/// Axis-angle coordinates of an element of so(3) (radian-scaled axis).
using AlgebraVector = Eigen::Vector3d;

/// Tolerance on orthogonality and determinant for valid rotations.
inline constexpr double kRotationTolerance = 1e-9;

/**
 * A 3x3 rotation matrix. Construction from an arbitrary matrix validates
 * R^T R = I and det R = 1 (max abs deviation 1e-9) and throws
 * InvalidRotation otherwise.
 */
class Rotation {
 public:
  Rotation() : m_(Eigen::Matrix3d::Identity()) {}
  explicit Rotation(const Eigen::Matrix3d& m);

  static Rotation identity() { return Rotation(); }

  /// Wraps a matrix already known to be a rotation (results of exp,
  /// projection and products of rotations). No validation.
  static Rotation trusted(const Eigen::Matrix3d& m) {
    Rotation r;
    r.m_ = m;
    return r;
  }

  const Eigen::Matrix3d& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  Rotation transpose() const { return trusted(m_.transpose()); }
  Rotation inverse() const { return transpose(); }

  friend Rotation operator*(const Rotation& a, const Rotation& b) {
    return trusted(a.m_ * b.m_);
  }

 private:
  Eigen::Matrix3d m_;
};

/// Largest deviation of (R^T R - I) and (det R - 1), in absolute value.
double rotation_defect(const Eigen::Matrix3d& m);
bool is_rotation(const Eigen::Matrix3d& m, double tol = kRotationTolerance);

/// iota: R^3 -> so(3).
Eigen::Matrix3d hat(const AlgebraVector& a);

/// Inverse of hat. Throws NonSkewInput if max |A + A^T| exceeds 1e-9;
/// otherwise extracts from the skew part (A - A^T)/2.
AlgebraVector vee(const Eigen::Matrix3d& a);

/// sqrt(trace(A A^T) / 2); equals |vee(A)| on skew matrices.
double frob_norm_rescaled(const Eigen::Matrix3d& a);

/// Rodrigues formula, with Taylor expansions below |a| = 1e-6.
Rotation exp_so3(const AlgebraVector& a);

/// Principal logarithm with |a| in [0, pi]. At angle pi the axis is chosen
/// with its first nonzero component positive.
AlgebraVector log_so3(const Rotation& r);

/// Rotation angle in [0, pi].
double rotation_angle(const Rotation& r);

/// Bi-invariant distance |log(R1^T R2)|.
double geodesic_distance(const Rotation& r1, const Rotation& r2);

/// Nearest rotation in Frobenius norm: U diag(1, 1, det(U V^T)) V^T.
/// Throws DegenerateMean when the minimizer is not unique.
Rotation project_to_so3(const Eigen::Matrix3d& m);

/// Right Jacobian: Exp(a + d) ~ Exp(a) Exp(J_r(a) d).
Eigen::Matrix3d right_jacobian(const AlgebraVector& a);
Eigen::Matrix3d right_jacobian_inverse(const AlgebraVector& a);

}  // namespace rotubes
