#pragma once

#include <numbers>

#include "rotubes/curve.hpp"

namespace rotubes {

/// Intrinsic volumes of the unit two-sphere, indexed by dimension 0..3.
inline constexpr double kSphereIntrinsicVolume[4] = {2.0, 0.0, 4.0 * std::numbers::pi, 0.0};

/// Sample size and first Lipschitz-Killing curvature of [0, 1].
/// L_0([0, 1]) = 1 is implicit.
struct EcContext {
  int n = 0;
  double l1 = 0.0;

  EcContext(int n_, double l1_);
};

/**
 * Sign pattern of the expected Euler characteristic of a Hotelling T^2
 * process with three components,
 *
 *   2 rho_0 (+/-) 4 pi rho_2 (+/-) L_1 (2 rho_1 + 4 pi rho_3),
 *
 * with all rho evaluated at sqrt(h).
 *
 * `Summed` is the union-intersection expansion sum_d mu_d(S^2) rho_{j+d};
 * its N -> infinity limit reproduces the chi-square(3) tail and EC density
 * exactly. `Alternating` subtracts both sphere terms. The Monte Carlo
 * quantile check in the acceptance suite compares the two; `Summed` is
 * the default.
 */
enum class EcSigns { Summed, Alternating };

inline constexpr EcSigns kDefaultEcSigns = EcSigns::Summed;

/// Euler-characteristic densities rho^T_j(t), j = 0..3, of a Student-t
/// process with N - 1 degrees of freedom. Throws InvalidDof if N < 3.
double t_ec_density(int j, double t, int n);

/// Frame in which residual coordinates are normalized before estimating L_1.
enum class LkcFrame {
  /// The so(3) coordinates as they come out of the logarithm.
  Algebra,
  /// Eigenbasis of the pooled residual second moment. Makes the estimate
  /// invariant under a common rotation of all residual vectors.
  Principal,
};

/**
 * L_1 estimate from normalized residual increments:
 *
 *   (1/3) sum_k sum_d | R^d_{t_{k+1}} / |R^d_{t_{k+1}}| - R^d_{t_k} / |R^d_{t_k}| |
 *
 * where R^d_{t_k} is the N-vector of d-th residual coordinates at t_k.
 * Throws ZeroResidualColumn if some column vanishes.
 */
double lkc_estimate(const ResidualField& residuals, LkcFrame frame = LkcFrame::Algebra);

/// Same estimator on raw residual vectors, indexed [curve][time].
double lkc_estimate(const std::vector<std::vector<AlgebraVector>>& residuals,
                    LkcFrame frame = LkcFrame::Algebra);

/// Expected Euler characteristic of {t : H_t >= h}; the approximation to
/// P(max_t H_t > h).
double expected_ec(double h, const EcContext& ctx, EcSigns signs = kDefaultEcSigns);

/// Smallest h on the decreasing tail with expected_ec(h) = alpha, alpha in
/// (0, 0.5]. Bisection to bracket width 1e-8.
double solve_quantile(double alpha, const EcContext& ctx, EcSigns signs = kDefaultEcSigns);

}  // namespace rotubes
