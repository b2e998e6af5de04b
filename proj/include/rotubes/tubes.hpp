#pragma once

#include <optional>
#include <vector>

#include "rotubes/curve.hpp"
#include "rotubes/gkf.hpp"

namespace rotubes {

/**
 * Hotelling T^2 process of intrinsic residuals.
 *
 * `covariance[k]` is (1/(N-1)) sum_n x_n x_n^T over the sample residuals at
 * t_k. `mean[k]` is the population residual when a reference center was
 * supplied and the mean sample residual otherwise. `statistic` holds
 * N mean^T covariance^{-1} mean and is only set with a reference center.
 */
struct HotellingProcess {
  TimeGrid grid;
  int n = 0;
  std::vector<Eigen::Matrix3d> covariance;
  std::vector<AlgebraVector> mean;
  std::optional<std::vector<double>> statistic;
};

HotellingProcess hotelling(const CurveSample& sample, const RotationCurve* center = nullptr);
HotellingProcess hotelling(const ResidualField& residuals);

/// Hotelling process of generating residuals a[n][k] (centered covariance).
HotellingProcess genuine_hotelling(const TimeGrid& grid,
                                   const std::vector<std::vector<AlgebraVector>>& a);

/// Throws SingularCovariance(k, t) unless S is symmetric positive definite
/// with min eigenvalue > 1e-12 * max eigenvalue.
void check_covariance(const Eigen::Matrix3d& s, std::size_t k, double t);

/// N a^T S^{-1} a.
double mahalanobis(const Eigen::Matrix3d& s, int n, const AlgebraVector& a);

struct TubeOptions {
  LkcFrame frame = LkcFrame::Principal;
  EcSigns signs = kDefaultEcSigns;
};

/// Alpha-independent part of a confidence tube.
struct TubeFit {
  RotationCurve center;
  std::vector<Eigen::Matrix3d> covariance;
  int n = 0;
  double lkc = 0.0;
};

/// Simultaneous confidence tube: at t the set center(t) Exp(hat(a)) with
/// N a^T S_t^{-1} a <= hquant.
struct ConfidenceTube {
  RotationCurve center;
  std::vector<Eigen::Matrix3d> covariance;
  double hquant = 0.0;
  double alpha = 0.05;
  int n = 0;
  double lkc = 0.0;

  const TimeGrid& grid() const { return center.grid(); }
};

TubeFit fit_tube(const CurveSample& sample, const TubeOptions& options = {});
ConfidenceTube finish_tube(const TubeFit& fit, double alpha, EcSigns signs = kDefaultEcSigns);
ConfidenceTube build_tube(const CurveSample& sample, double alpha, const TubeOptions& options = {});

struct Membership {
  std::vector<bool> inside;
  std::vector<double> statistic;  // N a^T S^{-1} a per grid point
  bool all = true;
};

Membership tube_contains(const ConfidenceTube& tube, const RotationCurve& curve);

/// Tube of the acted sample, derived from `tube` by equivariance and sampled
/// on `target`: center P c(phi(t)) Q, covariance Q^T S(phi(t)) Q, same
/// quantile. Covariances are interpolated linearly between grid points.
ConfidenceTube act_on_tube(const ConfidenceTube& tube, const SpatioTemporalAction& act,
                           const TimeGrid& target);
ConfidenceTube act_on_tube(const ConfidenceTube& tube, const SpatioTemporalAction& act);

struct Locus {
  std::size_t first = 0;
  std::size_t last = 0;
  double t_first = 0.0;
  double t_last = 0.0;
};

struct OverlapReport {
  TimeGrid grid;
  std::vector<bool> overlap;
  /// min over tube a's set of b's statistic, divided by b's quantile
  std::vector<double> separation;
  std::vector<Locus> loci;
};

/// Maximal runs of `false` in `flags`.
std::vector<Locus> false_runs(const TimeGrid& grid, const std::vector<bool>& flags);

/// Decides per time whether the two tube sets intersect in SO(3), by
/// minimizing b's statistic over a's ellipsoid pulled back through the
/// exact logarithm.
OverlapReport compare_tubes(const ConfidenceTube& a, const ConfidenceTube& b);

/// Per-time minimization used by compare_tubes: returns
/// min { N_b m(u)^T S_b^{-1} m(u) : N_a u^T S_a^{-1} u <= h_a },
/// m(u) = Log(cb^T ca Exp(u)).
double min_statistic_over_tube(const Rotation& ca, const Eigen::Matrix3d& sa, int na, double ha,
                               const Rotation& cb, const Eigen::Matrix3d& sb, int nb);

}  // namespace rotubes
