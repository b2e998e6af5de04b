#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rotubes/so3.hpp"

namespace rotubes {

/// Strictly increasing time points with t_1 = 0 and t_K = 1, K >= 2.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> t);

  /// K equidistant points on [0, 1].
  static TimeGrid uniform(std::size_t k);

  std::size_t size() const { return t_.size(); }
  double operator[](std::size_t i) const { return t_[i]; }
  const std::vector<double>& values() const { return t_; }
  double front() const { return t_.front(); }
  double back() const { return t_.back(); }

  /// Index k with t_k <= s < t_{k+1} (K-2 for s = 1).
  std::size_t segment(double s) const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  std::vector<double> t_;
};

/// A curve t -> R(t) in SO(3) sampled on a time grid.
class RotationCurve {
 public:
  RotationCurve(TimeGrid grid, std::vector<Rotation> values);

  /// The curve that is constantly `r`.
  static RotationCurve constant(const TimeGrid& grid, const Rotation& r = Rotation::identity());

  const TimeGrid& grid() const { return grid_; }
  const std::vector<Rotation>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  const Rotation& operator[](std::size_t k) const { return values_[k]; }

 private:
  TimeGrid grid_;
  std::vector<Rotation> values_;
};

/// N independent curves on one shared grid.
class CurveSample {
 public:
  explicit CurveSample(std::vector<RotationCurve> curves);

  const TimeGrid& grid() const { return curves_.front().grid(); }
  const std::vector<RotationCurve>& curves() const { return curves_; }
  std::size_t size() const { return curves_.size(); }
  const RotationCurve& operator[](std::size_t n) const { return curves_[n]; }

 private:
  std::vector<RotationCurve> curves_;
};

/// Monotone piecewise-linear time warp of [0, 1]. Knots (u, v) must start
/// at (0, 0), end at (1, 1) and increase strictly in both coordinates.
class Warp {
 public:
  using Knot = std::pair<double, double>;

  explicit Warp(std::vector<Knot> knots);
  static Warp identity() { return Warp({{0.0, 0.0}, {1.0, 1.0}}); }

  double operator()(double s) const;
  Warp inverse() const;
  const std::vector<Knot>& knots() const { return knots_; }

  /// s -> outer(inner(s)).
  static Warp compose(const Warp& outer, const Warp& inner);

 private:
  std::vector<Knot> knots_;
};

/// Element (P, Q, phi) acting on curves by gamma -> P gamma(phi(t)) Q.
struct SpatioTemporalAction {
  Rotation left;
  Rotation right;
  Warp warp = Warp::identity();

  static SpatioTemporalAction identity() { return {Rotation::identity(), Rotation::identity()}; }

  /// Action equal to applying `first` and then `second`.
  static SpatioTemporalAction compose(const SpatioTemporalAction& second,
                                      const SpatioTemporalAction& first);

  /// phi^{-1}(grid): the grid on which the acted curve samples the
  /// original curve exactly at its grid points.
  TimeGrid pullback(const TimeGrid& grid) const;
};

/// Intrinsic residuals of a sample about its pointwise extrinsic mean.
struct ResidualField {
  TimeGrid grid;
  RotationCurve center_estimate;
  /// Log(center_estimate(t)^T gamma_0(t)) when a reference center was given.
  std::optional<std::vector<AlgebraVector>> population;
  /// sample[n][k] = Log(center_estimate(t_k)^T gamma_n(t_k)).
  std::vector<std::vector<AlgebraVector>> sample;

  std::size_t curves() const { return sample.size(); }
  std::size_t times() const { return grid.size(); }
};

/// Projection of the entrywise Euclidean mean onto SO(3) at every time.
RotationCurve pointwise_extrinsic_mean(const CurveSample& sample);

ResidualField residuals(const CurveSample& sample, const RotationCurve* center = nullptr);

/// R_k Exp(u Log(R_k^T R_{k+1})) on the segment containing s.
Rotation geodesic_interpolate(const RotationCurve& curve, double s);

/// Acted curve on the input curve's own grid.
RotationCurve apply_action(const RotationCurve& curve, const SpatioTemporalAction& act);

/// Acted curve sampled on `target`.
RotationCurve apply_action(const RotationCurve& curve, const SpatioTemporalAction& act,
                           const TimeGrid& target);

CurveSample apply_action(const CurveSample& sample, const SpatioTemporalAction& act);
CurveSample apply_action(const CurveSample& sample, const SpatioTemporalAction& act,
                         const TimeGrid& target);

/// Sum of geodesic distances between consecutive samples.
double curve_length(const RotationCurve& curve);

struct LengthLoss {
  double delta = 0.0;
  double delta1 = 0.0;  // length of t -> g(t) h(t)^T
  double delta2 = 0.0;  // length of t -> g(t)^T h(t)
};

LengthLoss length_loss(const RotationCurve& g, const RotationCurve& h);

/// Throws GridMismatch unless the grids are identical.
void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* what);

}  // namespace rotubes
