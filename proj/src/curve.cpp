#include "rotubes/curve.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rotubes/errors.hpp"

namespace rotubes {

TimeGrid::TimeGrid(std::vector<double> t) : t_(std::move(t)) {
  if (t_.size() < 2) throw InvalidArgument("time grid needs at least 2 points");
  if (t_.front() != 0.0 || t_.back() != 1.0) {
    throw InvalidArgument("time grid must start at 0 and end at 1");
  }
  for (std::size_t i = 1; i < t_.size(); ++i) {
    if (!(t_[i] > t_[i - 1])) {
      throw InvalidArgument("time grid is not strictly increasing at index " + std::to_string(i));
    }
  }
}

TimeGrid TimeGrid::uniform(std::size_t k) {
  if (k < 2) throw InvalidArgument("time grid needs at least 2 points");
  std::vector<double> t(k);
  const double denom = static_cast<double>(k - 1);
  for (std::size_t i = 0; i < k; ++i) t[i] = static_cast<double>(i) / denom;
  return TimeGrid(std::move(t));
}

std::size_t TimeGrid::segment(double s) const {
  const auto it = std::upper_bound(t_.begin(), t_.end(), s);
  if (it == t_.begin()) return 0;
  const auto k = static_cast<std::size_t>(it - t_.begin()) - 1;
  return std::min(k, t_.size() - 2);
}

void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* what) {
  if (!(a == b)) throw GridMismatch(std::string(what) + ": time grids differ");
}

RotationCurve::RotationCurve(TimeGrid grid, std::vector<Rotation> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw InvalidArgument("curve has " + std::to_string(values_.size()) + " values for " +
                          std::to_string(grid_.size()) + " grid points");
  }
}

RotationCurve RotationCurve::constant(const TimeGrid& grid, const Rotation& r) {
  return RotationCurve(grid, std::vector<Rotation>(grid.size(), r));
}

CurveSample::CurveSample(std::vector<RotationCurve> curves) : curves_(std::move(curves)) {
  if (curves_.empty()) throw InvalidArgument("empty curve sample");
  for (const auto& c : curves_) require_same_grid(curves_.front().grid(), c.grid(), "CurveSample");
}

// --- warps -----------------------------------------------------------------

Warp::Warp(std::vector<Knot> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 2) throw InvalidArgument("warp needs at least 2 knots");
  if (knots_.front() != Knot{0.0, 0.0} || knots_.back() != Knot{1.0, 1.0}) {
    throw InvalidArgument("warp must map 0 to 0 and 1 to 1");
  }
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i].first > knots_[i - 1].first) || !(knots_[i].second > knots_[i - 1].second)) {
      throw InvalidArgument("warp knots must increase strictly in both coordinates");
    }
  }
}

double Warp::operator()(double s) const {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), s,
                             [](double x, const Knot& k) { return x < k.first; });
  const Knot& hi = *it;
  const Knot& lo = *(it - 1);
  if (s == lo.first) return lo.second;
  const double u = (s - lo.first) / (hi.first - lo.first);
  return lo.second + u * (hi.second - lo.second);
}

Warp Warp::inverse() const {
  std::vector<Knot> inv;
  inv.reserve(knots_.size());
  for (const auto& [u, v] : knots_) inv.emplace_back(v, u);
  return Warp(std::move(inv));
}

Warp Warp::compose(const Warp& outer, const Warp& inner) {
  std::vector<double> breaks;
  for (const auto& k : inner.knots_) breaks.push_back(k.first);
  const Warp inner_inv = inner.inverse();
  for (const auto& k : outer.knots_) breaks.push_back(inner_inv(k.first));
  std::sort(breaks.begin(), breaks.end());

  std::vector<Knot> knots;
  for (double s : breaks) {
    if (!knots.empty() && s - knots.back().first <= 1e-14) continue;
    knots.emplace_back(s, outer(inner(s)));
  }
  knots.back() = {1.0, 1.0};
  knots.front() = {0.0, 0.0};
  return Warp(std::move(knots));
}

SpatioTemporalAction SpatioTemporalAction::compose(const SpatioTemporalAction& second,
                                                   const SpatioTemporalAction& first) {
  // P2 (P1 g(phi1(phi2(t))) Q1) Q2
  return {second.left * first.left, first.right * second.right,
          Warp::compose(first.warp, second.warp)};
}

TimeGrid SpatioTemporalAction::pullback(const TimeGrid& grid) const {
  const Warp inv = warp.inverse();
  std::vector<double> t(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) t[k] = inv(grid[k]);
  return TimeGrid(std::move(t));
}

// --- pointwise statistics ----------------------------------------------------

RotationCurve pointwise_extrinsic_mean(const CurveSample& sample) {
  const TimeGrid& grid = sample.grid();
  const double inv_n = 1.0 / static_cast<double>(sample.size());
  std::vector<Rotation> values;
  values.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    Eigen::Matrix3d sum = Eigen::Matrix3d::Zero();
    for (const auto& c : sample.curves()) sum += c[k].matrix();
    try {
      values.push_back(project_to_so3(sum * inv_n));
    } catch (const DegenerateMean& e) {
      throw DegenerateMean(std::string(e.what()) + " at grid index " + std::to_string(k));
    }
  }
  return RotationCurve(grid, std::move(values));
}

ResidualField residuals(const CurveSample& sample, const RotationCurve* center) {
  const TimeGrid& grid = sample.grid();
  if (center != nullptr) require_same_grid(grid, center->grid(), "residuals");

  ResidualField out{grid, pointwise_extrinsic_mean(sample), std::nullopt, {}};
  const std::size_t k_count = grid.size();

  if (center != nullptr) {
    std::vector<AlgebraVector> pop(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
      pop[k] = log_so3(out.center_estimate[k].transpose() * (*center)[k]);
    }
    out.population = std::move(pop);
  }

  out.sample.resize(sample.size());
  for (std::size_t n = 0; n < sample.size(); ++n) {
    auto& row = out.sample[n];
    row.resize(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
      row[k] = log_so3(out.center_estimate[k].transpose() * sample[n][k]);
    }
  }
  return out;
}

// --- interpolation and actions ---------------------------------------------

Rotation geodesic_interpolate(const RotationCurve& curve, double s) {
  constexpr double kSlack = 1e-12;
  if (!(s >= -kSlack && s <= 1.0 + kSlack)) {
    throw InvalidArgument("interpolation time " + std::to_string(s) + " outside [0, 1]");
  }
  s = std::clamp(s, 0.0, 1.0);
  const TimeGrid& grid = curve.grid();
  const std::size_t k = grid.segment(s);
  const double u = (s - grid[k]) / (grid[k + 1] - grid[k]);
  if (u <= 0.0) return curve[k];
  if (u >= 1.0) return curve[k + 1];
  const Rotation& r0 = curve[k];
  return r0 * exp_so3(u * log_so3(r0.transpose() * curve[k + 1]));
}

RotationCurve apply_action(const RotationCurve& curve, const SpatioTemporalAction& act,
                           const TimeGrid& target) {
  std::vector<Rotation> values;
  values.reserve(target.size());
  for (std::size_t k = 0; k < target.size(); ++k) {
    values.push_back(act.left * geodesic_interpolate(curve, act.warp(target[k])) * act.right);
  }
  return RotationCurve(target, std::move(values));
}

RotationCurve apply_action(const RotationCurve& curve, const SpatioTemporalAction& act) {
  return apply_action(curve, act, curve.grid());
}

CurveSample apply_action(const CurveSample& sample, const SpatioTemporalAction& act,
                         const TimeGrid& target) {
  std::vector<RotationCurve> out;
  out.reserve(sample.size());
  for (const auto& c : sample.curves()) out.push_back(apply_action(c, act, target));
  return CurveSample(std::move(out));
}

CurveSample apply_action(const CurveSample& sample, const SpatioTemporalAction& act) {
  return apply_action(sample, act, sample.grid());
}

// --- lengths -----------------------------------------------------------------

double curve_length(const RotationCurve& curve) {
  double len = 0.0;
  for (std::size_t k = 0; k + 1 < curve.size(); ++k) {
    len += geodesic_distance(curve[k], curve[k + 1]);
  }
  return len;
}

LengthLoss length_loss(const RotationCurve& g, const RotationCurve& h) {
  require_same_grid(g.grid(), h.grid(), "length_loss");
  std::vector<Rotation> right(g.size());
  std::vector<Rotation> left(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    right[k] = g[k] * h[k].transpose();
    left[k] = g[k].transpose() * h[k];
  }
  LengthLoss out;
  out.delta1 = curve_length(RotationCurve(g.grid(), std::move(right)));
  out.delta2 = curve_length(RotationCurve(g.grid(), std::move(left)));
  out.delta = 0.5 * (out.delta1 + out.delta2);
  return out;
}

}  // namespace rotubes
