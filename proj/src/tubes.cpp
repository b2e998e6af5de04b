#include "rotubes/tubes.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rotubes/errors.hpp"

namespace rotubes {

void check_covariance(const Eigen::Matrix3d& s, std::size_t k, double t) {
  if (!s.allFinite() || (s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw SingularCovariance(k, t);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(s, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  if (!(ev(2) > 0.0) || !(ev(0) > 1e-12 * ev(2))) throw SingularCovariance(k, t);
}

double mahalanobis(const Eigen::Matrix3d& s, int n, const AlgebraVector& a) {
  return n * a.dot(s.llt().solve(a));
}

namespace {

void require_hotelling_size(std::size_t n) {
  if (n < 4) {
    throw InvalidArgument("Hotelling process needs N >= 4 curves, got " + std::to_string(n));
  }
}

}  // namespace

HotellingProcess hotelling(const ResidualField& res) {
  const std::size_t n = res.curves();
  require_hotelling_size(n);
  const std::size_t k_count = res.times();

  HotellingProcess out{res.grid, static_cast<int>(n), {}, {}, std::nullopt};
  out.covariance.resize(k_count);
  out.mean.resize(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
    AlgebraVector m = AlgebraVector::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const AlgebraVector& x = res.sample[i][k];
      s.noalias() += x * x.transpose();
      m += x;
    }
    s /= static_cast<double>(n - 1);
    s = 0.5 * (s + s.transpose());
    check_covariance(s, k, res.grid[k]);
    out.covariance[k] = s;
    out.mean[k] = m / static_cast<double>(n);
  }

  if (res.population) {
    std::vector<double> h(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
      out.mean[k] = (*res.population)[k];
      h[k] = mahalanobis(out.covariance[k], out.n, out.mean[k]);
    }
    out.statistic = std::move(h);
  }
  return out;
}

HotellingProcess hotelling(const CurveSample& sample, const RotationCurve* center) {
  require_hotelling_size(sample.size());
  return hotelling(residuals(sample, center));
}

HotellingProcess genuine_hotelling(const TimeGrid& grid,
                                   const std::vector<std::vector<AlgebraVector>>& a) {
  const std::size_t n = a.size();
  require_hotelling_size(n);
  const std::size_t k_count = grid.size();
  HotellingProcess out{grid, static_cast<int>(n), {}, {}, std::vector<double>(k_count)};
  out.covariance.resize(k_count);
  out.mean.resize(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    AlgebraVector m = AlgebraVector::Zero();
    for (std::size_t i = 0; i < n; ++i) m += a[i][k];
    m /= static_cast<double>(n);
    Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const AlgebraVector d = a[i][k] - m;
      s.noalias() += d * d.transpose();
    }
    s /= static_cast<double>(n - 1);
    check_covariance(s, k, grid[k]);
    out.covariance[k] = s;
    out.mean[k] = m;
    (*out.statistic)[k] = mahalanobis(s, out.n, m);
  }
  return out;
}

// --- tube construction -------------------------------------------------------

TubeFit fit_tube(const CurveSample& sample, const TubeOptions& options) {
  require_hotelling_size(sample.size());
  const ResidualField res = residuals(sample);
  HotellingProcess proc = hotelling(res);
  return TubeFit{res.center_estimate, std::move(proc.covariance), proc.n,
                 lkc_estimate(res, options.frame)};
}

ConfidenceTube finish_tube(const TubeFit& fit, double alpha, EcSigns signs) {
  const double h = solve_quantile(alpha, EcContext(fit.n, fit.lkc), signs);
  return ConfidenceTube{fit.center, fit.covariance, h, alpha, fit.n, fit.lkc};
}

ConfidenceTube build_tube(const CurveSample& sample, double alpha, const TubeOptions& options) {
  if (!(alpha > 0.0 && alpha <= 0.5)) {
    throw InvalidArgument("alpha must lie in (0, 0.5], got " + std::to_string(alpha));
  }
  return finish_tube(fit_tube(sample, options), alpha, options.signs);
}

Membership tube_contains(const ConfidenceTube& tube, const RotationCurve& curve) {
  require_same_grid(tube.grid(), curve.grid(), "tube_contains");
  Membership out;
  const std::size_t k_count = curve.size();
  out.inside.resize(k_count);
  out.statistic.resize(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const AlgebraVector a = log_so3(tube.center[k].transpose() * curve[k]);
    out.statistic[k] = mahalanobis(tube.covariance[k], tube.n, a);
    out.inside[k] = out.statistic[k] <= tube.hquant;
    out.all = out.all && out.inside[k];
  }
  return out;
}

ConfidenceTube act_on_tube(const ConfidenceTube& tube, const SpatioTemporalAction& act,
                           const TimeGrid& target) {
  const RotationCurve center = apply_action(tube.center, act, target);
  const Eigen::Matrix3d& q = act.right.matrix();
  const TimeGrid& grid = tube.grid();
  std::vector<Eigen::Matrix3d> cov(target.size());
  for (std::size_t k = 0; k < target.size(); ++k) {
    const double s = act.warp(target[k]);
    const std::size_t j = grid.segment(s);
    const double u = std::clamp((s - grid[j]) / (grid[j + 1] - grid[j]), 0.0, 1.0);
    Eigen::Matrix3d sk;
    if (u == 0.0) {
      sk = tube.covariance[j];
    } else if (u == 1.0) {
      sk = tube.covariance[j + 1];
    } else {
      sk = (1.0 - u) * tube.covariance[j] + u * tube.covariance[j + 1];
    }
    cov[k] = q.transpose() * sk * q;
  }
  return ConfidenceTube{center, std::move(cov), tube.hquant, tube.alpha, tube.n, tube.lkc};
}

ConfidenceTube act_on_tube(const ConfidenceTube& tube, const SpatioTemporalAction& act) {
  return act_on_tube(tube, act, tube.grid());
}

// --- overlap -------------------------------------------------------------------

std::vector<Locus> false_runs(const TimeGrid& grid, const std::vector<bool>& flags) {
  std::vector<Locus> loci;
  std::size_t k = 0;
  while (k < flags.size()) {
    if (flags[k]) {
      ++k;
      continue;
    }
    std::size_t last = k;
    while (last + 1 < flags.size() && !flags[last + 1]) ++last;
    loci.push_back({k, last, grid[k], grid[last]});
    k = last + 1;
  }
  return loci;
}

namespace {

// Minimizes |J z - c|^2 over the unit ball.
Eigen::Vector3d ball_least_squares(const Eigen::Matrix3d& j, const Eigen::Vector3d& c) {
  const Eigen::Matrix3d a = j.transpose() * j;
  const Eigen::Vector3d b = j.transpose() * c;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(a);
  const Eigen::Vector3d lam = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::Vector3d beta = eig.eigenvectors().transpose() * b;
  const double floor = 1e-14 * std::max(lam.maxCoeff(), 1e-300);

  auto solve = [&](double mu) {
    Eigen::Vector3d y;
    for (int i = 0; i < 3; ++i) {
      const double d = lam(i) + mu;
      y(i) = d > floor ? beta(i) / d : 0.0;
    }
    return Eigen::Vector3d(eig.eigenvectors() * y);
  };

  Eigen::Vector3d z = solve(0.0);
  if (z.norm() <= 1.0) return z;
  double lo = 0.0;
  double hi = std::max(b.norm(), 1e-300);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (solve(mid).norm() > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  z = solve(hi);
  const double nz = z.norm();
  return nz > 1.0 ? Eigen::Vector3d(z / nz) : z;
}

struct OverlapProblem {
  Eigen::Matrix3d d;          // cb^T ca
  Eigen::Matrix3d to_u;       // w -> u
  Eigen::Matrix3d whiten_b;   // sqrt(N_b) L_b^{-1}

  Eigen::Vector3d residual(const Eigen::Vector3d& w, AlgebraVector* m_out = nullptr,
                           AlgebraVector* u_out = nullptr) const {
    const AlgebraVector u = to_u * w;
    const AlgebraVector m = log_so3(Rotation::trusted(d) * exp_so3(u));
    if (m_out) *m_out = m;
    if (u_out) *u_out = u;
    return whiten_b * m;
  }

  double value(const Eigen::Vector3d& w) const { return residual(w).squaredNorm(); }

  double minimize(Eigen::Vector3d w) const {
    constexpr int kIterations = 200;
    AlgebraVector m;
    AlgebraVector u;
    Eigen::Vector3d g = residual(w, &m, &u);
    double f = g.squaredNorm();
    for (int it = 0; it < kIterations && f > 0.0; ++it) {
      const Eigen::Matrix3d jac = whiten_b * right_jacobian_inverse(m) * right_jacobian(u) * to_u;
      const Eigen::Vector3d target = ball_least_squares(jac, jac * w - g);
      const Eigen::Vector3d dir = target - w;
      if (dir.norm() < 1e-15) break;

      bool improved = false;
      for (double step = 1.0; step > 1e-10; step *= 0.5) {
        Eigen::Vector3d cand = w + step * dir;
        const double cn = cand.norm();
        if (cn > 1.0) cand /= cn;
        AlgebraVector cm;
        AlgebraVector cu;
        const Eigen::Vector3d cg = residual(cand, &cm, &cu);
        const double cf = cg.squaredNorm();
        if (cf < f) {
          const double gain = f - cf;
          w = cand;
          g = cg;
          m = cm;
          u = cu;
          f = cf;
          improved = gain > 1e-15 * std::max(f, 1e-300);
          break;
        }
      }
      if (!improved) break;
    }
    return f;
  }
};

}  // namespace

double min_statistic_over_tube(const Rotation& ca, const Eigen::Matrix3d& sa, int na, double ha,
                               const Rotation& cb, const Eigen::Matrix3d& sb, int nb) {
  const Eigen::Matrix3d la = sa.llt().matrixL();
  const Eigen::Matrix3d lb = sb.llt().matrixL();
  OverlapProblem p;
  p.d = (cb.transpose() * ca).matrix();
  p.to_u = std::sqrt(std::max(ha, 0.0) / na) * la;
  p.whiten_b = std::sqrt(static_cast<double>(nb)) * lb.inverse();

  // b's center, expressed in a's whitened coordinates
  const AlgebraVector u_star = log_so3(ca.transpose() * cb);
  if (ha <= 0.0) return p.value(Eigen::Vector3d::Zero());
  const Eigen::Vector3d w_star = p.to_u.fullPivLu().solve(u_star);
  if (w_star.norm() <= 1.0) return 0.0;

  const double from_center = p.minimize(Eigen::Vector3d::Zero());
  const double from_boundary = p.minimize(w_star.normalized());
  return std::min(from_center, from_boundary);
}

OverlapReport compare_tubes(const ConfidenceTube& a, const ConfidenceTube& b) {
  require_same_grid(a.grid(), b.grid(), "compare_tubes");
  const std::size_t k_count = a.grid().size();
  OverlapReport out{a.grid(), std::vector<bool>(k_count), std::vector<double>(k_count), {}};
  for (std::size_t k = 0; k < k_count; ++k) {
    const double m = min_statistic_over_tube(a.center[k], a.covariance[k], a.n, a.hquant,
                                             b.center[k], b.covariance[k], b.n);
    out.separation[k] = b.hquant > 0.0 ? m / b.hquant
                                       : (m > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    out.overlap[k] = !(m > b.hquant * (1.0 + 1e-6));
  }
  out.loci = false_runs(out.grid, out.overlap);
  return out;
}

}  // namespace rotubes
