#include "rotubes/gkf.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numbers>
#include <string>

#include "rotubes/errors.hpp"

namespace rotubes {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_dof(int n) {
  if (n < 3) throw InvalidDof("EC densities need N >= 3, got N = " + std::to_string(n));
}

Eigen::Matrix3d principal_frame(const std::vector<std::vector<AlgebraVector>>& x) {
  Eigen::Matrix3d pooled = Eigen::Matrix3d::Zero();
  for (const auto& row : x) {
    for (const auto& v : row) pooled.noalias() += v * v.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(pooled);
  return eig.eigenvectors();
}

}  // namespace

EcContext::EcContext(int n_, double l1_) : n(n_), l1(l1_) {
  require_dof(n);
  if (!(l1 >= 0.0) || !std::isfinite(l1)) {
    throw InvalidArgument("Lipschitz-Killing curvature must be finite and >= 0");
  }
}

double t_ec_density(int j, double t, int n) {
  require_dof(n);
  const double nu = n - 1.0;
  const double base = 1.0 + t * t / nu;
  const double decay = std::pow(base, 1.0 - n / 2.0);
  switch (j) {
    case 0: {
      const boost::math::students_t dist(nu);
      return boost::math::cdf(boost::math::complement(dist, t));
    }
    case 1:
      return decay / kTwoPi;
    case 2: {
      const double ratio = std::exp(std::lgamma(n / 2.0) - std::lgamma(nu / 2.0)) / std::sqrt(nu / 2.0);
      return std::pow(kTwoPi, -1.5) * ratio * t * decay;
    }
    case 3:
      return std::pow(kTwoPi, -2.0) * ((n - 2.0) / nu * t * t - 1.0) * decay;
    default:
      throw InvalidArgument("EC density index must be in 0..3, got " + std::to_string(j));
  }
}

double lkc_estimate(const std::vector<std::vector<AlgebraVector>>& x, LkcFrame frame) {
  const std::size_t n_curves = x.size();
  if (n_curves < 2) throw InvalidArgument("lkc_estimate needs N >= 2 curves");
  const std::size_t k_times = x.front().size();
  if (k_times < 2) throw InvalidArgument("lkc_estimate needs K >= 2 time points");
  for (const auto& row : x) {
    if (row.size() != k_times) throw InvalidArgument("ragged residual array");
  }

  const Eigen::Matrix3d basis =
      frame == LkcFrame::Principal ? principal_frame(x) : Eigen::Matrix3d::Identity();

  // normalized[k] is 3 x N: row d holds the unit-normalized d-th column of R_{t_k}
  auto normalized_at = [&](std::size_t k) {
    Eigen::Matrix<double, 3, Eigen::Dynamic> r(3, n_curves);
    for (std::size_t n = 0; n < n_curves; ++n) r.col(n) = basis.transpose() * x[n][k];
    for (int d = 0; d < 3; ++d) {
      const double norm = r.row(d).norm();
      if (!(norm > 0.0)) {
        throw ZeroResidualColumn("residual coordinate " + std::to_string(d) +
                                 " vanishes at grid index " + std::to_string(k));
      }
      r.row(d) /= norm;
    }
    return r;
  };

  double total = 0.0;
  auto prev = normalized_at(0);
  for (std::size_t k = 1; k < k_times; ++k) {
    auto cur = normalized_at(k);
    for (int d = 0; d < 3; ++d) total += (cur.row(d) - prev.row(d)).norm();
    prev = std::move(cur);
  }
  return total / 3.0;
}

double lkc_estimate(const ResidualField& residuals, LkcFrame frame) {
  return lkc_estimate(residuals.sample, frame);
}

double expected_ec(double h, const EcContext& ctx, EcSigns signs) {
  const double s = std::sqrt(std::max(h, 0.0));
  const double sign = signs == EcSigns::Summed ? 1.0 : -1.0;
  const double mu0 = kSphereIntrinsicVolume[0];
  const double mu2 = kSphereIntrinsicVolume[2];
  const double rho0 = t_ec_density(0, s, ctx.n);
  const double rho1 = t_ec_density(1, s, ctx.n);
  const double rho2 = t_ec_density(2, s, ctx.n);
  const double rho3 = t_ec_density(3, s, ctx.n);
  return mu0 * rho0 + sign * mu2 * rho2 + sign * ctx.l1 * (mu0 * rho1 + mu2 * rho3);
}

double solve_quantile(double alpha, const EcContext& ctx, EcSigns signs) {
  if (!(alpha > 0.0 && alpha <= 0.5)) {
    throw InvalidArgument("alpha must lie in (0, 0.5], got " + std::to_string(alpha));
  }
  auto f = [&](double h) { return expected_ec(h, ctx, signs); };

  double hi = 100.0;
  int doublings = 0;
  while (f(hi) >= alpha) {
    if (++doublings > 60) {
      throw NoRoot("expected Euler characteristic never falls below alpha = " +
                   std::to_string(alpha));
    }
    hi *= 2.0;
  }

  // largest scanned h with f(h) >= 0.5; f(0) = 1 so one always exists
  constexpr int kScan = 4096;
  double lo = 0.0;
  for (int i = kScan - 1; i >= 0; --i) {
    const double h = hi * static_cast<double>(i) / kScan;
    if (f(h) >= 0.5) {
      lo = h;
      break;
    }
  }

  double f_lo = f(lo);
  double f_hi = f(hi);
  for (int it = 0; it < 400 && hi - lo >= 1e-8; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = f(mid);
    if (f_mid >= alpha) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
  }

  const double mid = 0.5 * (lo + hi);
  const double f_mid = f(mid);
  if (!(f_lo > f_mid && f_mid > f_hi)) {
    throw NonMonotoneBracket("expected Euler characteristic is not decreasing on [" +
                             std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return lo + (f_lo - alpha) / (f_lo - f_hi) * (hi - lo);
}

}  // namespace rotubes
