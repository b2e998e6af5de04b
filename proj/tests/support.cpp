#include "support.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace testing {

using rotubes::CurveSample;
using rotubes::RotationCurve;
using rotubes::TimeGrid;
using rotubes::Warp;

namespace {
constexpr double kPi = std::numbers::pi;
}

Rotation random_rotation(TestRng& rng) {
  std::normal_distribution<double> g;
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  return Rotation::trusted(q.toRotationMatrix());
}

AlgebraVector random_vector(TestRng& rng, double max_norm) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, max_norm);
  AlgebraVector v(g(rng), g(rng), g(rng));
  return v.normalized() * u(rng);
}

Eigen::Matrix3d random_spd(TestRng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  const Eigen::Matrix3d q = random_rotation(rng).matrix();
  const Eigen::Vector3d ev(u(rng), u(rng), u(rng));
  return q * ev.asDiagonal() * q.transpose();
}

Eigen::Matrix3d axis_angle_matrix(const Eigen::Vector3d& axis, double angle) {
  Eigen::Matrix3d k;
  k << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
  return std::cos(angle) * Eigen::Matrix3d::Identity() + std::sin(angle) * k +
         (1.0 - std::cos(angle)) * axis * axis.transpose();
}

double trace_angle(const Eigen::Matrix3d& r) {
  return std::acos(std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0));
}

Eigen::Matrix3d grid_search_min(const std::function<double(const Eigen::Matrix3d&)>& f) {
  auto to_matrix = [](const Eigen::Vector3d& v) -> Eigen::Matrix3d {
    const double n = v.norm();
    if (n == 0.0) return Eigen::Matrix3d::Identity();
    return axis_angle_matrix(v / n, n);
  };
  Eigen::Vector3d best = Eigen::Vector3d::Zero();
  double best_val = f(Eigen::Matrix3d::Identity());
  const int coarse = 30;
  double step = 2.0 * kPi / coarse;
  for (int i = 0; i <= coarse; ++i) {
    for (int j = 0; j <= coarse; ++j) {
      for (int k = 0; k <= coarse; ++k) {
        const Eigen::Vector3d v(-kPi + i * step, -kPi + j * step, -kPi + k * step);
        if (v.norm() > kPi) continue;
        const double val = f(to_matrix(v));
        if (val < best_val) {
          best_val = val;
          best = v;
        }
      }
    }
  }
  for (int round = 0; round < 8; ++round) {
    const Eigen::Vector3d c = best;
    const double fine = step / 5.0;
    for (int i = -5; i <= 5; ++i) {
      for (int j = -5; j <= 5; ++j) {
        for (int k = -5; k <= 5; ++k) {
          const Eigen::Vector3d v = c + fine * Eigen::Vector3d(i, j, k);
          const double val = f(to_matrix(v));
          if (val < best_val) {
            best_val = val;
            best = v;
          }
        }
      }
    }
    step = fine;
  }
  return to_matrix(best);
}

namespace {
double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                    double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double diff = left + right - whole;
  if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}
}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, tol, 50);
}

double student_t_pdf(double x, double nu) {
  const double logc = std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0) -
                      0.5 * std::log(nu * kPi);
  return std::exp(logc - (nu + 1.0) / 2.0 * std::log1p(x * x / nu));
}

Warp grid_aligned_warp(const TimeGrid& grid, TestRng& rng, int interior_knots) {
  const std::size_t k = grid.size();
  std::vector<std::size_t> idx(k - 2);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i + 1;
  auto pick = [&] {
    std::vector<std::size_t> out = idx;
    std::shuffle(out.begin(), out.end(), rng);
    out.resize(std::min<std::size_t>(interior_knots, out.size()));
    std::sort(out.begin(), out.end());
    return out;
  };
  const auto us = pick();
  const auto vs = pick();
  std::vector<Warp::Knot> knots{{0.0, 0.0}};
  for (std::size_t i = 0; i < us.size(); ++i) knots.emplace_back(grid[us[i]], grid[vs[i]]);
  knots.emplace_back(1.0, 1.0);
  return Warp(std::move(knots));
}

rotubes::SpatioTemporalAction random_action(const TimeGrid& grid, TestRng& rng) {
  std::uniform_int_distribution<int> nk(0, 4);
  return {random_rotation(rng), random_rotation(rng), grid_aligned_warp(grid, rng, nk(rng))};
}

CurveSample smooth_sample(const RotationCurve& center, int n, double sigma, TestRng& rng) {
  std::normal_distribution<double> g;
  std::vector<RotationCurve> curves;
  const TimeGrid& grid = center.grid();
  for (int c = 0; c < n; ++c) {
    Eigen::Matrix<double, 3, 3> coef;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) coef(i, j) = g(rng);
    }
    std::vector<Rotation> values;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double t = grid[k];
      const Eigen::Vector3d basis(1.0, std::sin(2.0 * t), std::cos(3.0 * t));
      const Eigen::Vector3d a = sigma * coef * basis;
      const double na = a.norm();
      const Eigen::Matrix3d e = na == 0.0 ? Eigen::Matrix3d::Identity() : axis_angle_matrix(a / na, na);
      values.push_back(Rotation::trusted(center[k].matrix() * e));
    }
    curves.emplace_back(grid, std::move(values));
  }
  return CurveSample(std::move(curves));
}

double mc_min_statistic(const Rotation& ca, const Eigen::Matrix3d& sa, int na, double ha,
                        const Rotation& cb, const Eigen::Matrix3d& sb, int nb, int points,
                        TestRng& rng) {
  const Eigen::Matrix3d la = Eigen::LLT<Eigen::Matrix3d>(sa).matrixL();
  const Eigen::Matrix3d sb_inv = sb.inverse();
  const double radius = std::sqrt(ha / na);
  const Eigen::Matrix3d rel = cb.matrix().transpose() * ca.matrix();
  std::uniform_real_distribution<double> cube(-1.0, 1.0);
  std::normal_distribution<double> g;
  double best = std::numeric_limits<double>::infinity();
  for (int p = 0; p < points; ++p) {
    Eigen::Vector3d z;
    if (p % 2 == 0) {
      do {
        z = Eigen::Vector3d(cube(rng), cube(rng), cube(rng));
      } while (z.squaredNorm() > 1.0);
    } else {
      z = Eigen::Vector3d(g(rng), g(rng), g(rng)).normalized();
    }
    const Eigen::Vector3d u = radius * la * z;
    const double nu = u.norm();
    const Eigen::Matrix3d eu = nu == 0.0 ? Eigen::Matrix3d::Identity() : axis_angle_matrix(u / nu, nu);
    const AlgebraVector m = rotubes::log_so3(Rotation::trusted(rel * eu));
    best = std::min(best, nb * m.dot(sb_inv * m));
  }
  return best;
}

double max_abs_diff(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testing
