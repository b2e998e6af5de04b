#include "rotubes/gp_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rotubes/errors.hpp"
#include "rotubes/parallel.hpp"

namespace rotubes {

Rng substream(std::uint64_t seed, std::uint64_t replication, std::uint64_t curve,
              std::uint64_t coordinate) {
  auto split = [](std::uint64_t v) {
    return std::array<std::uint32_t, 2>{static_cast<std::uint32_t>(v),
                                        static_cast<std::uint32_t>(v >> 32)};
  };
  const auto s = split(seed);
  const auto r = split(replication);
  const auto c = split(curve);
  const auto d = split(coordinate);
  std::seed_seq seq{s[0], s[1], r[0], r[1], c[0], c[1], d[0], d[1]};
  return Rng(seq);
}

void ErrorProcessSpec::validate() const {
  if (family < 1 || family > 3) throw InvalidArgument("error family must be 1, 2 or 3");
  if (modulation < 1 || modulation > 3) throw InvalidArgument("modulation must be 1, 2 or 3");
  if (mixing < 1 || mixing > 2) throw InvalidArgument("mixing must be 1 or 2");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("sigma must be positive");
}

std::string ErrorProcessSpec::label() const {
  std::ostringstream os;
  os << "A^{" << family << "," << modulation << "," << mixing << "," << sigma << "}";
  return os.str();
}

double modulation_factor(int modulation, double t) {
  switch (modulation) {
    case 1:
      return 1.0;
    case 2:
      return 4.0;
    case 3:
      return std::sin(4.0 * std::numbers::pi * t) + 1.5;
    default:
      throw InvalidArgument("modulation must be 1, 2 or 3");
  }
}

const Eigen::Matrix3d& mixing_matrix(int mixing) {
  static const Eigen::Matrix3d identity = Eigen::Matrix3d::Identity();
  static const Eigen::Matrix3d mixed = [] {
    const double r = 1.0 / std::sqrt(3.0);
    Eigen::Matrix3d m;
    m << 1.0, 0.0, 0.0,
         0.5, 0.5, 0.0,
         r, r, r;
    return m;
  }();
  switch (mixing) {
    case 1:
      return identity;
    case 2:
      return mixed;
    default:
      throw InvalidArgument("mixing must be 1 or 2");
  }
}

std::vector<double> sample_error_path(int family, int modulation, const TimeGrid& grid, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t k_count = grid.size();
  std::vector<double> path(k_count);

  switch (family) {
    case 1: {
      const double b1 = normal(rng);
      const double b2 = normal(rng);
      for (std::size_t k = 0; k < k_count; ++k) {
        const double x = 0.5 * std::numbers::pi * grid[k];
        path[k] = b1 * std::sin(x) + b2 * std::cos(x);
      }
      break;
    }
    case 2: {
      std::array<double, 10> b;
      for (auto& v : b) v = normal(rng);
      for (std::size_t k = 0; k < k_count; ++k) {
        double num = 0.0;
        double den = 0.0;
        for (int i = 0; i < 10; ++i) {
          const double dt = grid[k] - i / 9.0;
          const double g = std::exp(-dt * dt / 0.2);
          num += b[i] * g;
          den += g * g;
        }
        path[k] = num / std::sqrt(den);
      }
      break;
    }
    case 3: {
      // exact AR(1) transition of dX = -5 X dt + sqrt(10) dW
      path[0] = normal(rng);
      for (std::size_t k = 1; k < k_count; ++k) {
        const double dt = grid[k] - grid[k - 1];
        const double decay = std::exp(-5.0 * dt);
        const double sd = std::sqrt(-std::expm1(-10.0 * dt));
        path[k] = decay * path[k - 1] + sd * normal(rng);
      }
      break;
    }
    default:
      throw InvalidArgument("error family must be 1, 2 or 3");
  }

  for (std::size_t k = 0; k < k_count; ++k) path[k] *= modulation_factor(modulation, grid[k]);
  return path;
}

namespace {

std::vector<AlgebraVector> mix(const ErrorProcessSpec& spec,
                               const std::array<std::vector<double>, 3>& e) {
  const Eigen::Matrix3d& m = mixing_matrix(spec.mixing);
  std::vector<AlgebraVector> a(e[0].size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    a[k] = spec.sigma * (m * AlgebraVector(e[0][k], e[1][k], e[2][k]));
  }
  return a;
}

}  // namespace

std::vector<AlgebraVector> sample_generating_process(const ErrorProcessSpec& spec,
                                                     const TimeGrid& grid, Rng& rng) {
  spec.validate();
  std::array<std::vector<double>, 3> e;
  for (auto& path : e) path = sample_error_path(spec.family, spec.modulation, grid, rng);
  return mix(spec, e);
}

std::vector<AlgebraVector> sample_generating_process(const ErrorProcessSpec& spec,
                                                     const TimeGrid& grid, std::uint64_t seed,
                                                     std::uint64_t replication,
                                                     std::uint64_t curve) {
  spec.validate();
  std::array<std::vector<double>, 3> e;
  for (std::uint64_t d = 0; d < 3; ++d) {
    Rng rng = substream(seed, replication, curve, d);
    e[d] = sample_error_path(spec.family, spec.modulation, grid, rng);
  }
  return mix(spec, e);
}

RotationCurve perturb_curve(const RotationCurve& center, const std::vector<AlgebraVector>& a) {
  if (a.size() != center.size()) throw InvalidArgument("perturbation length mismatch");
  std::vector<Rotation> values(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) values[k] = center[k] * exp_so3(a[k]);
  return RotationCurve(center.grid(), std::move(values));
}

RotationCurve sample_gp_curve(const ErrorProcessSpec& spec, const RotationCurve& center, Rng& rng) {
  return perturb_curve(center, sample_generating_process(spec, center.grid(), rng));
}

// --- coverage ------------------------------------------------------------------

CoverageReport coverage_experiment(const ErrorProcessSpec& spec, int n, int replications,
                                   const std::vector<double>& alphas, const TimeGrid& grid,
                                   std::uint64_t seed, const CoverageOptions& options) {
  spec.validate();
  if (n < 4) throw InvalidArgument("coverage experiment needs N >= 4");
  if (replications < 1) throw InvalidArgument("coverage experiment needs M >= 1");
  if (alphas.empty()) throw InvalidArgument("no alpha levels given");
  for (double a : alphas) {
    if (!(a > 0.0 && a <= 0.5)) throw InvalidArgument("alpha must lie in (0, 0.5]");
  }

  const std::size_t m = static_cast<std::size_t>(replications);
  const std::size_t levels = alphas.size();
  // covered_by_rep[r * levels + i]; failure_by_rep[r] is empty on success
  std::vector<char> covered_by_rep(m * levels, 0);
  std::vector<std::string> failure_by_rep(m);
  const RotationCurve center = RotationCurve::constant(grid);

  parallel_for(m, options.threads, [&](std::size_t r) {
    std::vector<RotationCurve> curves;
    curves.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      curves.push_back(perturb_curve(center, sample_generating_process(spec, grid, seed, r, i)));
    }
    try {
      const TubeFit fit = fit_tube(CurveSample(std::move(curves)), options.tube);
      for (std::size_t i = 0; i < levels; ++i) {
        const ConfidenceTube tube = finish_tube(fit, alphas[i], options.tube.signs);
        covered_by_rep[r * levels + i] = tube_contains(tube, center).all ? 1 : 0;
      }
    } catch (const SingularCovariance& e) {
      failure_by_rep[r] = e.kind();
    } catch (const DegenerateMean& e) {
      failure_by_rep[r] = e.kind();
    }
  });

  CoverageReport report;
  report.spec = spec;
  report.n = n;
  report.replications = replications;
  report.seed = seed;
  report.grid_size = grid.size();
  report.alphas = alphas;
  report.covered.assign(levels, 0);
  for (std::size_t r = 0; r < m; ++r) {
    if (!failure_by_rep[r].empty()) {
      ++report.failed;
      report.failure_kinds.push_back(failure_by_rep[r]);
      continue;
    }
    for (std::size_t i = 0; i < levels; ++i) report.covered[i] += covered_by_rep[r * levels + i];
  }
  if (report.failed > 0 && static_cast<double>(report.failed) > 0.001 * replications) {
    throw Error("CoverageAborted", std::to_string(report.failed) + " of " +
                                       std::to_string(replications) +
                                       " replications failed to produce a tube (limit 0.1%)");
  }
  for (std::size_t i = 0; i < levels; ++i) {
    const double rate = static_cast<double>(report.covered[i]) / replications;
    report.rates.push_back(rate);
    report.mc_stderr.push_back(std::sqrt(rate * (1.0 - rate) / replications));
  }
  return report;
}

std::vector<double> max_hotelling_draws(const ErrorProcessSpec& spec, int n, int reps,
                                        const TimeGrid& grid, std::uint64_t seed,
                                        unsigned threads) {
  spec.validate();
  if (n < 4) throw InvalidArgument("Hotelling draws need N >= 4");
  if (reps < 1) throw InvalidArgument("need at least one replication");
  std::vector<double> out(static_cast<std::size_t>(reps));
  parallel_for(out.size(), threads, [&](std::size_t r) {
    std::vector<std::vector<AlgebraVector>> a(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) a[i] = sample_generating_process(spec, grid, seed, r, i);
    const HotellingProcess h = genuine_hotelling(grid, a);
    out[r] = *std::max_element(h.statistic->begin(), h.statistic->end());
  });
  return out;
}

double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw InvalidArgument("quantile of an empty set");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double mc_quantile_oracle(const ErrorProcessSpec& spec, int n, int reps, double alpha,
                          const TimeGrid& grid, std::uint64_t seed, unsigned threads) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  return empirical_quantile(max_hotelling_draws(spec, n, reps, grid, seed, threads), 1.0 - alpha);
}

const std::vector<ReferenceCoverageRow>& reference_coverage_table() {
  // rates in percent, 1 - alpha = 85/90/95, families i = 1, 2, 3
  static const std::vector<ReferenceCoverageRow> table = {
      {10, 0.05, 1, 1, {{{86.1, 91.0, 95.0}, {85.3, 90.1, 95.6}, {90.4, 93.9, 96.6}}}},
      {15, 0.05, 1, 1, {{{85.0, 90.1, 95.4}, {85.7, 90.7, 94.9}, {89.4, 93.0, 96.6}}}},
      {30, 0.05, 1, 1, {{{85.1, 91.0, 94.9}, {86.4, 90.6, 94.7}, {90.1, 93.5, 96.5}}}},
      {10, 0.05, 1, 2, {{{85.3, 89.9, 94.6}, {86.1, 90.9, 95.4}, {90.1, 93.1, 97.2}}}},
      {15, 0.05, 1, 2, {{{85.4, 89.8, 95.4}, {85.9, 90.5, 94.9}, {90.3, 93.0, 96.7}}}},
      {30, 0.05, 1, 2, {{{85.0, 90.2, 95.6}, {85.9, 89.8, 94.9}, {90.2, 92.9, 96.6}}}},
      {10, 0.05, 3, 1, {{{84.8, 90.0, 95.3}, {86.2, 90.9, 95.5}, {91.0, 93.6, 97.1}}}},
      {15, 0.05, 3, 1, {{{84.3, 89.9, 95.2}, {86.2, 90.6, 95.0}, {90.3, 93.0, 96.2}}}},
      {30, 0.05, 3, 1, {{{84.7, 90.1, 95.2}, {86.6, 90.8, 94.9}, {90.0, 92.6, 96.5}}}},
      {10, 0.05, 3, 2, {{{86.0, 90.6, 95.0}, {85.4, 90.3, 95.5}, {90.3, 93.3, 96.9}}}},
      {15, 0.05, 3, 2, {{{84.9, 90.0, 94.7}, {85.4, 90.5, 95.3}, {90.1, 93.5, 97.3}}}},
      {30, 0.05, 3, 2, {{{85.1, 89.7, 95.3}, {85.9, 90.7, 94.9}, {89.9, 92.9, 96.5}}}},
      {10, 0.1, 1, 1, {{{84.7, 90.8, 94.9}, {85.2, 91.4, 95.4}, {90.3, 93.4, 96.7}}}},
      {15, 0.1, 1, 1, {{{84.9, 89.8, 95.1}, {86.1, 90.4, 95.1}, {89.5, 91.6, 96.6}}}},
      {30, 0.1, 1, 1, {{{85.0, 90.5, 95.1}, {85.8, 91.1, 95.5}, {89.9, 92.7, 96.3}}}},
      {10, 0.1, 1, 2, {{{85.5, 90.4, 94.5}, {86.3, 90.8, 95.1}, {90.3, 93.3, 96.4}}}},
      {15, 0.1, 1, 2, {{{85.4, 89.9, 94.7}, {86.1, 89.9, 95.3}, {89.9, 93.1, 95.9}}}},
      {30, 0.1, 1, 2, {{{85.1, 89.6, 95.0}, {85.4, 90.7, 95.7}, {89.9, 93.1, 96.4}}}},
      {10, 0.1, 3, 1, {{{85.4, 90.1, 96.0}, {85.4, 90.2, 94.6}, {90.1, 93.6, 97.0}}}},
      {15, 0.1, 3, 1, {{{84.1, 89.6, 94.7}, {86.0, 90.5, 95.0}, {88.9, 92.9, 96.5}}}},
      {30, 0.1, 3, 1, {{{85.4, 90.3, 94.9}, {85.3, 90.1, 95.3}, {88.9, 93.4, 96.5}}}},
      {10, 0.1, 3, 2, {{{84.6, 90.5, 95.1}, {86.5, 91.0, 95.3}, {89.9, 93.4, 96.3}}}},
      {15, 0.1, 3, 2, {{{85.2, 90.2, 95.1}, {86.2, 89.8, 95.3}, {89.8, 93.1, 96.2}}}},
      {30, 0.1, 3, 2, {{{85.7, 89.6, 95.0}, {85.1, 90.6, 95.5}, {90.9, 93.2, 96.6}}}},
      {10, 0.6, 1, 1, {{{82.4, 87.7, 93.9}, {81.6, 87.3, 93.6}, {87.1, 91.2, 95.5}}}},
      {15, 0.6, 1, 1, {{{79.9, 85.7, 92.7}, {80.7, 86.4, 92.9}, {85.2, 90.2, 94.6}}}},
      {30, 0.6, 1, 1, {{{79.4, 85.5, 92.4}, {78.7, 84.8, 92.3}, {82.8, 87.6, 92.9}}}},
      {10, 0.6, 1, 2, {{{81.5, 87.7, 93.8}, {82.0, 88.6, 93.8}, {88.1, 92.1, 96.0}}}},
      {15, 0.6, 1, 2, {{{81.9, 86.8, 93.1}, {81.0, 87.1, 93.2}, {86.3, 90.5, 94.7}}}},
      {30, 0.6, 1, 2, {{{80.0, 85.7, 91.9}, {80.9, 85.6, 92.1}, {85.2, 87.6, 93.9}}}},
      {10, 0.6, 3, 1, {{{83.0, 88.7, 94.7}, {84.2, 88.8, 94.2}, {88.1, 91.6, 96.0}}}},
      {15, 0.6, 3, 1, {{{81.9, 88.5, 93.5}, {80.9, 87.2, 93.8}, {86.0, 90.5, 95.1}}}},
      {30, 0.6, 3, 1, {{{80.2, 86.7, 93.1}, {80.0, 86.3, 92.8}, {85.0, 89.5, 94.0}}}},
      {10, 0.6, 3, 2, {{{84.3, 89.7, 94.4}, {84.2, 89.0, 94.9}, {87.4, 92.5, 96.2}}}},
      {15, 0.6, 3, 2, {{{81.5, 86.8, 93.5}, {81.6, 87.2, 94.0}, {86.2, 89.7, 95.2}}}},
      {30, 0.6, 3, 2, {{{81.3, 86.6, 92.4}, {81.8, 86.7, 92.4}, {85.8, 89.2, 93.2}}}},
  };
  return table;
}

}  // namespace rotubes
