#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rotubes/curve.hpp"
#include "rotubes/tubes.hpp"

namespace rotubes {

using Rng = std::mt19937_64;

/// Independent generator keyed by (seed, replication, curve, coordinate).
/// Streams do not depend on the order in which they are requested.
Rng substream(std::uint64_t seed, std::uint64_t replication, std::uint64_t curve,
              std::uint64_t coordinate);

/**
 * Error process A_t = M_j (sigma e_1, sigma e_2, sigma e_3)^T with three
 * independent scalar paths e_s of family i and variance modulation f_l:
 *
 *   family 1: f(t) (b1 sin(pi t / 2) + b2 cos(pi t / 2))
 *   family 2: f(t) sum_i b_i g_i(t) / sqrt(sum_i g_i(t)^2),
 *             g_i(t) = exp(-(t - (i-1)/9)^2 / 0.2), i = 1..10
 *   family 3: f(t) X_t, X an Ornstein-Uhlenbeck process with X_0 = b0,
 *             dX = -5 X dt + sqrt(10) dW (stationary, unit variance)
 *
 * with f_1 = 1, f_2 = 4, f_3(t) = sin(4 pi t) + 1.5, M_1 = I and M_2 mixing
 * the coordinates. Every path has pointwise variance f_l(t)^2.
 */
struct ErrorProcessSpec {
  int family = 1;
  int modulation = 1;
  int mixing = 1;
  double sigma = 0.05;

  void validate() const;
  std::string label() const;  // "A^{i,l,j,sigma}"
};

double modulation_factor(int modulation, double t);
const Eigen::Matrix3d& mixing_matrix(int mixing);

/// One scalar path of family `family` with modulation `modulation`.
std::vector<double> sample_error_path(int family, int modulation, const TimeGrid& grid, Rng& rng);

/// a_t = M_j sigma (e_1, e_2, e_3); the coordinates draw from `rng` in order.
std::vector<AlgebraVector> sample_generating_process(const ErrorProcessSpec& spec,
                                                     const TimeGrid& grid, Rng& rng);

/// Same with one substream per coordinate.
std::vector<AlgebraVector> sample_generating_process(const ErrorProcessSpec& spec,
                                                     const TimeGrid& grid, std::uint64_t seed,
                                                     std::uint64_t replication,
                                                     std::uint64_t curve);

/// center(t) Exp(hat(a_t)).
RotationCurve perturb_curve(const RotationCurve& center, const std::vector<AlgebraVector>& a);

RotationCurve sample_gp_curve(const ErrorProcessSpec& spec, const RotationCurve& center, Rng& rng);

struct CoverageReport {
  ErrorProcessSpec spec;
  int n = 0;
  int replications = 0;
  std::uint64_t seed = 0;
  std::size_t grid_size = 0;
  std::vector<double> alphas;
  std::vector<double> rates;
  std::vector<double> mc_stderr;
  std::vector<int> covered;
  /// replications whose tube could not be built (counted as non-covering)
  int failed = 0;
  std::vector<std::string> failure_kinds;
};

struct CoverageOptions {
  TubeOptions tube;
  unsigned threads = 0;  // 0: hardware concurrency
};

/**
 * Simulates M samples of N curves about the identity, builds a tube per
 * alpha and records whether the identity lies inside at every grid point.
 * Replications whose tube cannot be built (singular covariance, degenerate
 * mean) count as non-covering when they are at most 0.1% of M; beyond that
 * the run throws.
 */
CoverageReport coverage_experiment(const ErrorProcessSpec& spec, int n, int replications,
                                   const std::vector<double>& alphas, const TimeGrid& grid,
                                   std::uint64_t seed, const CoverageOptions& options = {});

/// reps draws of max_t H^{a,N}_t computed from generating residuals.
std::vector<double> max_hotelling_draws(const ErrorProcessSpec& spec, int n, int reps,
                                        const TimeGrid& grid, std::uint64_t seed,
                                        unsigned threads = 0);

/// Empirical (1 - alpha)-quantile of max_t H^{a,N}_t.
double mc_quantile_oracle(const ErrorProcessSpec& spec, int n, int reps, double alpha,
                          const TimeGrid& grid, std::uint64_t seed, unsigned threads = 0);

/// Empirical quantile (linear interpolation between order statistics).
double empirical_quantile(std::vector<double> values, double p);

/// One row of the reference coverage table: rates in percent for
/// 1 - alpha = 0.85, 0.90, 0.95 and error families i = 1, 2, 3.
struct ReferenceCoverageRow {
  int n;
  double sigma;
  int modulation;
  int mixing;
  std::array<std::array<double, 3>, 3> percent;  // [family-1][alpha index]
};

const std::vector<ReferenceCoverageRow>& reference_coverage_table();

}  // namespace rotubes
