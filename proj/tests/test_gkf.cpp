#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rotubes/errors.hpp"
#include "rotubes/gkf.hpp"
#include "rotubes/gp_sim.hpp"
#include "support.hpp"

using namespace rotubes;

namespace {

constexpr double kPi = std::numbers::pi;

// closed forms written with tgamma instead of log-gamma ratios
double rho1(double t, int n) { return std::pow(1.0 + t * t / (n - 1.0), 1.0 - n / 2.0) / (2.0 * kPi); }
double rho2(double t, int n) {
  const double c = std::tgamma(n / 2.0) / (std::sqrt((n - 1.0) / 2.0) * std::tgamma((n - 1.0) / 2.0));
  return std::pow(2.0 * kPi, -1.5) * c * t * std::pow(1.0 + t * t / (n - 1.0), 1.0 - n / 2.0);
}
double rho3(double t, int n) {
  return std::pow(2.0 * kPi, -2.0) * ((n - 2.0) / (n - 1.0) * t * t - 1.0) *
         std::pow(1.0 + t * t / (n - 1.0), 1.0 - n / 2.0);
}

double eec_oracle(double h, int n, double l1, bool summed) {
  const double t = std::sqrt(h);
  const double rho0 = 0.5 - testing::adaptive_simpson(
                                [&](double u) { return testing::student_t_pdf(u, n - 1.0); }, 0.0,
                                t, 1e-13);
  const double s = summed ? 1.0 : -1.0;
  return 2.0 * rho0 + s * 4.0 * kPi * rho2(t, n) + s * l1 * (2.0 * rho1(t, n) + 4.0 * kPi * rho3(t, n));
}

std::vector<std::vector<AlgebraVector>> trig_residuals(int n, std::size_t k, std::uint64_t seed) {
  const TimeGrid grid = TimeGrid::uniform(k);
  const ErrorProcessSpec spec{1, 1, 1, 1.0};
  std::vector<std::vector<AlgebraVector>> x;
  for (int c = 0; c < n; ++c) x.push_back(sample_generating_process(spec, grid, seed, 0, c));
  return x;
}

}  // namespace

TEST_CASE("EC density values at zero") {
  for (int n : {3, 4, 10, 31, 200}) {
    CHECK(t_ec_density(0, 0.0, n) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(t_ec_density(1, 0.0, n) == doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-14));
    CHECK(t_ec_density(2, 0.0, n) == 0.0);
    CHECK(t_ec_density(3, 0.0, n) == doctest::Approx(-1.0 / (4.0 * kPi * kPi)).epsilon(1e-14));
  }
}

TEST_CASE("rho_0 matches quadrature of the t density") {
  for (int n : {4, 10, 31}) {
    for (int i = 0; i <= 80; ++i) {
      const double t = i / 10.0;
      const double integral = testing::adaptive_simpson(
          [&](double u) { return testing::student_t_pdf(u, n - 1.0); }, 0.0, t, 1e-13);
      CHECK(std::abs(t_ec_density(0, t, n) - (0.5 - integral)) <= 1e-8);
    }
  }
  const double tail = 0.5 - testing::adaptive_simpson(
                                [](double u) { return testing::student_t_pdf(u, 9.0); }, 0.0, 2.0,
                                1e-14);
  CHECK(t_ec_density(0, 2.0, 10) == doctest::Approx(tail).epsilon(1e-10));
}

TEST_CASE("rho_1..rho_3 closed forms") {
  for (int n : {3, 4, 10, 31, 100}) {
    for (double t : {0.0, 0.3, 1.0, 2.5, 4.0, 7.5}) {
      CHECK(t_ec_density(1, t, n) == doctest::Approx(rho1(t, n)).epsilon(1e-12));
      CHECK(t_ec_density(2, t, n) == doctest::Approx(rho2(t, n)).epsilon(1e-12));
      CHECK(t_ec_density(3, t, n) == doctest::Approx(rho3(t, n)).epsilon(1e-12));
    }
  }
}

TEST_CASE("EC density errors") {
  CHECK_THROWS_AS(t_ec_density(0, 1.0, 2), InvalidDof);
  CHECK_THROWS_AS(t_ec_density(4, 1.0, 10), InvalidArgument);
  CHECK_THROWS_AS(EcContext(2, 1.0), InvalidDof);
  CHECK_THROWS_AS(EcContext(10, -0.1), InvalidArgument);
}

TEST_CASE("expected EC limits") {
  for (auto signs : {EcSigns::Summed, EcSigns::Alternating}) {
    for (double l1 : {0.0, 1.0, kPi / 2, 10.0}) {
      const EcContext ctx(10, l1);
      // rho_2(0) = 0 and 2 rho_1(0) + 4 pi rho_3(0) = 0
      CHECK(expected_ec(0.0, ctx, signs) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(std::abs(expected_ec(1e6, ctx, signs)) < 1e-6);
      CHECK(std::abs(expected_ec(1e12, ctx, signs)) < 1e-20);
    }
  }
}

TEST_CASE("expected EC matches an independent evaluation") {
  for (int n : {4, 10, 31}) {
    for (double l1 : {0.0, kPi / 2, 3.0}) {
      const EcContext ctx(n, l1);
      for (double h : {0.5, 3.0, 9.0, 16.0, 30.0}) {
        CHECK(expected_ec(h, ctx, EcSigns::Summed) ==
              doctest::Approx(eec_oracle(h, n, l1, true)).epsilon(1e-8));
        CHECK(expected_ec(h, ctx, EcSigns::Alternating) ==
              doctest::Approx(eec_oracle(h, n, l1, false)).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("summed sphere terms give the chi-square(3) tail for large N") {
  // 2 Phibar(t) + 2 t phi(t) = P(chi2_3 > t^2)
  const EcContext ctx(200000, 0.0);
  for (double t : {0.5, 1.0, 2.0, 3.0}) {
    const double phi = std::exp(-t * t / 2) / std::sqrt(2 * kPi);
    const double chi2_tail = std::erfc(t / std::sqrt(2.0)) + 2.0 * t * phi;
    CHECK(expected_ec(t * t, ctx, EcSigns::Summed) == doctest::Approx(chi2_tail).epsilon(1e-4));
  }
}

TEST_CASE("quantile solves the expected EC equation") {
  for (auto signs : {EcSigns::Summed, EcSigns::Alternating}) {
    for (int n : {5, 10, 30, 100}) {
      for (double l1 : {0.0, 0.5, kPi / 2, 5.0}) {
        const EcContext ctx(n, l1);
        double prev = -1.0;
        for (double alpha : {0.5, 0.2, 0.15, 0.10, 0.05, 0.01}) {
          const double h = solve_quantile(alpha, ctx, signs);
          CHECK(std::abs(expected_ec(h, ctx, signs) - alpha) <= 1e-8);
          CHECK(h > prev);
          prev = h;
        }
      }
    }
  }
}

TEST_CASE("quantile matches a brute-force bisection") {
  for (double l1 : {0.0, kPi / 2}) {
    for (double alpha : {0.5, 0.05}) {
      // bracket on the tail: the EEC decreases for h above its peak
      double lo = 0.5, hi = 1000.0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (eec_oracle(mid, 10, l1, true) > alpha ? lo : hi) = mid;
      }
      CHECK(solve_quantile(alpha, EcContext(10, l1)) == doctest::Approx(lo).epsilon(1e-7));
    }
  }
}

TEST_CASE("quantile errors") {
  CHECK_THROWS_AS(solve_quantile(0.0, EcContext(10, 1.0)), InvalidArgument);
  CHECK_THROWS_AS(solve_quantile(0.6, EcContext(10, 1.0)), InvalidArgument);
  CHECK_THROWS_AS(solve_quantile(0.05, EcContext(3, 1e300)), NoRoot);
}

TEST_CASE("N = 4 leaves a positive expected EC tail") {
  // with 3 degrees of freedom the rho_3 term tends to a constant: EEC -> 2 L1 / pi
  const EcContext ctx(4, kPi / 2);
  CHECK(expected_ec(1e12, ctx) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK_THROWS_AS(solve_quantile(0.05, ctx), NoRoot);
  CHECK(solve_quantile(0.05, EcContext(4, 0.0)) > 0.0);
}

TEST_CASE("LKC of time-constant residuals is zero") {
  testing::TestRng rng(51);
  std::vector<std::vector<AlgebraVector>> x(7);
  for (auto& row : x) row.assign(11, testing::random_vector(rng, 1.0) + AlgebraVector(0.1, 0.1, 0.1));
  CHECK(lkc_estimate(x) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(lkc_estimate(x, LkcFrame::Principal) < 1e-12);
}

TEST_CASE("LKC matches a direct evaluation") {
  testing::TestRng rng(52);
  std::vector<std::vector<AlgebraVector>> x(5, std::vector<AlgebraVector>(4));
  for (auto& row : x) {
    for (auto& v : row) v = testing::random_vector(rng, 1.0);
  }
  double total = 0.0;
  for (int d = 0; d < 3; ++d) {
    for (int k = 0; k + 1 < 4; ++k) {
      Eigen::VectorXd a(5), b(5);
      for (int n = 0; n < 5; ++n) {
        a[n] = x[n][k][d];
        b[n] = x[n][k + 1][d];
      }
      total += (b / b.norm() - a / a.norm()).norm();
    }
  }
  CHECK(lkc_estimate(x) == doctest::Approx(total / 3.0).epsilon(1e-13));
}

TEST_CASE("LKC is scale invariant") {
  const auto x = trig_residuals(20, 21, 53);
  const double base = lkc_estimate(x);
  for (double c : {1e-6, 0.3, 7.0, 1e5}) {
    auto y = x;
    for (auto& row : y) {
      for (auto& v : row) v *= c;
    }
    CHECK(lkc_estimate(y) == doctest::Approx(base).epsilon(1e-12));
  }
  // per-(d, k) column scaling as well
  auto z = x;
  for (std::size_t k = 0; k < z[0].size(); ++k) {
    for (auto& row : z) row[k] = row[k].cwiseProduct(AlgebraVector(1.0 + k, 2.0, 0.5 / (1.0 + k)));
  }
  CHECK(lkc_estimate(z) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("LKC of the unit trigonometric process is near pi/2") {
  // single estimates scatter with sd ~0.04; the mean of 20 is tight
  double sum = 0.0;
  for (std::uint64_t rep = 0; rep < 20; ++rep) sum += lkc_estimate(trig_residuals(200, 101, 54 + rep));
  CHECK(std::abs(sum / 20.0 - kPi / 2) < 0.03);
}

TEST_CASE("LKC frames under a common rotation") {
  testing::TestRng rng(55);
  const TimeGrid grid = TimeGrid::uniform(51);
  const ErrorProcessSpec spec{1, 3, 2, 1.0};
  std::vector<std::vector<AlgebraVector>> x;
  for (int c = 0; c < 15; ++c) x.push_back(sample_generating_process(spec, grid, 56, 0, c));
  const double principal = lkc_estimate(x, LkcFrame::Principal);
  const double algebra = lkc_estimate(x, LkcFrame::Algebra);
  double algebra_spread = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::Matrix3d q = testing::random_rotation(rng).matrix();
    auto y = x;
    for (auto& row : y) {
      for (auto& v : row) v = q * v;
    }
    CHECK(lkc_estimate(y, LkcFrame::Principal) == doctest::Approx(principal).epsilon(1e-9));
    algebra_spread = std::max(algebra_spread, std::abs(lkc_estimate(y, LkcFrame::Algebra) - algebra));
  }
  // the per-coordinate normalization mixes under rotation
  CHECK(algebra_spread > 1e-3);
}

TEST_CASE("LKC errors") {
  std::vector<std::vector<AlgebraVector>> x(4, std::vector<AlgebraVector>(3, AlgebraVector(1, 1, 1)));
  for (auto& row : x) row[1] = AlgebraVector(1, 0, 1);
  CHECK_THROWS_AS(lkc_estimate(x), ZeroResidualColumn);
  CHECK_THROWS_AS(lkc_estimate(std::vector<std::vector<AlgebraVector>>(1, std::vector<AlgebraVector>(3))),
                  InvalidArgument);
  CHECK_THROWS_AS(lkc_estimate(std::vector<std::vector<AlgebraVector>>(3, std::vector<AlgebraVector>(1))),
                  InvalidArgument);
}

TEST_CASE("LKC of a residual field uses the sample residuals") {
  testing::TestRng rng(57);
  const TimeGrid g = TimeGrid::uniform(31);
  const CurveSample s = testing::smooth_sample(RotationCurve::constant(g), 12, 0.2, rng);
  const ResidualField r = residuals(s);
  CHECK(lkc_estimate(r) == lkc_estimate(r.sample));
  CHECK(lkc_estimate(r, LkcFrame::Principal) == lkc_estimate(r.sample, LkcFrame::Principal));
}
