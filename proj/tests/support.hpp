#pragma once

// Test-only helpers and independent oracles.

#include <Eigen/Dense>
#include <functional>
#include <random>
#include <vector>

#include "rotubes/curve.hpp"
#include "rotubes/so3.hpp"
#include "rotubes/tubes.hpp"

namespace testing {

using rotubes::AlgebraVector;
using rotubes::Rotation;

using TestRng = std::mt19937_64;

/// Haar-uniform rotation from a normalized Gaussian quaternion.
Rotation random_rotation(TestRng& rng);

/// Uniform direction times a norm uniform on [0, max_norm].
AlgebraVector random_vector(TestRng& rng, double max_norm);

/// Random symmetric positive definite matrix with eigenvalues in [lo, hi].
Eigen::Matrix3d random_spd(TestRng& rng, double lo, double hi);

/// Rotation about unit axis `axis` by `angle`, built from the matrix
/// identity cos I + sin [axis]_x + (1 - cos) axis axis^T without using
/// the library exponential.
Eigen::Matrix3d axis_angle_matrix(const Eigen::Vector3d& axis, double angle);

/// Rotation angle from the trace, acos((tr - 1) / 2).
double trace_angle(const Eigen::Matrix3d& r);

/// Brute-force minimizer of f over SO(3): a grid over the axis-angle ball
/// followed by successively finer local grids. No gradients.
Eigen::Matrix3d grid_search_min(const std::function<double(const Eigen::Matrix3d&)>& f);

/// Adaptive Simpson quadrature on [a, b].
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol);

/// Student-t density with nu degrees of freedom from the gamma function.
double student_t_pdf(double x, double nu);

/// Piecewise-linear warp whose knots lie on grid points.
rotubes::Warp grid_aligned_warp(const rotubes::TimeGrid& grid, TestRng& rng, int interior_knots);

/// Random action with grid-aligned warp knots.
rotubes::SpatioTemporalAction random_action(const rotubes::TimeGrid& grid, TestRng& rng);

/// Sample of n curves c(t) Exp(hat(a_n(t))) with smooth random a_n.
rotubes::CurveSample smooth_sample(const rotubes::RotationCurve& center, int n, double sigma,
                                   TestRng& rng);

/// Smallest b-statistic found over `points` samples of a's ellipsoid, half
/// uniform in the interior and half uniform on the boundary surface.
double mc_min_statistic(const Rotation& ca, const Eigen::Matrix3d& sa, int na, double ha,
                        const Rotation& cb, const Eigen::Matrix3d& sb, int nb, int points,
                        TestRng& rng);

double max_abs_diff(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

}  // namespace testing
