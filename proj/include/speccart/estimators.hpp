#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "speccart/attention.hpp"
#include "speccart/geometry.hpp"

namespace speccart {

struct GaussNewtonOptions {
  int max_iters = 100;
  double step_tol = 1e-8;  // meters; convergence on step norm
  double ridge = 0.0;      // base Tikhonov term on the normal equations
};

/// Weighted nonlinear least squares in residual/Jacobian callback form:
/// minimize r(x)^T W r(x) with r(x) = y - h(x), W = diag(weights).
struct WlsProblem {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;  // of h, i.e. dr = -J dx
  Eigen::VectorXd weights;  // one nonnegative weight per measurement
  Eigen::VectorXd init;
  GaussNewtonOptions opts;
};

struct GaussNewtonResult {
  Eigen::VectorXd estimate;
  int iters = 0;
  double final_residual_norm = 0.0;
  double gradient_norm = 0.0;  // |J^T W r| at the estimate
  bool converged = false;
};

/// Plain Gauss-Newton with a Levenberg-style fallback: when a step increases
/// the weighted cost, the damping term doubles until it does not. Singular
/// normal equations with no ridge raise NumericalError; hitting max_iters
/// returns converged=false instead of throwing.
GaussNewtonResult gauss_newton_solve(const WlsProblem& problem);

/// Range-only positioning problem over fixed satellite positions.
WlsProblem make_range_problem(const std::vector<Eigen::VectorXd>& sat_positions,
                              const Eigen::VectorXd& measured_ranges,
                              const Eigen::VectorXd& weights, const Eigen::VectorXd& init,
                              GaussNewtonOptions opts = {});

/// Huber weight function: 1 inside the delta band, delta/|r| outside.
Eigen::VectorXd huber_weights(const Eigen::VectorXd& residuals, double delta);

/// Iteratively reweighted least squares with Huber weights on top of the
/// base problem weights. Stops when the estimate moves less than step_tol.
GaussNewtonResult irls_huber(const WlsProblem& problem, double delta, int max_outer = 30);

/// Convex combination of scalar values; weights must be normalized.
double weighted_mean(const WeightVector& weights, const Eigen::VectorXd& values);

/// Row-wise version for vector-valued samples (values is N x d).
Eigen::VectorXd weighted_mean_rows(const WeightVector& weights, const Eigen::MatrixXd& values);

}  // namespace speccart
