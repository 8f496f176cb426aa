#include "speccart/estimators.hpp"

#include <cmath>

#include "speccart/common.hpp"

namespace speccart {

namespace {

double weighted_cost(const Eigen::VectorXd& r, const Eigen::VectorXd& w) {
  return (w.array() * r.array().square()).sum();
}

}  // namespace

GaussNewtonResult gauss_newton_solve(const WlsProblem& problem) {
  require(static_cast<bool>(problem.residual) && static_cast<bool>(problem.jacobian),
          "gauss_newton: residual/jacobian callbacks required");
  require((problem.weights.array() >= 0.0).all(), "gauss_newton: negative weights");
  require(problem.opts.step_tol > 0.0, "gauss_newton: step_tol must be positive");

  GaussNewtonResult res;
  Eigen::VectorXd x = problem.init;
  const int d = static_cast<int>(x.size());

  Eigen::VectorXd r = problem.residual(x);
  require(r.size() == problem.weights.size(), "gauss_newton: weight count != residual count");
  double cost = weighted_cost(r, problem.weights);

  for (res.iters = 0; res.iters < problem.opts.max_iters; ++res.iters) {
    Eigen::MatrixXd J = problem.jacobian(x);
    Eigen::MatrixXd JtW = J.transpose() * problem.weights.asDiagonal();
    Eigen::MatrixXd normal = JtW * J;
    Eigen::VectorXd rhs = JtW * r;  // r = y - h(x), so dx solves (J^T W J) dx = J^T W r

    double damping = problem.opts.ridge;
    Eigen::VectorXd step;
    bool accepted = false;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::MatrixXd A = normal + damping * Eigen::MatrixXd::Identity(d, d);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
      if (ldlt.info() != Eigen::Success || ldlt.isNegative() ||
          (ldlt.vectorD().array().abs() < 1e-14 * normal.norm()).any()) {
        if (damping == 0.0) {
          throw NumericalError("gauss_newton: singular normal equations and no ridge configured");
        }
        damping *= 2.0;
        continue;
      }
      step = ldlt.solve(rhs);
      Eigen::VectorXd x_try = x + step;
      Eigen::VectorXd r_try = problem.residual(x_try);
      double cost_try = weighted_cost(r_try, problem.weights);
      if (cost_try <= cost || step.norm() < problem.opts.step_tol) {
        x = x_try;
        r = r_try;
        cost = cost_try;
        accepted = true;
        break;
      }
      // Residual went up: double the damping and retry the step.
      damping = (damping == 0.0) ? 1e-8 * std::max(1.0, normal.norm()) : 2.0 * damping;
    }
    if (!accepted) break;
    if (step.norm() < problem.opts.step_tol) {
      res.converged = true;
      ++res.iters;
      break;
    }
  }

  Eigen::MatrixXd J = problem.jacobian(x);
  res.estimate = x;
  res.final_residual_norm = r.norm();
  res.gradient_norm = (J.transpose() * problem.weights.asDiagonal() * r).norm();
  return res;
}

WlsProblem make_range_problem(const std::vector<Eigen::VectorXd>& sat_positions,
                              const Eigen::VectorXd& measured_ranges,
                              const Eigen::VectorXd& weights, const Eigen::VectorXd& init,
                              GaussNewtonOptions opts) {
  require(static_cast<int>(sat_positions.size()) == measured_ranges.size(),
          "range problem: satellite/measurement count mismatch");
  WlsProblem p;
  p.weights = weights;
  p.init = init;
  p.opts = opts;
  p.residual = [sat_positions, measured_ranges](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(measured_ranges.size());
    for (int i = 0; i < r.size(); ++i) {
      r(i) = measured_ranges(i) - (x - sat_positions[i]).norm();
    }
    return r;
  };
  p.jacobian = [sat_positions](const Eigen::VectorXd& x) {
    Eigen::MatrixXd J(static_cast<int>(sat_positions.size()), x.size());
    for (std::size_t i = 0; i < sat_positions.size(); ++i) {
      J.row(static_cast<int>(i)) = los_unit(x, sat_positions[i]).transpose();
    }
    return J;
  };
  return p;
}

Eigen::VectorXd huber_weights(const Eigen::VectorXd& residuals, double delta) {
  require(delta > 0.0, "huber_weights: delta must be positive");
  Eigen::VectorXd w(residuals.size());
  for (int i = 0; i < residuals.size(); ++i) {
    double a = std::abs(residuals(i));
    w(i) = (a <= delta) ? 1.0 : delta / a;
  }
  return w;
}

GaussNewtonResult irls_huber(const WlsProblem& problem, double delta, int max_outer) {
  WlsProblem p = problem;
  GaussNewtonResult res = gauss_newton_solve(p);
  for (int outer = 0; outer < max_outer; ++outer) {
    Eigen::VectorXd r = p.residual(res.estimate);
    p.weights = problem.weights.cwiseProduct(huber_weights(r, delta));
    p.init = res.estimate;
    GaussNewtonResult next = gauss_newton_solve(p);
    double moved = (next.estimate - res.estimate).norm();
    res = next;
    if (moved < p.opts.step_tol) break;
  }
  return res;
}

double weighted_mean(const WeightVector& weights, const Eigen::VectorXd& values) {
  weights.validate();
  require(weights.w.size() == values.size(), "weighted_mean: size mismatch");
  KahanSum acc;
  for (int i = 0; i < values.size(); ++i) acc.add(weights.w(i) * values(i));
  return acc.value();
}

Eigen::VectorXd weighted_mean_rows(const WeightVector& weights, const Eigen::MatrixXd& values) {
  weights.validate();
  require(weights.w.size() == values.rows(), "weighted_mean_rows: size mismatch");
  return values.transpose() * weights.w;
}

}  // namespace speccart
