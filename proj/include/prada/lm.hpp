#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace prada {

struct LmOptions {
  double init_lambda = 1e-4;
  double lambda_up = 10.0;
  double lambda_down = 1.0 / 3.0;
  int max_iterations = 100;
  double rel_decrease_tol = 1e-10;
  double max_lambda = 1e14;
};

struct LmSummary {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
  bool failed = false;  // non-finite cost at the initial point or all steps rejected on NaN
};

// Dense Levenberg-Marquardt over a problem with manifold state.
// Problem requirements:
//   int dim() const;
//   bool eval(Eigen::VectorXd& residuals, Eigen::MatrixXd* jacobian);
//       jacobian is w.r.t. a local perturbation at the current state;
//       may be nullptr when only the cost is needed.
//   State snapshot; void apply(const Eigen::VectorXd& delta); void restore(State).
// Cost is the squared norm of the residual vector. The accepted-step rule
// makes the cost non-increasing.
template <typename Problem>
LmSummary lm_minimize(Problem& problem, const LmOptions& opts = {}) {
  LmSummary summary;
  const int n = problem.dim();

  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  if (!problem.eval(r, &J) || !r.allFinite()) {
    summary.failed = true;
    return summary;
  }
  double cost = r.squaredNorm();
  summary.initial_cost = cost;
  summary.final_cost = cost;

  double lambda = opts.init_lambda;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    ++summary.iterations;
    const Eigen::MatrixXd A = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;

    bool accepted = false;
    while (lambda <= opts.max_lambda) {
      Eigen::MatrixXd damped = A;
      for (int i = 0; i < n; ++i)
        damped(i, i) += lambda * std::max(A(i, i), 1e-12);
      const Eigen::VectorXd delta = damped.ldlt().solve(-g);
      if (!delta.allFinite()) {
        lambda *= opts.lambda_up;
        continue;
      }
      auto saved = problem.snapshot();
      problem.apply(delta);
      Eigen::VectorXd r_new;
      if (problem.eval(r_new, nullptr) && r_new.allFinite() && r_new.squaredNorm() < cost) {
        const double new_cost = r_new.squaredNorm();
        const double rel = (cost - new_cost) / std::max(cost, 1e-300);
        cost = new_cost;
        lambda = std::max(lambda * opts.lambda_down, 1e-15);
        accepted = true;
        if (rel < opts.rel_decrease_tol) {
          summary.converged = true;
        } else {
          problem.eval(r, &J);  // refresh linearization at the accepted point
        }
        if (summary.converged) r = r_new;
        break;
      }
      problem.restore(saved);
      lambda *= opts.lambda_up;
    }
    if (!accepted || summary.converged) {
      if (!accepted) summary.converged = true;  // no admissible descent direction left
      break;
    }
  }
  summary.final_cost = cost;
  return summary;
}

}  // namespace prada
