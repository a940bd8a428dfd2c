#include "prada/refine.hpp"

#include <cmath>

namespace prada {

TwoViewProblem::TwoViewProblem(std::span<const std::pair<Vec2, Vec2>> corrs, const FMinimal& f,
                               const DivisionModel& theta_a, const DivisionModel& theta_b,
                               double reg_weight, double reg_radius_a, double reg_radius_b,
                               int reg_samples, bool tie_models)
    : corrs_(corrs),
      f_(f),
      theta_a_(theta_a),
      theta_b_(tie_models ? theta_a : theta_b),
      ka_(theta_a.degree()),
      kb_(tie_models ? theta_a.degree() : theta_b.degree()),
      tie_(tie_models),
      reg_weight_(reg_weight) {
  if (reg_weight_ > 0.0) {
    reg_rule_a_ = gauss_legendre(reg_samples, 0.0, reg_radius_a);
    reg_rule_b_ = gauss_legendre(reg_samples, 0.0, reg_radius_b);
  }
}

bool TwoViewProblem::eval(Eigen::VectorXd& residuals, Eigen::MatrixXd* jacobian) {
  const int m = int(corrs_.size());
  const int n_reg = reg_weight_ > 0.0 ? int(reg_rule_a_.nodes.size()) : 0;
  const int n_res = m + 2 * n_reg;
  residuals.resize(n_res);
  if (jacobian) jacobian->setZero(n_res, dim());

  const Mat3 F = f_.to_matrix();
  std::array<Mat3, 7> dF;
  if (jacobian) dF = f_.param_jacobians();

  SampsonDerivRequest req;
  req.wrt_f = req.wrt_theta = jacobian != nullptr;
  for (int i = 0; i < m; ++i) {
    const auto& [p, q] = corrs_[i];
    const SampsonEval ev = sampson_eval(p, q, F, theta_a_, theta_b_, req);
    if (ev.degenerate) {
      residuals[i] = 0.0;  // epipole-coincident point, excluded from the sum
      continue;
    }
    residuals[i] = ev.e;
    if (jacobian) {
      jacobian->block<1, 7>(i, 0) = ev.e_fmin(dF).transpose();
      jacobian->block(i, 7, 1, ka_ - 1) += ev.e_theta_p.transpose();
      const int col_q = tie_ ? 7 : 7 + (ka_ - 1);
      jacobian->block(i, col_q, 1, kb_ - 1) += ev.e_theta_q.transpose();
    }
  }

  // Regularizer residuals: sqrt(reg_weight * w_s) * u'(r_s) per node per side.
  auto fill_reg = [&](const DivisionModel& model, const QuadratureRule& rule, int row0,
                      int col0, int k) -> bool {
    for (int s = 0; s < n_reg; ++s) {
      const double r = rule.nodes[s];
      const double h = model.h(r);
      if (h <= 0.0) return false;  // validity violation; reject the step
      const double hp = model.h_prime(r);
      const double N = h - r * hp;
      const double up = N / (h * h);
      const double scale = std::sqrt(reg_weight_ * rule.weights[s]);
      residuals[row0 + s] = scale * up;
      if (jacobian) {
        const double h3 = h * h * h;
        double rj = r * r;
        for (int j = 2; j <= k; ++j, rj *= r) {
          const double dup = ((1.0 - j) * rj * h - 2.0 * N * rj) / h3;
          (*jacobian)(row0 + s, col0 + j - 2) += scale * dup;
        }
      }
    }
    return true;
  };
  if (n_reg > 0) {
    if (!fill_reg(theta_a_, reg_rule_a_, m, 7, ka_)) return false;
    if (!fill_reg(theta_b_, reg_rule_b_, m + n_reg, tie_ ? 7 : 7 + (ka_ - 1), kb_)) return false;
  }
  return true;
}

void TwoViewProblem::apply(const Eigen::VectorXd& delta) {
  f_ = f_.retracted(delta.head<7>());
  std::vector<double> fa = theta_a_.free_coeffs();
  for (int j = 0; j < ka_ - 1; ++j) fa[j] += delta[7 + j];
  theta_a_.set_free_coeffs(fa);
  if (tie_) {
    theta_b_ = theta_a_;
    return;
  }
  std::vector<double> fb = theta_b_.free_coeffs();
  for (int j = 0; j < kb_ - 1; ++j) fb[j] += delta[7 + (ka_ - 1) + j];
  theta_b_.set_free_coeffs(fb);
}

double TwoViewProblem::data_cost() const {
  const Mat3 F = f_.to_matrix();
  double cost = 0.0;
  for (const auto& [p, q] : corrs_) {
    const double s = sampson_error(p, q, F, theta_a_, theta_b_);
    if (std::isfinite(s)) cost += s;
  }
  return cost;
}

}  // namespace prada
