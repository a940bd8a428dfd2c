#pragma once

#include <span>
#include <vector>

#include "prada/fundamental.hpp"
#include "prada/geometry.hpp"
#include "prada/lm.hpp"
#include "prada/quadrature.hpp"
#include "prada/regularizer.hpp"
#include "prada/sampson.hpp"

namespace prada {

// Joint two-view least-squares problem over the minimal fundamental-matrix
// form and the free coefficients of both division models. Residuals are the
// signed Sampson residuals over the given correspondences, plus (when
// reg_weight > 0) quadrature-node residuals realizing
//   reg_weight * integral_0^R (d(r/h)/dr)^2 dr
// for each side. Satisfies the lm_minimize problem concept.
class TwoViewProblem {
 public:
  // With tie_models the two sides share one coefficient vector (same physical
  // camera); theta_b is initialized from theta_a and kept identical.
  TwoViewProblem(std::span<const std::pair<Vec2, Vec2>> corrs, const FMinimal& f,
                 const DivisionModel& theta_a, const DivisionModel& theta_b,
                 double reg_weight = 0.0, double reg_radius_a = 0.5, double reg_radius_b = 0.5,
                 int reg_samples = 128, bool tie_models = false);

  int dim() const { return 7 + (ka_ - 1) + (tie_ ? 0 : kb_ - 1); }
  bool eval(Eigen::VectorXd& residuals, Eigen::MatrixXd* jacobian);

  struct State {
    FMinimal f;
    DivisionModel theta_a, theta_b;
  };
  State snapshot() const { return {f_, theta_a_, theta_b_}; }
  void apply(const Eigen::VectorXd& delta);
  void restore(const State& s) {
    f_ = s.f;
    theta_a_ = s.theta_a;
    theta_b_ = s.theta_b;
  }

  const FMinimal& f() const { return f_; }
  const DivisionModel& theta_a() const { return theta_a_; }
  const DivisionModel& theta_b() const { return theta_b_; }

  double data_cost() const;  // summed squared Sampson error at the current state

 private:
  std::span<const std::pair<Vec2, Vec2>> corrs_;
  FMinimal f_;
  DivisionModel theta_a_, theta_b_;
  int ka_, kb_;
  bool tie_;
  double reg_weight_;
  QuadratureRule reg_rule_a_, reg_rule_b_;
};

}  // namespace prada
