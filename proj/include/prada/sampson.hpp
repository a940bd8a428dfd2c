#pragma once

#include <Eigen/Dense>

#include "prada/fundamental.hpp"
#include "prada/geometry.hpp"

namespace prada {

// Squared Sampson distance of a correspondence under fundamental matrix F and
// per-side division models:
//   s = C^2 / (|J_dp|^2 + |J_dq|^2),  C = U_q(q)^T F U_p(p),
// with the Jacobians of the centered epipolar constraint taken at dp = dq = 0.
// Returns +inf when both Jacobians vanish (point coincident with the epipole).
double sampson_error(const Vec2& p, const Vec2& q, const Mat3& F,
                     const DivisionModel& theta_p, const DivisionModel& theta_q);

// Signed residual e = C / sqrt(|J_dp|^2 + |J_dq|^2), with e^2 equal to the
// Sampson error, together with analytic derivatives. e is smooth across the
// zero set, which is what the least-squares solvers consume.
struct SampsonEval {
  double e = 0.0;
  bool degenerate = false;  // zero denominator

  Mat3 e_F = Mat3::Zero();                 // de/dF
  Eigen::VectorXd e_theta_p, e_theta_q;    // de/dtheta_{2..k}, per side
  Vec2 e_p = Vec2::Zero(), e_q = Vec2::Zero();  // de/d(point), for center optimization

  double value() const { return e * e; }

  // Chain de/dF onto the 7 minimal-form directions.
  Vec7 e_fmin(const std::array<Mat3, 7>& dF) const {
    Vec7 out;
    for (int k = 0; k < 7; ++k) out[k] = e_F.cwiseProduct(dF[k]).sum();
    return out;
  }
};

struct SampsonDerivRequest {
  bool wrt_f = true;
  bool wrt_theta = true;
  bool wrt_points = false;
};

SampsonEval sampson_eval(const Vec2& p, const Vec2& q, const Mat3& F,
                         const DivisionModel& theta_p, const DivisionModel& theta_q,
                         const SampsonDerivRequest& req = {});

}  // namespace prada
