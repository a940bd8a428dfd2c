#include "prada/sampson.hpp"

#include <cmath>
#include <limits>

namespace prada {

namespace {

struct Core {
  Vec3 Up, Uq, v, w;
  double rp, rq, gp, gq;
  Vec2 Jp, Jq;
  double C, D;
};

inline Core compute_core(const Vec2& p, const Vec2& q, const Mat3& F,
                         const DivisionModel& tp, const DivisionModel& tq) {
  Core c;
  c.rp = p.norm();
  c.rq = q.norm();
  c.Up = Vec3(p.x(), p.y(), tp.h(c.rp));
  c.Uq = Vec3(q.x(), q.y(), tq.h(c.rq));
  c.v = F * c.Up;
  c.w = F.transpose() * c.Uq;
  c.C = c.Uq.dot(c.v);
  c.gp = tp.g(c.rp);
  c.gq = tq.g(c.rq);
  c.Jp = Vec2(c.w.x() + c.w.z() * c.gp * p.x(), c.w.y() + c.w.z() * c.gp * p.y());
  c.Jq = Vec2(c.v.x() + c.v.z() * c.gq * q.x(), c.v.y() + c.v.z() * c.gq * q.y());
  c.D = c.Jp.squaredNorm() + c.Jq.squaredNorm();
  return c;
}

}  // namespace

double sampson_error(const Vec2& p, const Vec2& q, const Mat3& F,
                     const DivisionModel& theta_p, const DivisionModel& theta_q) {
  const Core c = compute_core(p, q, F, theta_p, theta_q);
  if (c.D <= 0.0) return std::numeric_limits<double>::infinity();
  return c.C * c.C / c.D;
}

SampsonEval sampson_eval(const Vec2& p, const Vec2& q, const Mat3& F,
                         const DivisionModel& theta_p, const DivisionModel& theta_q,
                         const SampsonDerivRequest& req) {
  const Core c = compute_core(p, q, F, theta_p, theta_q);
  SampsonEval out;
  if (c.D <= 0.0) {
    out.degenerate = true;
    out.e = std::numeric_limits<double>::infinity();
    return out;
  }
  const double sqD = std::sqrt(c.D);
  out.e = c.C / sqD;
  // de/dx = C_x / sqrt(D) - C D_x / (2 D^{3/2})
  const double a = 1.0 / sqD;
  const double b = -0.5 * c.C / (c.D * sqD);

  if (req.wrt_f) {
    const Mat3 C_F = c.Uq * c.Up.transpose();
    const Vec3 tp_vec(c.Jp.x(), c.Jp.y(), c.gp * (p.x() * c.Jp.x() + p.y() * c.Jp.y()));
    const Vec3 tq_vec(c.Jq.x(), c.Jq.y(), c.gq * (q.x() * c.Jq.x() + q.y() * c.Jq.y()));
    const Mat3 D_F = 2.0 * (c.Uq * tp_vec.transpose() + tq_vec * c.Up.transpose());
    out.e_F = a * C_F + b * D_F;
  }

  if (req.wrt_theta) {
    const int kp = theta_p.degree();
    const int kq = theta_q.degree();
    out.e_theta_p.resize(kp - 1);
    out.e_theta_q.resize(kq - 1);

    const Vec3 Fc = F.col(2);
    double powj = c.rp * c.rp;  // rp^j from j = 2
    for (int j = 2; j <= kp; ++j, powj *= c.rp) {
      const double C_t = c.w.z() * powj;
      const double pow_jm2 = (j == 2) ? 1.0 : powj / (c.rp * c.rp);
      const Vec2 dJp = c.w.z() * j * pow_jm2 * p;
      const Vec2 dJq(powj * (Fc.x() + Fc.z() * c.gq * q.x()),
                     powj * (Fc.y() + Fc.z() * c.gq * q.y()));
      const double D_t = 2.0 * (c.Jp.dot(dJp) + c.Jq.dot(dJq));
      out.e_theta_p[j - 2] = a * C_t + b * D_t;
    }

    const Vec3 Fr = F.row(2).transpose();
    powj = c.rq * c.rq;
    for (int j = 2; j <= kq; ++j, powj *= c.rq) {
      const double C_t = c.v.z() * powj;
      const double pow_jm2 = (j == 2) ? 1.0 : powj / (c.rq * c.rq);
      const Vec2 dJq = c.v.z() * j * pow_jm2 * q;
      const Vec2 dJp(powj * (Fr.x() + Fr.z() * c.gp * p.x()),
                     powj * (Fr.y() + Fr.z() * c.gp * p.y()));
      const double D_t = 2.0 * (c.Jp.dot(dJp) + c.Jq.dot(dJq));
      out.e_theta_q[j - 2] = a * C_t + b * D_t;
    }
  }

  if (req.wrt_points) {
    Eigen::Matrix<double, 3, 2> dUp;
    dUp << 1, 0, 0, 1, c.gp * p.x(), c.gp * p.y();
    Eigen::Matrix<double, 3, 2> dUq;
    dUq << 1, 0, 0, 1, c.gq * q.x(), c.gq * q.y();

    // p side
    {
      Eigen::Matrix2d dJp_dp = c.w.z() * c.gp * Eigen::Matrix2d::Identity();
      if (c.rp > 1e-10)
        dJp_dp += c.w.z() * theta_p.g_prime_over_r(c.rp) * (p * p.transpose());
      const Eigen::Matrix<double, 3, 2> M = F * dUp;
      Eigen::Matrix2d dJq_dp;
      dJq_dp.row(0) = M.row(0) + c.gq * q.x() * M.row(2);
      dJq_dp.row(1) = M.row(1) + c.gq * q.y() * M.row(2);
      const Eigen::RowVector2d D_p =
          2.0 * (c.Jp.transpose() * dJp_dp + c.Jq.transpose() * dJq_dp);
      out.e_p = a * c.Jp + b * D_p.transpose();
    }
    // q side
    {
      Eigen::Matrix2d dJq_dq = c.v.z() * c.gq * Eigen::Matrix2d::Identity();
      if (c.rq > 1e-10)
        dJq_dq += c.v.z() * theta_q.g_prime_over_r(c.rq) * (q * q.transpose());
      const Eigen::Matrix<double, 3, 2> M = F.transpose() * dUq;
      Eigen::Matrix2d dJp_dq;
      dJp_dq.row(0) = M.row(0) + c.gp * p.x() * M.row(2);
      dJp_dq.row(1) = M.row(1) + c.gp * p.y() * M.row(2);
      const Eigen::RowVector2d D_q =
          2.0 * (c.Jp.transpose() * dJp_dq + c.Jq.transpose() * dJq_dq);
      out.e_q = a * c.Jq + b * D_q.transpose();
    }
  }

  return out;
}

}  // namespace prada
