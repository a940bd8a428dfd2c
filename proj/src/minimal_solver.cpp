#include "prada/minimal_solver.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "prada/refine.hpp"

namespace prada {

namespace {

using Mat9 = Eigen::Matrix<double, 9, 9>;
using Vec9 = Eigen::Matrix<double, 9, 1>;

// Row-major vec(F): f = (F00, F01, F02, F10, ..., F22).
Mat3 reshape_f(const Vec9& f) {
  Mat3 F;
  F << f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7], f[8];
  return F;
}

void constraint_rows(std::span<const std::pair<Vec2, Vec2>> sample, Mat9& D1, Mat9& D2,
                     Mat9& D3) {
  D1.setZero();
  D2.setZero();
  D3.setZero();
  for (int i = 0; i < 9; ++i) {
    const Vec2& p = sample[i].first;
    const Vec2& q = sample[i].second;
    const double rp2 = p.squaredNorm();
    const double rq2 = q.squaredNorm();
    const Vec3 pb(p.x(), p.y(), 1.0);
    const Vec3 qb(q.x(), q.y(), 1.0);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const int col = 3 * a + b;  // coefficient of F_ab
        D1(i, col) = qb[a] * pb[b];
        // lambda picks up the |.|^2 part of either third coordinate.
        double d2 = 0.0;
        if (b == 2) d2 += qb[a] * rp2;
        if (a == 2) d2 += rq2 * pb[b];
        D2(i, col) = d2;
        if (a == 2 && b == 2) D3(i, col) = rq2 * rp2;
      }
  }
}

// One Newton step on the scalar least-squares polynomial
// g(l) = sum_i (a_i + b_i l + c_i l^2)^2 given f.
double polish_lambda(const Mat9& D1, const Mat9& D2, const Mat9& D3, const Vec9& f,
                     double lambda) {
  const Vec9 a = D1 * f, b = D2 * f, c = D3 * f;
  for (int it = 0; it < 3; ++it) {
    double g1 = 0.0, g2 = 0.0;
    for (int i = 0; i < 9; ++i) {
      const double v = a[i] + b[i] * lambda + c[i] * lambda * lambda;
      const double dv = b[i] + 2.0 * c[i] * lambda;
      g1 += 2.0 * v * dv;
      g2 += 2.0 * (dv * dv + v * 2.0 * c[i]);
    }
    if (std::abs(g2) < 1e-300) break;
    const double step = g1 / g2;
    if (!std::isfinite(step)) break;
    lambda -= step;
  }
  return lambda;
}

}  // namespace

std::vector<MinimalHypothesis> solve_shared_lambda(std::span<const std::pair<Vec2, Vec2>> sample,
                                                   const MinimalSolverOptions& opts) {
  std::vector<MinimalHypothesis> out;
  if (sample.size() != 9) return out;

  Mat9 D1, D2, D3;
  constraint_rows(sample, D1, D2, D3);

  // Companion linearization: A z = l B z with z = (f; l f).
  Eigen::Matrix<double, 18, 18> A = Eigen::Matrix<double, 18, 18>::Zero();
  Eigen::Matrix<double, 18, 18> B = Eigen::Matrix<double, 18, 18>::Zero();
  A.block<9, 9>(0, 9).setIdentity();
  A.block<9, 9>(9, 0) = -D1;
  A.block<9, 9>(9, 9) = -D2;
  B.block<9, 9>(0, 0).setIdentity();
  B.block<9, 9>(9, 9) = D3;

  Eigen::GeneralizedEigenSolver<Eigen::Matrix<double, 18, 18>> ges;
  ges.compute(A, B, false);
  if (ges.info() != Eigen::Success) return out;

  const auto alphas = ges.alphas();
  const auto betas = ges.betas();
  std::vector<double> lambdas;
  for (int i = 0; i < 18; ++i) {
    const std::complex<double> alpha = alphas[i];
    const double beta = betas[i];
    if (std::abs(beta) < 1e-12 * std::abs(alpha)) continue;  // infinite eigenvalue
    const std::complex<double> l = alpha / beta;
    if (std::abs(l.imag()) > opts.imag_tol * std::max(1.0, std::abs(l.real()))) continue;
    const double lr = l.real();
    if (!std::isfinite(lr) || std::abs(lr) > opts.lambda_max) continue;
    lambdas.push_back(lr);
  }

  for (double lambda : lambdas) {
    Vec9 f;
    bool residual_ok = false;
    for (int it = 0; it < std::max(1, opts.polish_iterations); ++it) {
      const Mat9 M = D1 + lambda * D2 + lambda * lambda * D3;
      Eigen::JacobiSVD<Mat9> svd(M, Eigen::ComputeFullV);
      const auto& sv = svd.singularValues();
      // A clear one-dimensional nullspace is required; collinear or otherwise
      // degenerate samples fail this.
      if (sv[8] > 1e-6 * sv[0] || sv[7] < 1e3 * sv[8] + 1e-14 * sv[0]) {
        residual_ok = false;
        break;
      }
      f = svd.matrixV().col(8);
      residual_ok = true;
      lambda = polish_lambda(D1, D2, D3, f, lambda);
    }
    if (!residual_ok || !std::isfinite(lambda) || std::abs(lambda) > opts.lambda_max) continue;

    MinimalHypothesis hyp;
    hyp.F = reshape_f(f);
    hyp.lambda_a = lambda;
    hyp.lambda_b = lambda;
    out.push_back(hyp);
  }
  return out;
}

std::optional<Mat3> solve_f_8pt(std::span<const std::pair<Vec2, Vec2>> corrs, double lambda_a,
                                double lambda_b) {
  if (corrs.size() < 8) return std::nullopt;
  Eigen::MatrixXd M(corrs.size(), 9);
  for (size_t i = 0; i < corrs.size(); ++i) {
    const Vec2& p = corrs[i].first;
    const Vec2& q = corrs[i].second;
    const Vec3 pb(p.x(), p.y(), 1.0 + lambda_a * p.squaredNorm());
    const Vec3 qb(q.x(), q.y(), 1.0 + lambda_b * q.squaredNorm());
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) M(i, 3 * a + b) = qb[a] * pb[b];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv[7] < 1e-10 * sv[0]) return std::nullopt;  // degenerate configuration
  const Vec9 f = svd.matrixV().col(8);
  return project_rank2(reshape_f(f));
}

MinimalHypothesis refine_two_sided_lambda(const MinimalHypothesis& hypothesis,
                                          std::span<const std::pair<Vec2, Vec2>> inliers,
                                          int max_iterations) {
  if (inliers.size() < 10)
    throw std::invalid_argument("refine_two_sided_lambda: needs >= 10 inliers");

  TwoViewProblem problem(inliers, FMinimal::decompose(hypothesis.F),
                         DivisionModel::one_parameter(hypothesis.lambda_a),
                         DivisionModel::one_parameter(hypothesis.lambda_b));
  LmOptions opts;
  opts.max_iterations = max_iterations;
  const LmSummary summary = lm_minimize(problem, opts);
  if (summary.failed || summary.final_cost > summary.initial_cost) {
    MinimalHypothesis unrefined = hypothesis;
    unrefined.refined = false;
    return unrefined;
  }
  MinimalHypothesis out;
  out.F = problem.f().to_matrix();
  out.lambda_a = problem.theta_a().coeffs()[2];
  out.lambda_b = problem.theta_b().coeffs()[2];
  out.refined = true;
  return out;
}

}  // namespace prada
