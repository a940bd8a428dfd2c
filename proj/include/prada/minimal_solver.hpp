#pragma once

#include <optional>
#include <span>
#include <vector>

#include "prada/geometry.hpp"
#include "prada/types.hpp"

namespace prada {

struct MinimalHypothesis {
  Mat3 F = Mat3::Zero();
  double lambda_a = 0.0;  // p-side one-parameter coefficient
  double lambda_b = 0.0;  // q-side
  bool refined = false;
};

struct MinimalSolverOptions {
  double lambda_max = 10.0;
  // Complex roots with |imag| below this fraction of |real| count as real.
  double imag_tol = 1e-8;
  int polish_iterations = 2;
};

// Shared-lambda 9-point solver. Stacks the epipolar constraint of the
// one-parameter division model, (q; 1+l|q|^2)^T F (p; 1+l|p|^2) = 0, into
// (D1 + l D2 + l^2 D3) f = 0 and solves the quadratic eigenvalue problem by
// companion linearization to an 18x18 generalized eigenproblem. Returns all
// real finite eigenpairs with |lambda| <= lambda_max; at most 18 candidates.
// Degenerate samples yield an empty list. Points must be normalized.
std::vector<MinimalHypothesis> solve_shared_lambda(
    std::span<const std::pair<Vec2, Vec2>> sample, const MinimalSolverOptions& opts = {});

// Linear least-squares F from >= 8 correspondences undistorted with fixed
// per-side lambdas; rank-2 enforced by zeroing the smallest singular value.
// Returns nullopt on a rank-deficient (degenerate) system.
std::optional<Mat3> solve_f_8pt(std::span<const std::pair<Vec2, Vec2>> corrs, double lambda_a,
                                double lambda_b);

// Small LM over (F minimal form, lambda_a, lambda_b) minimizing summed
// squared Sampson error on the inliers. Returns the input hypothesis
// unchanged (refined = false) when no descent is found. Needs >= 10 inliers.
MinimalHypothesis refine_two_sided_lambda(const MinimalHypothesis& hypothesis,
                                          std::span<const std::pair<Vec2, Vec2>> inliers,
                                          int max_iterations = 10);

}  // namespace prada
