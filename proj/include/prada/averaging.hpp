#pragma once

#include <vector>

#include "prada/geometry.hpp"
#include "prada/lm.hpp"

namespace prada {

// Area of the convex hull of a point set (Andrew monotone chain); 0 for
// collinear or fewer than 3 points.
double convex_hull_area(std::vector<Vec2> points);

// Convex-hull area of the inlier points over the frame area, clipped to
// [0, 1]. The per-camera averaging weights are these values normalized to
// sum 1.
double coverage_weight(const std::vector<Vec2>& inlier_points, const ImageFrame& frame);

struct WeightedModelSet {
  std::vector<DivisionModel> models;
  std::vector<double> weights;  // nonnegative, sum 1
  double R = 0.5;               // common integration radius (normalized units)
};

struct AveragingConfig {
  int out_degree = 0;  // 0: max input degree
  int n_quad = 256;  // uniform trapezoid samples on [0, R]
  LmOptions lm;
};

// Functional averaging of division models: minimizes
//   sum_i w_i * integral_0^R (1/h(r) - 1/h_i(r))^2 r^3 dr
// over theta_2..theta_k, initialized with the coefficient-wise weighted mean.
// Input models invalid on [0, R] are dropped and weights renormalized; throws
// when all are dropped.
DivisionModel average_divisional(const WeightedModelSet& set, const AveragingConfig& cfg = {});

// Same objective for the multiplicative model d(r) = h(r), where the
// optimum is the weighted mean of the coefficients in closed form.
std::vector<double> average_multiplicative_closed_form(const WeightedModelSet& set);

// Numerical minimization in multiplicative mode; oracle counterpart of the
// closed form above.
DivisionModel average_multiplicative_numeric(const WeightedModelSet& set,
                                             const AveragingConfig& cfg = {});

// Coefficient-wise weighted mean zero-padded to out_degree; the averaging
// initialization and the per-stage camera summaries use it.
DivisionModel weighted_mean_model(const WeightedModelSet& set, int out_degree = 0);

}  // namespace prada
