#pragma once

#include <map>
#include <string>
#include <vector>

#include "prada/geometry.hpp"
#include "prada/lm.hpp"
#include "prada/types.hpp"

namespace prada {

// Cauchy loss on a residual r with scale c: c^2 ln(1 + r^2/c^2).
inline double cauchy_rho(double r, double c) {
  const double u = r / c;
  return c * c * std::log1p(u * u);
}
// d rho / d (r^2); the IRLS weight.
inline double cauchy_weight(double r_sq, double c) { return 1.0 / (1.0 + r_sq / (c * c)); }

struct CameraState {
  DivisionModel model;
  ImageFrame frame;  // carries the current principal point
  bool low_confidence = false;
};

struct PairObservation {
  std::string image_a, image_b;
  std::string camera_a, camera_b;
  Mat3 F = Mat3::Zero();
  std::vector<std::pair<Vec2, Vec2>> pixel_pairs;  // all original correspondences
  std::vector<bool> inlier_mask;
  bool degenerate_motion = false;
};

struct GlobalProblem {
  std::map<std::string, CameraState> cameras;
  std::vector<PairObservation> pairs;
  double robust_scale = 0.0;  // Cauchy scale, normalized units
};

struct GlobalConfig {
  int n_outer = 3;                    // inlier re-estimation rounds
  double inlier_threshold_px = 2.0;   // for re-classification
  LmOptions lm;
  bool optimize_centers = false;
  double center_coverage_min = 0.3;   // mean pair coverage required to free a center
  double center_bound_frac = 0.2;     // centers confined to the central fraction of the frame
  // Re-classify over all original correspondences (may re-admit points
  // RANSAC rejected); when false only current inliers can be demoted.
  bool reclassify_all = true;
};

// Robust Sampson cost of the problem over the current inlier masks.
double global_cost(const GlobalProblem& problem);

// Joint refinement of all fundamental matrices and per-camera models across
// all pairs. Each outer round runs an LM pass over (F, theta) with centers
// fixed, an optional LM pass over principal points with all else fixed, then
// re-classifies inliers by the Sampson threshold. The robust cost is
// non-increasing within each LM pass. Throws when a camera loses every
// inlier across all of its pairs.
GlobalProblem global_refine(const GlobalProblem& problem, const GlobalConfig& cfg);

}  // namespace prada
