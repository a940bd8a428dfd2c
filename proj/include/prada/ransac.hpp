#pragma once

#include <cstdint>
#include <vector>

#include "prada/geometry.hpp"
#include "prada/minimal_solver.hpp"
#include "prada/regularizer.hpp"
#include "prada/types.hpp"

namespace prada {

struct RansacConfig {
  // Sampson distance threshold in pixels; converted to normalized units by
  // dividing by the image diagonal.
  double inlier_threshold_px = 2.0;
  int max_iterations = 1000;
  double confidence = 0.999;
  int lo_steps = 10;  // local-refinement LM iterations
  uint64_t rng_seed = 0;
  int min_inliers = 15;
};

struct TwoViewEstimate {
  Mat3 F = Mat3::Zero();
  DivisionModel theta_a;
  DivisionModel theta_b;
  std::vector<bool> inlier_mask;
  int inlier_count = 0;
  double cost = 0.0;  // summed squared Sampson error over the inliers (normalized units)
  double coverage_weight_a = 0.0;
  double coverage_weight_b = 0.0;
  bool accepted = false;
  bool degenerate_motion = false;  // epipole near the distortion center in both views
  bool unrefined = false;

  std::vector<std::pair<Vec2, Vec2>> inliers(const std::vector<std::pair<Vec2, Vec2>>&
                                                 normalized_pairs) const;
};

// Normalized copies of all correspondences of a set.
std::vector<std::pair<Vec2, Vec2>> normalize_pairs(const CorrespondenceSet& corr);

// Per-pair LO-RANSAC around the shared-lambda minimal solver. Local
// optimization (two-sided lambda refinement) runs every time a new best
// hypothesis is found. Deterministic for a fixed seed and input order.
// Throws on fewer than 9 correspondences; an estimate failing the minimum
// inlier count is returned with accepted = false.
TwoViewEstimate lo_ransac_pair(const CorrespondenceSet& corr, const RansacConfig& cfg);

// Degree-k nonlinear refinement of a two-view estimate under the Sampson
// error plus polynomial regularization, over the inlier set only. The
// effective regularization weight is reg.weight times the inlier count,
// divided by the squared mean image diagonal (reg.weight is calibrated
// against pixel-unit data costs). With share_models both sides are refined
// as one coefficient vector, for pairs whose images come from the same
// physical camera.
// Returns the input marked unrefined if the optimizer fails to descend.
TwoViewEstimate refine_pair(const TwoViewEstimate& estimate, const CorrespondenceSet& corr,
                            int degree, const RegularizerConfig& reg,
                            bool share_models = false);

// True when the epipole implied by F lies within `center_radius` (normalized
// units) of the distortion center in both images: the near-degenerate
// forward-motion configuration where radial distortion is unobservable.
bool epipole_near_center(const Mat3& F, double center_radius = 0.1);

}  // namespace prada
