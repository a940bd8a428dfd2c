#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "prada/geometry.hpp"
#include "prada/io.hpp"
#include "prada/ransac.hpp"

namespace prada {

struct PipelineConfig {
  int degree = 4;
  double threshold_px = 2.0;
  double reg_weight = 1e-3;
  uint64_t seed = 0;
  int jobs = 1;  // 0: hardware concurrency
  bool optimize_centers = false;
  int outer_rounds = 3;
};

struct PairReport {
  std::string image_a, image_b;
  std::string camera_a, camera_b;
  int n_matches = 0;
  int inlier_count = 0;
  double cost_init = 0.0;     // robust cost, one-parameter hypothesis
  double cost_refined = 0.0;  // robust cost after two-view refinement
  double weight_a = 0.0;      // coverage weight before flooring
  double weight_b = 0.0;
  bool accepted = false;
  bool degenerate_motion = false;
  bool unrefined = false;
};

// Per-camera model snapshot after each pipeline stage.
struct CameraResult {
  std::string camera_id;
  ImageFrame frame;  // final frame (center may move when optimize_centers)
  DivisionModel stage_init;      // weighted mean of per-pair one-parameter models
  DivisionModel stage_refined;   // weighted mean of refined per-pair models
  DivisionModel stage_averaged;  // functional distortion average
  DivisionModel model;           // after global refinement (the output model)
  bool low_confidence = false;
  int n_pairs = 0;          // accepted pairs involving this camera
  long inlier_count = 0;    // final inliers over those pairs

  CameraModelFile to_file(const std::map<std::string, double>& stage_costs) const;
};

struct PipelineResult {
  std::map<std::string, CameraResult> cameras;
  std::vector<PairReport> pairs;
  // Robust (Cauchy) Sampson cost summed over accepted pairs at each stage:
  // init, refined, averaged, global.
  std::map<std::string, double> stage_costs;
};

// Full calibration: per-pair LO-RANSAC + refinement (parallel across pairs),
// per-camera distortion averaging, joint global refinement. Deterministic for
// a fixed config. Throws DataError on inconsistent input, runtime_error when
// a camera keeps no accepted pair or the global stage collapses.
PipelineResult calibrate(const MatchFile& matches, const PipelineConfig& cfg);

// Typed-row CSV: pair, camera and stage_cost records.
void write_report(const std::string& path, const PipelineResult& result);

}  // namespace prada
