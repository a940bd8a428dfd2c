#pragma once

#include "prada/geometry.hpp"
#include "prada/synth.hpp"

namespace prada {

// Division model plus the frame (size and principal point) it lives on.
struct Camera {
  DivisionModel model;
  ImageFrame frame;
};

struct ReprojOptions {
  int grid = 64;      // grid x grid pixel samples
  bool dense = false;  // every pixel
  double max_focal_ratio = 10.0;  // focal search range [1/x, x]
};

struct ReprojResult {
  double mean_px = 0.0;
  double skipped_fraction = 0.0;  // pixels outside the reachable field of view
  bool skip_warning = false;      // more than 10% skipped
};

// Mean pixel distance between grid pixels and their re-projection through the
// ground-truth backprojection followed by the estimated projection scaled by
// est_focal. Both models share the unit-focal normalized ray convention.
ReprojResult reprojection_error(const Camera& est, const Camera& gt, double est_focal = 1.0,
                                const ReprojOptions& opts = {});

// Reprojection error minimized over the estimated model's focal scale
// (golden section over log f). Never exceeds reprojection_error at f = 1.
ReprojResult focal_adjusted_re(const Camera& est, const Camera& gt,
                               const ReprojOptions& opts = {}, double* best_focal = nullptr);

// Pinhole focal length (pixels) matching the model's angular resolution near
// the image center, from a small displacement dx (default diagonal/1000).
// ray_scale is the normalized focal of the model's ray convention (1 for
// estimated models, the generator's focal for ground truth).
double align_focal_small_angle(const DivisionModel& model, const ImageFrame& frame,
                               double ray_scale = 1.0, double dx = 0.0);

}  // namespace prada
