#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prada/geometry.hpp"
#include "prada/types.hpp"

namespace prada {

// Forward distortion: the radius r_d with r_d / h(r_d) = undistorted radius,
// solved by bisection plus Newton polish on the monotone segment starting at
// 0. nullopt when the target is unreachable within [0, r_max].
std::optional<double> distorted_radius(const DivisionModel& model, double r_undistorted,
                                       double r_max);

struct SceneConfig {
  int n_images = 10;
  int width = 512;
  int height = 512;
  // Camera id per image; empty means a single camera "cam0" for all images.
  std::vector<std::string> camera_of_image;
  std::map<std::string, DivisionModel> gt_models;
  std::map<std::string, Vec2> gt_principal_points;  // defaults to the frame center
  std::map<std::string, double> gt_focal_norm;      // ray convention scale, default 0.7

  int n_points_per_pair = 300;
  double noise_sigma = 0.0;      // pixels, inliers only
  double outlier_fraction = 0.0;
  uint64_t rng_seed = 0;

  enum class Motion { orbit, forward };
  Motion motion = Motion::orbit;
  double orbit_radius = 4.0;
  double scene_extent = 1.5;
  double lookat_jitter = 0.05;
};

struct PairGroundTruth {
  Mat3 F = Mat3::Zero();
  std::vector<bool> inlier_labels;
};

struct GroundTruth {
  std::map<std::string, DivisionModel> models;
  std::map<std::string, ImageFrame> frames;
  std::map<std::string, double> focal_norm;
  // keyed by (image_id_a, image_id_b) in the order of the correspondence sets
  std::map<std::pair<std::string, std::string>, PairGroundTruth> pairs;
};

// Samples camera poses and 3D points, projects through a pinhole, applies the
// ground-truth radial distortion by inverting the division model along the
// radius, then adds noise and outliers. Deterministic per seed. Noise-free
// inliers satisfy the ground-truth epipolar constraint exactly.
std::pair<std::vector<CorrespondenceSet>, GroundTruth> generate(const SceneConfig& cfg);

}  // namespace prada
