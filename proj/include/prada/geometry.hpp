#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "prada/types.hpp"

namespace prada {

// Image dimensions plus the distortion center. All normalized quantities in
// this library are pixel coordinates shifted by the principal point and
// divided by the image diagonal.
struct ImageFrame {
  int width = 0;
  int height = 0;
  Vec2 principal_point = Vec2::Zero();

  ImageFrame() = default;
  ImageFrame(int w, int h) : width(w), height(h), principal_point(0.5 * w, 0.5 * h) {
    validate();
  }
  ImageFrame(int w, int h, const Vec2& pp) : width(w), height(h), principal_point(pp) {
    validate();
  }

  double diagonal() const { return std::sqrt(double(width) * width + double(height) * height); }

  // Largest normalized radius reachable inside the frame (distance from the
  // principal point to the farthest corner, over the diagonal).
  double max_radius() const;

  void validate() const;
};

inline Vec2 normalize(const Vec2& p, const ImageFrame& frame) {
  return (p - frame.principal_point) / frame.diagonal();
}

inline Vec2 denormalize(const Vec2& p, const ImageFrame& frame) {
  return p * frame.diagonal() + frame.principal_point;
}

// Polynomial division undistortion model. h(r) = sum_i theta_i r^i over the
// normalized radius, with theta_0 == 1 and theta_1 == 0 fixed so the model
// behaves like a pinhole at the distortion center. Undistorted (pinhole
// consistent) coordinates are p / h(|p|).
class DivisionModel {
 public:
  DivisionModel() : coeffs_{1.0, 0.0, 0.0} {}

  explicit DivisionModel(std::vector<double> coeffs);

  static DivisionModel identity(int degree = 2);
  // theta_2 = lambda, classic one-parameter model 1/(1 + lambda r^2).
  static DivisionModel one_parameter(double lambda, int degree = 2);

  int degree() const { return int(coeffs_.size()) - 1; }
  const std::vector<double>& coeffs() const { return coeffs_; }

  double h(double r) const;        // sum theta_i r^i
  double h_prime(double r) const;  // dh/dr
  double g(double r) const;        // h'(r)/r, finite at r = 0
  // (g'(r))/r = sum_{i>=2} i (i-2) theta_i r^{i-4}; used by point Jacobians.
  // Singular at r = 0 when odd coefficients are present; callers guard r.
  double g_prime_over_r(double r) const;

  // Lift to the homogeneous undistortion vector (p_x, p_y, h(|p|)).
  Vec3 undistort(const Vec2& p) const;

  // h positive on a 256-sample grid over [0, R].
  bool valid_on(double R, int n_grid = 256) const;

  // Free (optimizable) coefficients theta_2..theta_k.
  std::vector<double> free_coeffs() const {
    return std::vector<double>(coeffs_.begin() + 2, coeffs_.end());
  }
  void set_free_coeffs(const std::vector<double>& free);

  // Same coefficients zero-padded or truncated-checked to degree k.
  DivisionModel with_degree(int k) const;

 private:
  std::vector<double> coeffs_;  // coeffs_[i] = theta_i
};

struct CorrespondenceSet {
  std::string camera_id_a;
  std::string camera_id_b;
  std::string image_id_a;
  std::string image_id_b;
  ImageFrame frame_a;
  ImageFrame frame_b;
  std::vector<std::pair<Vec2, Vec2>> pairs;  // pixel coordinates

  size_t size() const { return pairs.size(); }
};

// U_{theta_q}(q)^T F U_{theta_p}(p). Zero for noise-free pinhole-consistent
// data. Inputs in normalized coordinates.
inline double epipolar_residual(const Vec2& p, const Vec2& q, const Mat3& F,
                                const DivisionModel& theta_p, const DivisionModel& theta_q) {
  return theta_q.undistort(q).dot(F * theta_p.undistort(p));
}

}  // namespace prada
