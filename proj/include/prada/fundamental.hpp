#pragma once

#include <array>

#include "prada/types.hpp"

namespace prada {

Mat3 skew(const Vec3& w);
Mat3 so3_exp(const Vec3& w);

// Unit-Frobenius matrix with the largest-magnitude entry positive. Makes
// fundamental matrices comparable up to their projective scale ambiguity.
Mat3 canonical_f(const Mat3& F);

// Zero the smallest singular value.
Mat3 project_rank2(const Mat3& F);

// 7-DoF minimal form of a rank-2 fundamental matrix:
//   F = Ru * diag(cos(phi), sin(phi), 0) * Rv^T,  Ru, Rv in SO(3).
// Local updates are delta = (omega_u, omega_v, dphi) applied through the
// SO(3) exponential map, which keeps the rank-2 structure exact.
struct FMinimal {
  Mat3 Ru = Mat3::Identity();
  Mat3 Rv = Mat3::Identity();
  double phi = 0.0;

  static FMinimal decompose(const Mat3& F);

  Mat3 to_matrix() const;

  FMinimal retracted(const Vec7& delta) const;

  // dF/d(delta_k) at delta = 0, ordered (omega_u, omega_v, dphi).
  std::array<Mat3, 7> param_jacobians() const;
};

}  // namespace prada
