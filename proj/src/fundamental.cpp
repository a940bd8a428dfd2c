#include "prada/fundamental.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>

namespace prada {

Mat3 skew(const Vec3& w) {
  Mat3 s;
  s << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return s;
}

Mat3 so3_exp(const Vec3& w) {
  const double t = w.norm();
  const Mat3 s = skew(w);
  if (t < 1e-8) {
    // Series expansion; keeps the map exact to machine precision near zero.
    return Mat3::Identity() + s + 0.5 * s * s;
  }
  const double a = std::sin(t) / t;
  const double b = (1.0 - std::cos(t)) / (t * t);
  return Mat3::Identity() + a * s + b * s * s;
}

Mat3 canonical_f(const Mat3& F) {
  Mat3 G = F / F.norm();
  int r = 0, c = 0;
  G.cwiseAbs().maxCoeff(&r, &c);
  if (G(r, c) < 0.0) G = -G;
  return G;
}

Mat3 project_rank2(const Mat3& F) {
  Eigen::JacobiSVD<Mat3> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 s = svd.singularValues();
  s.z() = 0.0;
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

FMinimal FMinimal::decompose(const Mat3& F) {
  Eigen::JacobiSVD<Mat3> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
  FMinimal out;
  out.Ru = svd.matrixU();
  out.Rv = svd.matrixV();
  if (out.Ru.determinant() < 0.0) out.Ru = -out.Ru;
  if (out.Rv.determinant() < 0.0) out.Rv = -out.Rv;
  const Vec3 s = svd.singularValues();  // s0 >= s1 >= s2 >= 0
  out.phi = std::atan2(s.y(), s.x());   // in [0, pi/4] after ordering
  return out;
}

Mat3 FMinimal::to_matrix() const {
  Vec3 s(std::cos(phi), std::sin(phi), 0.0);
  return Ru * s.asDiagonal() * Rv.transpose();
}

FMinimal FMinimal::retracted(const Vec7& delta) const {
  FMinimal out;
  out.Ru = Ru * so3_exp(delta.segment<3>(0));
  out.Rv = Rv * so3_exp(delta.segment<3>(3));
  out.phi = phi + delta[6];
  return out;
}

std::array<Mat3, 7> FMinimal::param_jacobians() const {
  // F(delta) = Ru exp([wu]) Sigma(phi + dphi) exp(-[wv]) Rv^T.
  std::array<Mat3, 7> J;
  const Vec3 sv(std::cos(phi), std::sin(phi), 0.0);
  const Mat3 Sigma = sv.asDiagonal();
  const Mat3 RvT = Rv.transpose();
  for (int k = 0; k < 3; ++k) {
    const Mat3 G = skew(Vec3::Unit(k));
    J[k] = Ru * G * Sigma * RvT;
    J[3 + k] = -Ru * Sigma * G * RvT;
  }
  const Vec3 dsv(-std::sin(phi), std::cos(phi), 0.0);
  J[6] = Ru * Mat3(dsv.asDiagonal()) * RvT;
  return J;
}

}  // namespace prada
