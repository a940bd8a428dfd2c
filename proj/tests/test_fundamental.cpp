#include "prada/fundamental.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <random>

#include "doctest.h"
#include "test_util.hpp"

using namespace prada;

namespace {

double smallest_singular_ratio(const Mat3& F) {
  Eigen::JacobiSVD<Mat3> svd(F);
  return svd.singularValues()(2) / svd.singularValues()(0);
}

}  // namespace

TEST_CASE("skew matrix realizes the cross product") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < 50; ++i) {
    const Vec3 w(gauss(rng), gauss(rng), gauss(rng));
    const Vec3 v(gauss(rng), gauss(rng), gauss(rng));
    CHECK((skew(w) * v - w.cross(v)).norm() < 1e-14);
  }
}

TEST_CASE("so3_exp gives rotations and matches small-angle expansion") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < 100; ++i) {
    const Vec3 w(gauss(rng), gauss(rng), gauss(rng));
    const Mat3 R = so3_exp(w);
    CHECK((R * R.transpose() - Mat3::Identity()).norm() < 1e-13);
    CHECK(R.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
  const Vec3 tiny(1e-9, -2e-9, 3e-10);
  CHECK((so3_exp(tiny) - (Mat3::Identity() + skew(tiny))).norm() < 1e-17);
}

TEST_CASE("canonical form is idempotent and scale invariant") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const Mat3 F = testutil::random_rank2(rng);
    const Mat3 c1 = canonical_f(F);
    CHECK(c1.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((canonical_f(c1) - c1).norm() < 1e-13);
    CHECK((canonical_f(-3.7 * F) - c1).norm() < 1e-12);
  }
}

TEST_CASE("decompose and reconstruct round trip") {
  std::mt19937_64 rng(4);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Mat3 F = testutil::random_rank2(rng);
    const FMinimal m = FMinimal::decompose(F);
    const double err = (canonical_f(m.to_matrix()) - canonical_f(F)).norm();
    worst = std::max(worst, err);
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("retraction preserves rank 2 exactly") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  FMinimal m = FMinimal::decompose(testutil::random_rank2(rng));
  for (int i = 0; i < 100; ++i) {
    Vec7 delta;
    for (int k = 0; k < 7; ++k) delta[k] = 0.3 * gauss(rng);
    m = m.retracted(delta);
    CHECK((m.Ru * m.Ru.transpose() - Mat3::Identity()).norm() < 1e-12);
    CHECK((m.Rv * m.Rv.transpose() - Mat3::Identity()).norm() < 1e-12);
    CHECK(smallest_singular_ratio(m.to_matrix()) < 1e-14);
  }
}

TEST_CASE("parameter jacobians match finite differences") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const FMinimal m = FMinimal::decompose(testutil::random_rank2(rng));
    const auto J = m.param_jacobians();
    const double eps = 1e-7;
    for (int k = 0; k < 7; ++k) {
      Vec7 dp = Vec7::Zero(), dm = Vec7::Zero();
      dp[k] = eps;
      dm[k] = -eps;
      const Mat3 fd = (m.retracted(dp).to_matrix() - m.retracted(dm).to_matrix()) / (2 * eps);
      CHECK((J[k] - fd).norm() < 1e-6 * std::max(1.0, fd.norm()));
    }
  }
}
