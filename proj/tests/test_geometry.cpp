#include "prada/geometry.hpp"

#include <Eigen/Geometry>
#include <random>

#include "doctest.h"
#include "prada/synth.hpp"
#include "test_util.hpp"

using namespace prada;

TEST_CASE("normalization maps pixels by principal point and diagonal") {
  const ImageFrame frame(640, 480);
  CHECK(frame.diagonal() == doctest::Approx(800.0));
  const Vec2 n = normalize(Vec2(640, 480), frame);
  CHECK(n.x() == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(n.y() == doctest::Approx(0.3).epsilon(1e-14));
  const Vec2 back = denormalize(n, frame);
  CHECK((back - Vec2(640, 480)).norm() < 1e-12);
  CHECK(normalize(frame.principal_point, frame).norm() == 0.0);
}

TEST_CASE("frame validation rejects nonsense") {
  CHECK_THROWS(ImageFrame(0, 480));
  CHECK_THROWS(ImageFrame(-640, 480));
  CHECK_NOTHROW(ImageFrame(1, 1));
}

TEST_CASE("max_radius is the farthest corner distance over the diagonal") {
  const ImageFrame centered(640, 480);
  CHECK(centered.max_radius() == doctest::Approx(0.5).epsilon(1e-14));
  const ImageFrame off(640, 480, Vec2(0, 0));
  CHECK(off.max_radius() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("undistort evaluates the division model") {
  const DivisionModel m = DivisionModel::one_parameter(-0.5);
  const Vec3 u = m.undistort(Vec2(0.5, 0.0));
  CHECK(u.x() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(u.y() == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(u.z() == doctest::Approx(0.875).epsilon(1e-15));
}

TEST_CASE("identity model is the homogeneous embedding") {
  const DivisionModel id = DivisionModel::identity(5);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const Vec2 p = testutil::random_point(rng);
    const Vec3 u = id.undistort(p);
    CHECK(u.x() == p.x());
    CHECK(u.y() == p.y());
    CHECK(u.z() == 1.0);
  }
}

TEST_CASE("undistort is projectively the divided point") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const DivisionModel m = testutil::random_model(rng, 4);
    const Vec2 p = testutil::random_point(rng);
    const double h = m.h(p.norm());
    REQUIRE(h > 0.0);
    const Vec3 a = m.undistort(p);
    const Vec3 b(p.x() / h, p.y() / h, 1.0);  // d(r) p with d = 1/h
    CHECK(a.cross(b).norm() < 1e-12 * a.norm() * b.norm());
  }
}

TEST_CASE("undistort reports invalid h") {
  const DivisionModel m = DivisionModel::one_parameter(-5.0);
  CHECK_THROWS_AS(m.undistort(Vec2(0.7, 0.0)), std::domain_error);
  CHECK(!m.valid_on(0.7));
  CHECK(m.valid_on(0.1));
}

TEST_CASE("model constructor pins theta_0 and theta_1") {
  CHECK_THROWS(DivisionModel({2.0, 0.0, 0.1}));
  CHECK_THROWS(DivisionModel({1.0, 0.5, 0.1}));
  CHECK_THROWS(DivisionModel({1.0}));
  CHECK_NOTHROW(DivisionModel({1.0, 0.0, 0.1, -0.2}));
}

TEST_CASE("with_degree pads and truncates zeros only") {
  const DivisionModel m({1.0, 0.0, 0.3});
  CHECK(m.with_degree(5).coeffs() == std::vector<double>{1.0, 0.0, 0.3, 0.0, 0.0, 0.0});
  const DivisionModel padded({1.0, 0.0, 0.3, 0.0});
  CHECK(padded.with_degree(2).coeffs() == std::vector<double>{1.0, 0.0, 0.3});
  CHECK_THROWS(DivisionModel({1.0, 0.0, 0.3, 0.1}).with_degree(2));
}

TEST_CASE("h derivatives match finite differences") {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 100; ++i) {
    const DivisionModel m = testutil::random_model(rng, 6);
    std::uniform_real_distribution<double> unif(0.05, 0.7);
    const double r = unif(rng);
    const double eps = 1e-6;
    const double fd = (m.h(r + eps) - m.h(r - eps)) / (2 * eps);
    CHECK(m.h_prime(r) == doctest::Approx(fd).epsilon(1e-6));
    const double fd_g = (m.g(r + eps) - m.g(r - eps)) / (2 * eps);
    CHECK(m.g_prime_over_r(r) * r == doctest::Approx(fd_g).epsilon(1e-5));
  }
}

TEST_CASE("noise-free synthetic data satisfies the epipolar constraint") {
  SceneConfig cfg;
  cfg.n_images = 4;
  cfg.n_points_per_pair = 50;
  auto [sets, gt] = generate(cfg);
  const DivisionModel& model = gt.models.at("cam0");
  for (const auto& set : sets) {
    const auto& pgt = gt.pairs.at({set.image_id_a, set.image_id_b});
    for (size_t i = 0; i < set.pairs.size(); ++i) {
      const Vec2 p = normalize(set.pairs[i].first, set.frame_a);
      const Vec2 q = normalize(set.pairs[i].second, set.frame_b);
      CHECK(std::abs(epipolar_residual(p, q, pgt.F, model, model)) < 1e-10);
    }
  }
}
