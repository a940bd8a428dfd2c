#include <random>

#include "doctest.h"
#include "prada/metrics.hpp"
#include "prada/sampson.hpp"
#include "prada/synth.hpp"
#include "test_util.hpp"

using namespace prada;

TEST_CASE("forward distortion inverts the division model") {
  std::mt19937_64 rng(81);
  for (int trial = 0; trial < 10; ++trial) {
    const DivisionModel m = testutil::random_model(rng, 4, 0.8);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double rd = 0.8 * (i + 0.5) / 1000.0;
      const double ru = rd / m.h(rd);
      const auto back = distorted_radius(m, ru, 0.8);
      if (!back) continue;  // outside the monotone segment
      worst = std::max(worst, std::abs(*back - rd));
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("unreachable radii return nullopt") {
  const DivisionModel m = DivisionModel::one_parameter(-0.3);
  // r/h grows toward the pole; a huge target outside [0, 0.5] fails.
  CHECK(!distorted_radius(m, 100.0, 0.5).has_value());
  CHECK(distorted_radius(m, 0.0, 0.5).value() == 0.0);
}

TEST_CASE("generator is deterministic and respects labels") {
  SceneConfig cfg;
  cfg.n_images = 3;
  cfg.n_points_per_pair = 80;
  cfg.noise_sigma = 0.5;
  cfg.outlier_fraction = 0.25;
  cfg.rng_seed = 5;
  auto [a, gta] = generate(cfg);
  auto [b, gtb] = generate(cfg);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].pairs.size() == b[i].pairs.size());
    for (size_t j = 0; j < a[i].pairs.size(); ++j) {
      CHECK(a[i].pairs[j].first == b[i].pairs[j].first);
      CHECK(a[i].pairs[j].second == b[i].pairs[j].second);
    }
  }

  // Labeled inliers stay within a few pixels of the epipolar surface.
  const DivisionModel& model = gta.models.at("cam0");
  for (const auto& set : a) {
    const auto& pgt = gta.pairs.at({set.image_id_a, set.image_id_b});
    const double diag = set.frame_a.diagonal();
    for (size_t j = 0; j < set.pairs.size(); ++j) {
      const Vec2 p = normalize(set.pairs[j].first, set.frame_a);
      const Vec2 q = normalize(set.pairs[j].second, set.frame_b);
      const double d_px =
          std::sqrt(sampson_error(p, q, pgt.F, model, model)) * diag;
      if (pgt.inlier_labels[j]) CHECK(d_px < 6.0);  // 0.5 px noise, generous bound
    }
  }
}

TEST_CASE("reprojection error of the ground truth against itself is zero") {
  const ImageFrame frame(512, 512);
  const DivisionModel m({1.0, 0.0, -0.2, 0.05, -0.01});
  const Camera cam{m, frame};
  const ReprojResult re = reprojection_error(cam, cam);
  CHECK(re.mean_px < 1e-9);
  CHECK(re.skipped_fraction == 0.0);
}

TEST_CASE("focal-adjusted error absorbs a focal scale") {
  const ImageFrame frame(512, 512);
  const Camera cam{DivisionModel::one_parameter(-0.2, 4), frame};
  const ReprojResult plain = reprojection_error(cam, cam, 1.3);
  CHECK(plain.mean_px > 1.0);  // misaligned focal hurts
  double best_focal = 0.0;
  const ReprojResult fare = focal_adjusted_re(cam, cam, {}, &best_focal);
  CHECK(fare.mean_px < 1e-8);
  CHECK(best_focal == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("focal-adjusted error never exceeds the plain error") {
  std::mt19937_64 rng(83);
  const ImageFrame frame(640, 480);
  for (int i = 0; i < 5; ++i) {
    const Camera est{testutil::random_model(rng, 4, frame.max_radius()), frame};
    const Camera gt{testutil::random_model(rng, 4, frame.max_radius()), frame};
    const double plain = reprojection_error(est, gt).mean_px;
    const double fare = focal_adjusted_re(est, gt).mean_px;
    CHECK(fare <= plain * (1.0 + 1e-12));
  }
}

TEST_CASE("grid metric agrees with the dense metric") {
  const ImageFrame frame(96, 96);
  const Camera est{DivisionModel::one_parameter(-0.21, 4), frame};
  const Camera gt{DivisionModel::one_parameter(-0.2, 4), frame};
  ReprojOptions dense;
  dense.dense = true;
  const double a = reprojection_error(est, gt).mean_px;
  const double b = reprojection_error(est, gt, 1.0, dense).mean_px;
  CHECK(a == doctest::Approx(b).epsilon(0.05));
}

TEST_CASE("frame size mismatch is rejected") {
  const Camera a{DivisionModel::identity(), ImageFrame(512, 512)};
  const Camera b{DivisionModel::identity(), ImageFrame(640, 480)};
  CHECK_THROWS(reprojection_error(a, b));
}

TEST_CASE("small-angle focal alignment") {
  const ImageFrame frame(512, 512);
  // Identity model: focal equals the diagonal exactly under the tangent
  // convention.
  CHECK(align_focal_small_angle(DivisionModel::identity(), frame) ==
        doctest::Approx(frame.diagonal()).epsilon(1e-12));
  // Scaled ray convention rescales the focal linearly.
  CHECK(align_focal_small_angle(DivisionModel::identity(), frame, 0.7) ==
        doctest::Approx(0.7 * frame.diagonal()).epsilon(1e-12));
  // Distortion changes the aligned focal away from the diagonal.
  const double f = align_focal_small_angle(DivisionModel::one_parameter(-0.2), frame);
  CHECK(f > frame.diagonal() * 0.99);
}

TEST_CASE("multi-camera scenes carry separate ground truth") {
  SceneConfig cfg;
  cfg.n_images = 4;
  cfg.camera_of_image = {"a", "b", "a", "b"};
  cfg.gt_models["a"] = DivisionModel::one_parameter(-0.3);
  cfg.gt_models["b"] = DivisionModel::one_parameter(-0.1);
  cfg.n_points_per_pair = 50;
  auto [sets, gt] = generate(cfg);
  CHECK(gt.models.size() == 2);
  for (const auto& set : sets) {
    const auto& pgt = gt.pairs.at({set.image_id_a, set.image_id_b});
    const DivisionModel& ma = gt.models.at(set.camera_id_a);
    const DivisionModel& mb = gt.models.at(set.camera_id_b);
    for (const auto& [pa, pb] : set.pairs) {
      const double res = epipolar_residual(normalize(pa, set.frame_a),
                                           normalize(pb, set.frame_b), pgt.F, ma, mb);
      CHECK(std::abs(res) < 1e-10);
    }
  }
}
