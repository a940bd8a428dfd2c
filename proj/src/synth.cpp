#include "prada/synth.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <random>
#include <stdexcept>

#include "prada/fundamental.hpp"

namespace prada {

std::optional<double> distorted_radius(const DivisionModel& model, double r_undistorted,
                                       double r_max) {
  if (r_undistorted <= 0.0) return 0.0;
  auto m = [&](double r) { return r / model.h(r); };

  // Bracket on the initial monotone segment.
  double lo = 0.0, hi = 0.0;
  const int n_scan = 256;
  bool bracketed = false;
  double prev = 0.0;
  for (int i = 1; i <= n_scan; ++i) {
    const double r = r_max * double(i) / n_scan;
    if (model.h(r) <= 0.0) break;
    const double v = m(r);
    if (v < prev) break;  // left the monotone segment without reaching the target
    if (v >= r_undistorted) {
      lo = r_max * double(i - 1) / n_scan;
      hi = r;
      bracketed = true;
      break;
    }
    prev = v;
  }
  if (!bracketed) return std::nullopt;

  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (m(mid) < r_undistorted ? lo : hi) = mid;
  }
  double r = 0.5 * (lo + hi);
  for (int it = 0; it < 3; ++it) {  // Newton polish
    const double h = model.h(r);
    const double mp = (h - r * model.h_prime(r)) / (h * h);
    if (mp <= 0.0) break;
    r -= (m(r) - r_undistorted) / mp;
    r = std::clamp(r, lo - (hi - lo), hi + (hi - lo));
  }
  return r;
}

namespace {

struct CameraPose {
  Mat3 R;  // world to camera
  Vec3 C;  // center in world coordinates
};

Mat3 look_at(const Vec3& from, const Vec3& to) {
  const Vec3 z = (to - from).normalized();
  Vec3 up(0, 1, 0);
  if (std::abs(z.dot(up)) > 0.99) up = Vec3(1, 0, 0);
  const Vec3 x = up.cross(z).normalized();
  const Vec3 y = z.cross(x);
  Mat3 R;
  R.row(0) = x;
  R.row(1) = y;
  R.row(2) = z;
  return R;
}

}  // namespace

std::pair<std::vector<CorrespondenceSet>, GroundTruth> generate(const SceneConfig& cfg) {
  if (cfg.n_images < 2) throw std::invalid_argument("generate: need at least 2 images");
  if (cfg.noise_sigma < 0.0 || cfg.outlier_fraction < 0.0 || cfg.outlier_fraction >= 1.0)
    throw std::invalid_argument("generate: invalid noise or outlier settings");

  std::vector<std::string> cam_of(cfg.n_images, "cam0");
  if (!cfg.camera_of_image.empty()) {
    if (int(cfg.camera_of_image.size()) != cfg.n_images)
      throw std::invalid_argument("generate: camera_of_image size mismatch");
    cam_of = cfg.camera_of_image;
  }

  GroundTruth gt;
  for (const auto& id : cam_of) {
    if (gt.models.count(id)) continue;
    auto it = cfg.gt_models.find(id);
    gt.models.emplace(id, it != cfg.gt_models.end() ? it->second
                                                    : DivisionModel::one_parameter(-0.2, 4));
    ImageFrame frame(cfg.width, cfg.height);
    if (auto pp = cfg.gt_principal_points.find(id); pp != cfg.gt_principal_points.end())
      frame.principal_point = pp->second;
    gt.frames.emplace(id, frame);
    auto fit = cfg.gt_focal_norm.find(id);
    gt.focal_norm.emplace(id, fit != cfg.gt_focal_norm.end() ? fit->second : 0.7);
    if (!gt.models.at(id).valid_on(frame.max_radius()))
      throw std::invalid_argument("generate: ground-truth model invalid on the frame");
  }

  std::mt19937_64 pose_rng(cfg.rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<CameraPose> poses(cfg.n_images);
  for (int i = 0; i < cfg.n_images; ++i) {
    Vec3 C, target;
    if (cfg.motion == SceneConfig::Motion::orbit) {
      const double angle = 2.0 * M_PI * double(i) / double(cfg.n_images);
      C = Vec3(cfg.orbit_radius * std::cos(angle), 0.6 * std::sin(2.3 * angle + 0.7),
               cfg.orbit_radius * std::sin(angle));
      target = cfg.lookat_jitter * Vec3(gauss(pose_rng), gauss(pose_rng), gauss(pose_rng));
    } else {
      // Pure forward motion along the optical axis.
      C = Vec3(0, 0, -(cfg.orbit_radius + 0.4 * i));
      target = Vec3(0, 0, 0);
      (void)gauss(pose_rng);  // keep the stream aligned with the orbit branch
    }
    poses[i].C = C;
    poses[i].R = look_at(C, target);
  }

  auto project = [&](const std::string& cam_id, const CameraPose& pose,
                     const Vec3& X) -> std::optional<std::pair<Vec2, Vec2>> {
    // Returns (pixel, undistorted normalized point).
    const Vec3 xc = pose.R * (X - pose.C);
    if (xc.z() < 0.2) return std::nullopt;
    const ImageFrame& frame = gt.frames.at(cam_id);
    const Vec2 u = gt.focal_norm.at(cam_id) * Vec2(xc.x() / xc.z(), xc.y() / xc.z());
    const auto rd = distorted_radius(gt.models.at(cam_id), u.norm(), frame.max_radius());
    if (!rd) return std::nullopt;
    const Vec2 pn = u.norm() > 0.0 ? Vec2(u * (*rd / u.norm())) : Vec2(0, 0);
    const Vec2 pix = denormalize(pn, frame);
    if (pix.x() < 0 || pix.x() > frame.width || pix.y() < 0 || pix.y() > frame.height)
      return std::nullopt;
    return std::make_pair(pix, u);
  };

  std::vector<CorrespondenceSet> sets;
  int pair_index = 0;
  for (int i = 0; i < cfg.n_images; ++i) {
    for (int j = i + 1; j < cfg.n_images; ++j, ++pair_index) {
      const std::string& cam_i = cam_of[i];
      const std::string& cam_j = cam_of[j];
      CorrespondenceSet set;
      set.camera_id_a = cam_i;
      set.camera_id_b = cam_j;
      set.image_id_a = "img" + std::to_string(i);
      set.image_id_b = "img" + std::to_string(j);
      set.frame_a = gt.frames.at(cam_i);
      set.frame_b = gt.frames.at(cam_j);

      PairGroundTruth pgt;
      {
        // F from the relative pose and the normalized-focal convention.
        const Mat3 R_rel = poses[j].R * poses[i].R.transpose();
        const Vec3 t_rel = poses[j].R * (poses[i].C - poses[j].C);
        const Mat3 E = skew(t_rel) * R_rel;
        const double fi = gt.focal_norm.at(cam_i);
        const double fj = gt.focal_norm.at(cam_j);
        Mat3 Ki_inv = Vec3(1.0 / fi, 1.0 / fi, 1.0).asDiagonal();
        Mat3 Kj_inv = Vec3(1.0 / fj, 1.0 / fj, 1.0).asDiagonal();
        pgt.F = Kj_inv * E * Ki_inv;
      }

      std::mt19937_64 rng(cfg.rng_seed * 1000003ull + uint64_t(pair_index) + 1ull);
      std::uniform_real_distribution<double> box(-cfg.scene_extent, cfg.scene_extent);
      std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
      std::uniform_real_distribution<double> unit(0.0, 1.0);

      const int target = cfg.n_points_per_pair;
      int attempts = 0;
      const int max_attempts = 500 * target;
      while (int(set.pairs.size()) < target && attempts < max_attempts) {
        ++attempts;
        const Vec3 X(box(rng), box(rng), box(rng));
        const auto a = project(cam_i, poses[i], X);
        if (!a) continue;
        const auto b = project(cam_j, poses[j], X);
        if (!b) continue;

        Vec2 pa = a->first, pb = b->first;
        const bool outlier = unit(rng) < cfg.outlier_fraction;
        if (outlier) {
          pa = Vec2(unit(rng) * set.frame_a.width, unit(rng) * set.frame_a.height);
          pb = Vec2(unit(rng) * set.frame_b.width, unit(rng) * set.frame_b.height);
        } else if (cfg.noise_sigma > 0.0) {
          pa += Vec2(noise(rng), noise(rng));
          pb += Vec2(noise(rng), noise(rng));
        }
        set.pairs.emplace_back(pa, pb);
        pgt.inlier_labels.push_back(!outlier);
      }
      if (int(set.pairs.size()) < std::min(target, 9))
        throw std::runtime_error("generate: insufficient shared visibility for pair " +
                                 set.image_id_a + "-" + set.image_id_b);

      gt.pairs.emplace(std::make_pair(set.image_id_a, set.image_id_b), std::move(pgt));
      sets.push_back(std::move(set));
    }
  }
  return {std::move(sets), std::move(gt)};
}

}  // namespace prada
