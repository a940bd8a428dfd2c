#include "prada/global_refine.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "prada/averaging.hpp"
#include "prada/fundamental.hpp"
#include "prada/ransac.hpp"
#include "prada/sampson.hpp"

namespace prada {

namespace {

std::vector<std::pair<Vec2, Vec2>> normalized_inliers(const PairObservation& pair,
                                                      const ImageFrame& fa,
                                                      const ImageFrame& fb) {
  std::vector<std::pair<Vec2, Vec2>> out;
  for (size_t i = 0; i < pair.pixel_pairs.size(); ++i)
    if (pair.inlier_mask[i])
      out.emplace_back(normalize(pair.pixel_pairs[i].first, fa),
                       normalize(pair.pixel_pairs[i].second, fb));
  return out;
}

double problem_cost(const GlobalProblem& pb) {
  double cost = 0.0;
  for (const auto& pair : pb.pairs) {
    const CameraState& ca = pb.cameras.at(pair.camera_a);
    const CameraState& cb = pb.cameras.at(pair.camera_b);
    for (const auto& [p, q] : normalized_inliers(pair, ca.frame, cb.frame)) {
      const double s = sampson_error(p, q, pair.F, ca.model, cb.model);
      if (std::isfinite(s)) cost += cauchy_rho(std::sqrt(s), pb.robust_scale);
    }
  }
  return cost;
}

// LM pass over all fundamental matrices and camera model coefficients with
// Schur elimination of the per-pair 7x7 F blocks. Centers stay fixed.
void pass_models_and_f(GlobalProblem& pb, const LmOptions& opts) {
  const double c = pb.robust_scale;
  const int n_pairs = int(pb.pairs.size());

  // Camera parameter layout.
  std::map<std::string, int> cam_offset;
  std::map<std::string, int> cam_nparams;
  int total_cam = 0;
  for (const auto& [id, cam] : pb.cameras) {
    cam_offset[id] = total_cam;
    cam_nparams[id] = cam.model.degree() - 1;
    total_cam += cam.model.degree() - 1;
  }

  std::vector<FMinimal> fmins(n_pairs);
  std::vector<std::vector<std::pair<Vec2, Vec2>>> inl(n_pairs);
  for (int i = 0; i < n_pairs; ++i) {
    fmins[i] = FMinimal::decompose(pb.pairs[i].F);
    inl[i] = normalized_inliers(pb.pairs[i], pb.cameras.at(pb.pairs[i].camera_a).frame,
                                pb.cameras.at(pb.pairs[i].camera_b).frame);
  }

  auto cost_at = [&](const std::vector<FMinimal>& fs,
                     const std::map<std::string, CameraState>& cams) {
    double cost = 0.0;
    for (int i = 0; i < n_pairs; ++i) {
      const Mat3 F = fs[i].to_matrix();
      const DivisionModel& ta = cams.at(pb.pairs[i].camera_a).model;
      const DivisionModel& tb = cams.at(pb.pairs[i].camera_b).model;
      for (const auto& [p, q] : inl[i]) {
        const double s = sampson_error(p, q, F, ta, tb);
        if (std::isfinite(s)) cost += cauchy_rho(std::sqrt(s), c);
      }
    }
    return cost;
  };

  double cost = cost_at(fmins, pb.cameras);
  if (!std::isfinite(cost)) return;
  double lambda = opts.init_lambda;

  struct PairBlocks {
    Eigen::Matrix<double, 7, 7> Hff;
    Eigen::MatrixXd Hfc;  // 7 x (ka + kb)
    Vec7 gf;
    std::array<int, 2> local_cols;  // sizes of the two camera blocks
    std::array<int, 2> offsets;     // global offsets
  };

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    // Linearize.
    std::vector<PairBlocks> blocks(n_pairs);
    Eigen::MatrixXd Hcc = Eigen::MatrixXd::Zero(total_cam, total_cam);
    Eigen::VectorXd gc = Eigen::VectorXd::Zero(total_cam);

    for (int i = 0; i < n_pairs; ++i) {
      const auto& pair = pb.pairs[i];
      const DivisionModel& ta = pb.cameras.at(pair.camera_a).model;
      const DivisionModel& tb = pb.cameras.at(pair.camera_b).model;
      const int ka = ta.degree() - 1, kb = tb.degree() - 1;
      PairBlocks& blk = blocks[i];
      blk.Hff.setZero();
      blk.Hfc = Eigen::MatrixXd::Zero(7, ka + kb);
      blk.gf.setZero();
      blk.local_cols = {ka, kb};
      blk.offsets = {cam_offset[pair.camera_a], cam_offset[pair.camera_b]};

      Eigen::MatrixXd Hcc_loc = Eigen::MatrixXd::Zero(ka + kb, ka + kb);
      Eigen::VectorXd gc_loc = Eigen::VectorXd::Zero(ka + kb);

      const Mat3 F = fmins[i].to_matrix();
      const auto dF = fmins[i].param_jacobians();
      for (const auto& [p, q] : inl[i]) {
        const SampsonEval ev = sampson_eval(p, q, F, ta, tb);
        if (ev.degenerate || !std::isfinite(ev.e)) continue;
        const double w = cauchy_weight(ev.e * ev.e, c);
        const Vec7 jf = ev.e_fmin(dF);
        Eigen::VectorXd jc(ka + kb);
        jc.head(ka) = ev.e_theta_p;
        jc.tail(kb) = ev.e_theta_q;

        blk.Hff += w * jf * jf.transpose();
        blk.Hfc += w * jf * jc.transpose();
        blk.gf += w * jf * ev.e;
        Hcc_loc += w * jc * jc.transpose();
        gc_loc += w * jc * ev.e;
      }

      // Scatter camera-camera contributions (handles shared-camera pairs).
      auto scatter = [&](int li, int lj) {
        const int szi = blk.local_cols[li], szj = blk.local_cols[lj];
        const int li0 = li == 0 ? 0 : blk.local_cols[0];
        const int lj0 = lj == 0 ? 0 : blk.local_cols[0];
        Hcc.block(blk.offsets[li], blk.offsets[lj], szi, szj) +=
            Hcc_loc.block(li0, lj0, szi, szj);
      };
      scatter(0, 0);
      scatter(0, 1);
      scatter(1, 0);
      scatter(1, 1);
      gc.segment(blk.offsets[0], blk.local_cols[0]) += gc_loc.head(blk.local_cols[0]);
      gc.segment(blk.offsets[1], blk.local_cols[1]) += gc_loc.tail(blk.local_cols[1]);
    }

    bool accepted = false;
    while (lambda <= opts.max_lambda) {
      // Damped Schur complement onto the camera block.
      Eigen::MatrixXd S = Hcc;
      for (int i = 0; i < total_cam; ++i) S(i, i) += lambda * std::max(Hcc(i, i), 1e-12);
      Eigen::VectorXd bc = gc;

      std::vector<Eigen::LDLT<Eigen::Matrix<double, 7, 7>>> ff_solvers;
      ff_solvers.reserve(n_pairs);
      for (int i = 0; i < n_pairs; ++i) {
        Eigen::Matrix<double, 7, 7> Hffd = blocks[i].Hff;
        for (int k = 0; k < 7; ++k) Hffd(k, k) += lambda * std::max(Hffd(k, k), 1e-12);
        ff_solvers.emplace_back(Hffd);
        const Eigen::MatrixXd HinvHfc = ff_solvers[i].solve(blocks[i].Hfc);  // 7 x (ka+kb)
        const Eigen::VectorXd Hinvgf = ff_solvers[i].solve(blocks[i].gf);

        // S -= Hcf Hff^-1 Hfc, scattered over the two camera blocks.
        const Eigen::MatrixXd corr = blocks[i].Hfc.transpose() * HinvHfc;
        const Eigen::VectorXd bcorr = blocks[i].Hfc.transpose() * Hinvgf;
        const auto& blk = blocks[i];
        for (int li = 0; li < 2; ++li) {
          const int li0 = li == 0 ? 0 : blk.local_cols[0];
          bc.segment(blk.offsets[li], blk.local_cols[li]) -=
              bcorr.segment(li0, blk.local_cols[li]);
          for (int lj = 0; lj < 2; ++lj) {
            const int lj0 = lj == 0 ? 0 : blk.local_cols[0];
            S.block(blk.offsets[li], blk.offsets[lj], blk.local_cols[li], blk.local_cols[lj]) -=
                corr.block(li0, lj0, blk.local_cols[li], blk.local_cols[lj]);
          }
        }
      }

      const Eigen::VectorXd dc = S.ldlt().solve(-bc);
      if (!dc.allFinite()) {
        lambda *= opts.lambda_up;
        continue;
      }

      // Candidate state.
      std::vector<FMinimal> fs_new = fmins;
      std::map<std::string, CameraState> cams_new = pb.cameras;
      for (int i = 0; i < n_pairs; ++i) {
        const auto& blk = blocks[i];
        Eigen::VectorXd dc_loc(blk.local_cols[0] + blk.local_cols[1]);
        dc_loc.head(blk.local_cols[0]) = dc.segment(blk.offsets[0], blk.local_cols[0]);
        dc_loc.tail(blk.local_cols[1]) = dc.segment(blk.offsets[1], blk.local_cols[1]);
        const Vec7 df = -ff_solvers[i].solve(blk.gf + blk.Hfc * dc_loc);
        if (!df.allFinite()) continue;
        fs_new[i] = fmins[i].retracted(df);
      }
      for (auto& [id, cam] : cams_new) {
        std::vector<double> free = cam.model.free_coeffs();
        for (size_t j = 0; j < free.size(); ++j) free[j] += dc[cam_offset[id] + int(j)];
        cam.model.set_free_coeffs(free);
      }

      const double new_cost = cost_at(fs_new, cams_new);
      if (std::isfinite(new_cost) && new_cost < cost) {
        const double rel = (cost - new_cost) / std::max(cost, 1e-300);
        fmins = std::move(fs_new);
        pb.cameras = std::move(cams_new);
        cost = new_cost;
        lambda = std::max(lambda * opts.lambda_down, 1e-15);
        accepted = true;
        if (rel < opts.rel_decrease_tol) iter = opts.max_iterations;  // converged
        break;
      }
      lambda *= opts.lambda_up;
    }
    if (!accepted) break;
  }

  for (int i = 0; i < n_pairs; ++i) pb.pairs[i].F = fmins[i].to_matrix();
}

// LM pass over principal points of the given cameras, all else fixed.
void pass_centers(GlobalProblem& pb, const std::vector<std::string>& free_cams,
                  const LmOptions& opts, double bound_frac) {
  if (free_cams.empty()) return;
  const double c = pb.robust_scale;
  std::map<std::string, int> offset;
  for (size_t i = 0; i < free_cams.size(); ++i) offset[free_cams[i]] = int(2 * i);
  const int n = int(2 * free_cams.size());

  auto clamp_center = [&](CameraState& cam) {
    const double hw = 0.5 * bound_frac * cam.frame.width;
    const double hh = 0.5 * bound_frac * cam.frame.height;
    const Vec2 mid(0.5 * cam.frame.width, 0.5 * cam.frame.height);
    cam.frame.principal_point.x() =
        std::clamp(cam.frame.principal_point.x(), mid.x() - hw, mid.x() + hw);
    cam.frame.principal_point.y() =
        std::clamp(cam.frame.principal_point.y(), mid.y() - hh, mid.y() + hh);
  };

  double cost = problem_cost(pb);
  if (!std::isfinite(cost)) return;
  double lambda = opts.init_lambda;

  SampsonDerivRequest req;
  req.wrt_f = false;
  req.wrt_theta = false;
  req.wrt_points = true;

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    for (const auto& pair : pb.pairs) {
      const CameraState& ca = pb.cameras.at(pair.camera_a);
      const CameraState& cb = pb.cameras.at(pair.camera_b);
      const auto ia = offset.find(pair.camera_a);
      const auto ib = offset.find(pair.camera_b);
      if (ia == offset.end() && ib == offset.end()) continue;
      for (const auto& [p, q] : normalized_inliers(pair, ca.frame, cb.frame)) {
        const SampsonEval ev = sampson_eval(p, q, pair.F, ca.model, cb.model, req);
        if (ev.degenerate || !std::isfinite(ev.e)) continue;
        const double w = cauchy_weight(ev.e * ev.e, c);
        Eigen::VectorXd j = Eigen::VectorXd::Zero(n);
        if (ia != offset.end())
          j.segment<2>(ia->second) += -ev.e_p / ca.frame.diagonal();
        if (ib != offset.end())
          j.segment<2>(ib->second) += -ev.e_q / cb.frame.diagonal();
        H += w * j * j.transpose();
        g += w * j * ev.e;
      }
    }

    bool accepted = false;
    while (lambda <= opts.max_lambda) {
      Eigen::MatrixXd Hd = H;
      for (int i = 0; i < n; ++i) Hd(i, i) += lambda * std::max(H(i, i), 1e-12);
      const Eigen::VectorXd delta = Hd.ldlt().solve(-g);
      if (!delta.allFinite()) {
        lambda *= opts.lambda_up;
        continue;
      }
      auto cams_saved = pb.cameras;
      for (const auto& [id, off] : offset) {
        pb.cameras.at(id).frame.principal_point += delta.segment<2>(off);
        clamp_center(pb.cameras.at(id));
      }
      const double new_cost = problem_cost(pb);
      if (std::isfinite(new_cost) && new_cost < cost) {
        const double rel = (cost - new_cost) / std::max(cost, 1e-300);
        cost = new_cost;
        lambda = std::max(lambda * opts.lambda_down, 1e-15);
        accepted = true;
        if (rel < opts.rel_decrease_tol) iter = opts.max_iterations;
        break;
      }
      pb.cameras = std::move(cams_saved);
      lambda *= opts.lambda_up;
    }
    if (!accepted) break;
  }
}

double mean_pair_coverage(const GlobalProblem& pb, const std::string& cam_id) {
  double sum = 0.0;
  int count = 0;
  for (const auto& pair : pb.pairs) {
    for (int side = 0; side < 2; ++side) {
      const std::string& cid = side == 0 ? pair.camera_a : pair.camera_b;
      if (cid != cam_id) continue;
      std::vector<Vec2> pts;
      for (size_t i = 0; i < pair.pixel_pairs.size(); ++i)
        if (pair.inlier_mask[i])
          pts.push_back(side == 0 ? pair.pixel_pairs[i].first : pair.pixel_pairs[i].second);
      if (pts.size() >= 3) sum += coverage_weight(pts, pb.cameras.at(cam_id).frame);
      ++count;
    }
  }
  return count > 0 ? sum / count : 0.0;
}

void reclassify_inliers(GlobalProblem& pb, const GlobalConfig& cfg) {
  for (auto& pair : pb.pairs) {
    const CameraState& ca = pb.cameras.at(pair.camera_a);
    const CameraState& cb = pb.cameras.at(pair.camera_b);
    const double diag = 0.5 * (ca.frame.diagonal() + cb.frame.diagonal());
    const double thr_sq = std::pow(cfg.inlier_threshold_px / diag, 2.0);
    for (size_t i = 0; i < pair.pixel_pairs.size(); ++i) {
      if (!cfg.reclassify_all && !pair.inlier_mask[i]) continue;
      const Vec2 p = normalize(pair.pixel_pairs[i].first, ca.frame);
      const Vec2 q = normalize(pair.pixel_pairs[i].second, cb.frame);
      const double s = sampson_error(p, q, pair.F, ca.model, cb.model);
      pair.inlier_mask[i] = std::isfinite(s) && s < thr_sq;
    }
  }
}

void check_cameras_alive(const GlobalProblem& pb) {
  for (const auto& [id, cam] : pb.cameras) {
    int count = 0;
    for (const auto& pair : pb.pairs) {
      if (pair.camera_a != id && pair.camera_b != id) continue;
      for (bool b : pair.inlier_mask) count += b ? 1 : 0;
    }
    if (count == 0)
      throw std::runtime_error("global_refine: camera '" + id + "' lost all inliers");
  }
}

}  // namespace

double global_cost(const GlobalProblem& problem) { return problem_cost(problem); }

GlobalProblem global_refine(const GlobalProblem& problem, const GlobalConfig& cfg) {
  if (cfg.n_outer < 1) throw std::invalid_argument("global_refine: n_outer must be >= 1");
  for (const auto& pair : problem.pairs) {
    if (!problem.cameras.count(pair.camera_a) || !problem.cameras.count(pair.camera_b))
      throw std::invalid_argument("global_refine: pair references unknown camera");
    if (pair.inlier_mask.size() != pair.pixel_pairs.size())
      throw std::invalid_argument("global_refine: inlier mask size mismatch");
  }
  check_cameras_alive(problem);

  GlobalProblem pb = problem;
  if (pb.robust_scale <= 0.0) {
    // Default: half the inlier threshold in normalized units of the first frame.
    const double diag = pb.cameras.begin()->second.frame.diagonal();
    pb.robust_scale = 0.5 * cfg.inlier_threshold_px / diag;
  }

  for (int round = 0; round < cfg.n_outer; ++round) {
    GlobalProblem snapshot = pb;
    pass_models_and_f(pb, cfg.lm);

    if (cfg.optimize_centers) {
      std::vector<std::string> free_cams;
      for (const auto& [id, cam] : pb.cameras)
        if (mean_pair_coverage(pb, id) > cfg.center_coverage_min) free_cams.push_back(id);
      pass_centers(pb, free_cams, cfg.lm, cfg.center_bound_frac);
    }

    if (!std::isfinite(problem_cost(pb))) return snapshot;  // abort round

    reclassify_inliers(pb, cfg);
    check_cameras_alive(pb);
  }
  return pb;
}

}  // namespace prada
