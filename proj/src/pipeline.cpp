#include "prada/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include "prada/averaging.hpp"
#include "prada/global_refine.hpp"
#include "prada/sampson.hpp"

namespace prada {

namespace {

constexpr double kWeightFloor = 0.01;

double robust_pair_cost(const std::vector<std::pair<Vec2, Vec2>>& normalized,
                        const std::vector<bool>& mask, const Mat3& F,
                        const DivisionModel& ta, const DivisionModel& tb, double scale) {
  double cost = 0.0;
  for (size_t i = 0; i < normalized.size(); ++i) {
    if (!mask[i]) continue;
    const double s = sampson_error(normalized[i].first, normalized[i].second, F, ta, tb);
    if (std::isfinite(s)) cost += cauchy_rho(std::sqrt(s), scale);
  }
  return cost;
}

double pair_robust_scale(const CorrespondenceSet& corr, double threshold_px) {
  const double diag = 0.5 * (corr.frame_a.diagonal() + corr.frame_b.diagonal());
  return 0.5 * threshold_px / diag;
}

// All images of a camera must agree on size and principal point.
std::map<std::string, ImageFrame> camera_frames(const MatchFile& matches) {
  std::map<std::string, ImageFrame> frames;
  for (const auto& img : matches.images) {
    auto [it, inserted] = frames.emplace(img.camera_id, img.frame);
    if (inserted) continue;
    const ImageFrame& f = it->second;
    if (f.width != img.frame.width || f.height != img.frame.height ||
        (f.principal_point - img.frame.principal_point).norm() > 1e-9)
      throw DataError("camera '" + img.camera_id + "' has images with inconsistent frames");
  }
  return frames;
}

struct PairWork {
  TwoViewEstimate init;
  TwoViewEstimate refined;
  bool skipped = false;  // too few correspondences for the minimal solver
};

}  // namespace

CameraModelFile CameraResult::to_file(const std::map<std::string, double>& stage_costs) const {
  CameraModelFile file;
  file.camera_id = camera_id;
  file.model = model;
  file.frame = frame;
  file.stage = "global";
  file.low_confidence = low_confidence;
  file.n_pairs = n_pairs;
  file.inlier_count = inlier_count;
  file.costs = stage_costs;
  return file;
}

PipelineResult calibrate(const MatchFile& matches, const PipelineConfig& cfg) {
  if (cfg.degree < 2) throw std::invalid_argument("calibrate: degree must be >= 2");
  if (matches.pairs.empty()) throw DataError("calibrate: no pairs in the match file");
  const auto frames = camera_frames(matches);

  RansacConfig ransac_cfg;
  ransac_cfg.inlier_threshold_px = cfg.threshold_px;
  RegularizerConfig reg;
  reg.weight = cfg.reg_weight;

  // Stage 1 and 2: independent per-pair estimation, parallel across pairs.
  const int n_pairs = int(matches.pairs.size());
  std::vector<PairWork> work(n_pairs);
  {
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n_pairs) return;
        try {
          const CorrespondenceSet& corr = matches.pairs[i];
          PairWork& w = work[i];
          if (corr.pairs.size() < 9) {
            w.skipped = true;
            w.init.inlier_mask.assign(corr.pairs.size(), false);
            w.refined = w.init;
            continue;
          }
          RansacConfig rc = ransac_cfg;
          rc.rng_seed = cfg.seed * 1000003ull + uint64_t(i) + 1ull;
          w.init = lo_ransac_pair(corr, rc);
          w.refined = refine_pair(w.init, corr, cfg.degree, reg,
                                  corr.camera_id_a == corr.camera_id_b);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          next.store(n_pairs);
          return;
        }
      }
    };
    int n_threads = cfg.jobs > 0 ? cfg.jobs : int(std::thread::hardware_concurrency());
    n_threads = std::clamp(n_threads, 1, n_pairs);
    if (n_threads == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
  }

  PipelineResult result;
  double cost_init = 0.0, cost_refined = 0.0;
  for (int i = 0; i < n_pairs; ++i) {
    const CorrespondenceSet& corr = matches.pairs[i];
    const PairWork& w = work[i];
    PairReport rep;
    rep.image_a = corr.image_id_a;
    rep.image_b = corr.image_id_b;
    rep.camera_a = corr.camera_id_a;
    rep.camera_b = corr.camera_id_b;
    rep.n_matches = int(corr.pairs.size());
    rep.inlier_count = w.refined.inlier_count;
    rep.weight_a = w.refined.coverage_weight_a;
    rep.weight_b = w.refined.coverage_weight_b;
    rep.accepted = !w.skipped && w.refined.accepted;
    rep.degenerate_motion = w.refined.degenerate_motion;
    rep.unrefined = w.refined.unrefined;
    if (rep.accepted) {
      const auto normalized = normalize_pairs(corr);
      const double scale = pair_robust_scale(corr, cfg.threshold_px);
      rep.cost_init = robust_pair_cost(normalized, w.init.inlier_mask, w.init.F,
                                       w.init.theta_a, w.init.theta_b, scale);
      rep.cost_refined = robust_pair_cost(normalized, w.refined.inlier_mask, w.refined.F,
                                          w.refined.theta_a, w.refined.theta_b, scale);
      cost_init += rep.cost_init;
      cost_refined += rep.cost_refined;
    }
    result.pairs.push_back(std::move(rep));
  }
  result.stage_costs["init"] = cost_init;
  result.stage_costs["refined"] = cost_refined;

  // Per-camera weighted model collections.
  struct CameraAccum {
    WeightedModelSet init_set;
    WeightedModelSet refined_set;
    // Fallback sets including degenerate-motion pairs, used only when every
    // pair of the camera is degenerate (e.g. pure forward motion).
    WeightedModelSet init_all;
    WeightedModelSet refined_all;
    int n_accepted = 0;
    int n_degenerate = 0;
  };
  std::map<std::string, CameraAccum> accum;
  for (const auto& [id, frame] : frames) {
    accum[id].init_set.R = frame.max_radius();
    accum[id].refined_set.R = frame.max_radius();
    accum[id].init_all.R = frame.max_radius();
    accum[id].refined_all.R = frame.max_radius();
  }
  for (int i = 0; i < n_pairs; ++i) {
    const PairWork& w = work[i];
    if (work[i].skipped || !w.refined.accepted) continue;
    const CorrespondenceSet& corr = matches.pairs[i];
    // Degenerate-motion pairs (epipole near the center) carry almost no
    // distortion information and produce wild per-pair models; keep them out
    // of the averaging sets unless nothing else is available.
    auto add = [&](const std::string& cam_id, const DivisionModel& m_init,
                   const DivisionModel& m_ref, double raw_weight) {
      CameraAccum& a = accum.at(cam_id);
      const double wgt = std::max(raw_weight, kWeightFloor);
      if (!w.refined.degenerate_motion) {
        a.init_set.models.push_back(m_init.with_degree(cfg.degree));
        a.init_set.weights.push_back(wgt);
        a.refined_set.models.push_back(m_ref);
        a.refined_set.weights.push_back(wgt);
      }
      a.init_all.models.push_back(m_init.with_degree(cfg.degree));
      a.init_all.weights.push_back(wgt);
      a.refined_all.models.push_back(m_ref);
      a.refined_all.weights.push_back(wgt);
    };
    add(corr.camera_id_a, w.init.theta_a, w.refined.theta_a, w.refined.coverage_weight_a);
    add(corr.camera_id_b, w.init.theta_b, w.refined.theta_b, w.refined.coverage_weight_b);
    accum.at(corr.camera_id_a).n_accepted += 1;
    accum.at(corr.camera_id_a).n_degenerate += w.refined.degenerate_motion ? 1 : 0;
    if (corr.camera_id_b != corr.camera_id_a) {
      accum.at(corr.camera_id_b).n_accepted += 1;
      accum.at(corr.camera_id_b).n_degenerate += w.refined.degenerate_motion ? 1 : 0;
    }
  }
  for (auto& [id, a] : accum) {
    if (a.init_set.models.empty()) {
      a.init_set = a.init_all;
      a.refined_set = a.refined_all;
    }
  }

  // Stage 3: functional averaging per camera.
  GlobalProblem problem;
  for (auto& [id, a] : accum) {
    if (a.init_set.models.empty())
      throw std::runtime_error("calibrate: no pair survived for camera '" + id + "'");
    const double sum_i = std::accumulate(a.init_set.weights.begin(), a.init_set.weights.end(), 0.0);
    for (double& wgt : a.init_set.weights) wgt /= sum_i;
    const double sum_r =
        std::accumulate(a.refined_set.weights.begin(), a.refined_set.weights.end(), 0.0);
    for (double& wgt : a.refined_set.weights) wgt /= sum_r;

    CameraResult& cam = result.cameras[id];
    cam.camera_id = id;
    cam.frame = frames.at(id);
    cam.stage_init = weighted_mean_model(a.init_set, cfg.degree);
    cam.stage_refined = weighted_mean_model(a.refined_set, cfg.degree);
    AveragingConfig avg_cfg;
    avg_cfg.out_degree = cfg.degree;
    cam.stage_averaged = average_divisional(a.refined_set, avg_cfg);
    cam.low_confidence = a.n_degenerate * 2 > a.n_accepted;
    cam.n_pairs = a.n_accepted;

    CameraState state;
    state.model = cam.stage_averaged;
    state.frame = cam.frame;
    state.low_confidence = cam.low_confidence;
    problem.cameras[id] = std::move(state);
  }

  // Stage 4: global refinement over the accepted pairs.
  double cost_averaged = 0.0;
  for (int i = 0; i < n_pairs; ++i) {
    const PairWork& w = work[i];
    if (w.skipped || !w.refined.accepted) continue;
    const CorrespondenceSet& corr = matches.pairs[i];
    PairObservation obs;
    obs.image_a = corr.image_id_a;
    obs.image_b = corr.image_id_b;
    obs.camera_a = corr.camera_id_a;
    obs.camera_b = corr.camera_id_b;
    obs.F = w.refined.F;
    obs.pixel_pairs = corr.pairs;
    obs.inlier_mask = w.refined.inlier_mask;
    obs.degenerate_motion = w.refined.degenerate_motion;
    problem.pairs.push_back(std::move(obs));

    cost_averaged += robust_pair_cost(
        normalize_pairs(corr), w.refined.inlier_mask, w.refined.F,
        problem.cameras.at(corr.camera_id_a).model, problem.cameras.at(corr.camera_id_b).model,
        pair_robust_scale(corr, cfg.threshold_px));
  }
  result.stage_costs["averaged"] = cost_averaged;

  GlobalConfig global_cfg;
  global_cfg.n_outer = cfg.outer_rounds;
  global_cfg.inlier_threshold_px = cfg.threshold_px;
  global_cfg.optimize_centers = cfg.optimize_centers;
  const GlobalProblem solved = global_refine(problem, global_cfg);

  double cost_global = 0.0;
  std::map<std::string, long> final_inliers;
  for (const auto& obs : solved.pairs) {
    const CameraState& ca = solved.cameras.at(obs.camera_a);
    const CameraState& cb = solved.cameras.at(obs.camera_b);
    std::vector<std::pair<Vec2, Vec2>> normalized;
    normalized.reserve(obs.pixel_pairs.size());
    for (const auto& [pa, pb] : obs.pixel_pairs)
      normalized.emplace_back(normalize(pa, ca.frame), normalize(pb, cb.frame));
    const double diag = 0.5 * (ca.frame.diagonal() + cb.frame.diagonal());
    cost_global += robust_pair_cost(normalized, obs.inlier_mask, obs.F, ca.model, cb.model,
                                    0.5 * cfg.threshold_px / diag);
    const long n_in = std::count(obs.inlier_mask.begin(), obs.inlier_mask.end(), true);
    final_inliers[obs.camera_a] += n_in;
    if (obs.camera_b != obs.camera_a) final_inliers[obs.camera_b] += n_in;
  }
  result.stage_costs["global"] = cost_global;

  for (auto& [id, cam] : result.cameras) {
    const CameraState& state = solved.cameras.at(id);
    cam.model = state.model;
    cam.frame = state.frame;
    cam.inlier_count = final_inliers[id];
  }
  return result;
}

void write_report(const std::string& path, const PipelineResult& result) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write report: " + path);
  os << "record,fields\n";
  for (const auto& p : result.pairs)
    os << "pair," << p.image_a << "," << p.image_b << "," << p.camera_a << "," << p.camera_b
       << "," << p.n_matches << "," << p.inlier_count << "," << (p.accepted ? 1 : 0) << ","
       << (p.degenerate_motion ? 1 : 0) << "," << (p.unrefined ? 1 : 0) << ","
       << format_double(p.weight_a) << "," << format_double(p.weight_b) << ","
       << format_double(p.cost_init) << "," << format_double(p.cost_refined) << "\n";
  for (const auto& [id, cam] : result.cameras) {
    os << "camera," << id << "," << cam.n_pairs << "," << cam.inlier_count << ","
       << (cam.low_confidence ? 1 : 0);
    for (double c : cam.model.coeffs()) os << "," << format_double(c);
    os << "\n";
  }
  for (const char* stage : {"init", "refined", "averaged", "global"})
    os << "stage_cost," << stage << "," << format_double(result.stage_costs.at(stage)) << "\n";
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace prada
