#include "prada/ransac.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "prada/averaging.hpp"
#include "prada/refine.hpp"
#include "prada/sampson.hpp"

namespace prada {

std::vector<std::pair<Vec2, Vec2>> normalize_pairs(const CorrespondenceSet& corr) {
  std::vector<std::pair<Vec2, Vec2>> out;
  out.reserve(corr.pairs.size());
  for (const auto& [a, b] : corr.pairs)
    out.emplace_back(normalize(a, corr.frame_a), normalize(b, corr.frame_b));
  return out;
}

std::vector<std::pair<Vec2, Vec2>> TwoViewEstimate::inliers(
    const std::vector<std::pair<Vec2, Vec2>>& normalized_pairs) const {
  std::vector<std::pair<Vec2, Vec2>> out;
  out.reserve(inlier_count);
  for (size_t i = 0; i < normalized_pairs.size(); ++i)
    if (inlier_mask[i]) out.push_back(normalized_pairs[i]);
  return out;
}

bool epipole_near_center(const Mat3& F, double center_radius) {
  Eigen::JacobiSVD<Mat3> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 ep = svd.matrixV().col(2);  // F ep = 0, epipole in the p image
  const Vec3 eq = svd.matrixU().col(2);  // F^T eq = 0
  auto near_center = [&](const Vec3& e) {
    if (std::abs(e.z()) < 1e-8 * e.head<2>().norm()) return false;  // at infinity
    return (e.head<2>() / e.z()).norm() < center_radius;
  };
  return near_center(ep) && near_center(eq);
}

namespace {

struct Score {
  int inliers = 0;
  double cost = 0.0;  // truncated
  bool better_than(const Score& o) const {
    if (inliers != o.inliers) return inliers > o.inliers;
    return cost < o.cost;
  }
};

Score score_hypothesis(const std::vector<std::pair<Vec2, Vec2>>& pairs,
                       const MinimalHypothesis& hyp, double thr_sq,
                       std::vector<bool>* mask = nullptr) {
  const DivisionModel ta = DivisionModel::one_parameter(hyp.lambda_a);
  const DivisionModel tb = DivisionModel::one_parameter(hyp.lambda_b);
  Score sc;
  if (mask) mask->assign(pairs.size(), false);
  for (size_t i = 0; i < pairs.size(); ++i) {
    const double s = sampson_error(pairs[i].first, pairs[i].second, hyp.F, ta, tb);
    if (s < thr_sq) {
      ++sc.inliers;
      sc.cost += s;
      if (mask) (*mask)[i] = true;
    } else {
      sc.cost += thr_sq;
    }
  }
  return sc;
}

}  // namespace

TwoViewEstimate lo_ransac_pair(const CorrespondenceSet& corr, const RansacConfig& cfg) {
  const size_t n = corr.pairs.size();
  if (n < 9) throw std::invalid_argument("lo_ransac_pair: needs at least 9 correspondences");

  const auto pairs = normalize_pairs(corr);
  const double diag = 0.5 * (corr.frame_a.diagonal() + corr.frame_b.diagonal());
  const double thr = cfg.inlier_threshold_px / diag;
  const double thr_sq = thr * thr;

  std::mt19937_64 rng(cfg.rng_seed);
  std::vector<size_t> indices(n);
  std::iota(indices.begin(), indices.end(), size_t(0));

  MinimalHypothesis best;
  Score best_score;
  bool have_best = false;
  int max_iters = cfg.max_iterations;

  std::vector<std::pair<Vec2, Vec2>> sample(9);
  std::vector<bool> mask;
  for (int iter = 0; iter < max_iters; ++iter) {
    // Partial Fisher-Yates draw of 9 distinct indices.
    for (int j = 0; j < 9; ++j) {
      std::uniform_int_distribution<size_t> dist(j, n - 1);
      std::swap(indices[j], indices[dist(rng)]);
      sample[j] = pairs[indices[j]];
    }

    for (const MinimalHypothesis& hyp : solve_shared_lambda(sample)) {
      const Score sc = score_hypothesis(pairs, hyp, thr_sq);
      if (have_best && !sc.better_than(best_score)) continue;
      best = hyp;
      best_score = sc;
      have_best = true;

      // Local optimization: refine on the consensus set, rescore, and repeat
      // while the score keeps improving.
      for (int lo = 0; lo < 10 && best_score.inliers >= 10; ++lo) {
        score_hypothesis(pairs, best, thr_sq, &mask);
        std::vector<std::pair<Vec2, Vec2>> consensus;
        for (size_t i = 0; i < n; ++i)
          if (mask[i]) consensus.push_back(pairs[i]);
        const MinimalHypothesis refined =
            refine_two_sided_lambda(best, consensus, cfg.lo_steps);
        if (!refined.refined) break;
        const Score rsc = score_hypothesis(pairs, refined, thr_sq);
        if (!rsc.better_than(best_score)) break;
        best = refined;
        best_score = rsc;
      }

      // Adaptive termination.
      const double w = double(best_score.inliers) / double(n);
      const double p_all = std::pow(w, 9.0);
      if (p_all > 1e-12) {
        const double need = std::log(1.0 - cfg.confidence) / std::log1p(-std::min(p_all, 1.0 - 1e-12));
        if (need < double(max_iters)) max_iters = std::max(iter + 1, int(std::ceil(need)));
      }
    }
  }

  TwoViewEstimate est;
  est.theta_a = DivisionModel::identity();
  est.theta_b = DivisionModel::identity();
  est.inlier_mask.assign(n, false);
  if (!have_best) return est;

  score_hypothesis(pairs, best, thr_sq, &est.inlier_mask);
  est.F = best.F;
  est.theta_a = DivisionModel::one_parameter(best.lambda_a);
  est.theta_b = DivisionModel::one_parameter(best.lambda_b);
  est.inlier_count = int(std::count(est.inlier_mask.begin(), est.inlier_mask.end(), true));
  est.accepted = est.inlier_count >= cfg.min_inliers;
  est.degenerate_motion = epipole_near_center(best.F);

  est.cost = 0.0;
  std::vector<Vec2> in_a, in_b;
  for (size_t i = 0; i < n; ++i) {
    if (!est.inlier_mask[i]) continue;
    est.cost += sampson_error(pairs[i].first, pairs[i].second, est.F, est.theta_a, est.theta_b);
    in_a.push_back(corr.pairs[i].first);
    in_b.push_back(corr.pairs[i].second);
  }
  if (in_a.size() >= 3) {
    est.coverage_weight_a = coverage_weight(in_a, corr.frame_a);
    est.coverage_weight_b = coverage_weight(in_b, corr.frame_b);
  }
  return est;
}

TwoViewEstimate refine_pair(const TwoViewEstimate& estimate, const CorrespondenceSet& corr,
                            int degree, const RegularizerConfig& reg, bool share_models) {
  if (degree < 2) throw std::invalid_argument("refine_pair: degree must be >= 2");
  if (!estimate.accepted || estimate.inlier_count < 9) {
    TwoViewEstimate out = estimate;
    out.unrefined = true;
    return out;
  }

  const auto pairs = normalize_pairs(corr);
  const auto inliers = estimate.inliers(pairs);

  DivisionModel init_a = estimate.theta_a.with_degree(degree);
  if (share_models) {
    // One physical camera on both sides: start from the coefficient mean.
    std::vector<double> mean = estimate.theta_a.with_degree(degree).coeffs();
    const std::vector<double> cb = estimate.theta_b.with_degree(degree).coeffs();
    for (size_t j = 0; j < mean.size(); ++j) mean[j] = 0.5 * (mean[j] + cb[j]);
    init_a = DivisionModel(mean);
  }

  // reg.weight is calibrated against pixel-unit data costs; the residuals here
  // are in normalized units, so the diagonal-squared factor keeps the data
  // term dominant wherever correspondences exist.
  const double diag = 0.5 * (corr.frame_a.diagonal() + corr.frame_b.diagonal());
  const double weight = reg.weight * double(estimate.inlier_count) / (diag * diag);
  TwoViewProblem problem(inliers, FMinimal::decompose(estimate.F), init_a,
                         estimate.theta_b.with_degree(degree), weight,
                         corr.frame_a.max_radius(), corr.frame_b.max_radius(), reg.n_samples,
                         share_models);
  const LmSummary summary = lm_minimize(problem);

  const double Ra = corr.frame_a.max_radius();
  const double Rb = corr.frame_b.max_radius();
  if (summary.failed || summary.final_cost > summary.initial_cost ||
      !problem.theta_a().valid_on(Ra) || !problem.theta_b().valid_on(Rb)) {
    TwoViewEstimate out = estimate;
    out.theta_a = estimate.theta_a.with_degree(degree);
    out.theta_b = estimate.theta_b.with_degree(degree);
    out.unrefined = true;
    return out;
  }

  TwoViewEstimate out = estimate;
  out.F = problem.f().to_matrix();
  out.theta_a = problem.theta_a();
  out.theta_b = problem.theta_b();
  out.cost = problem.data_cost();
  out.unrefined = false;
  out.degenerate_motion = estimate.degenerate_motion || epipole_near_center(out.F);
  return out;
}

}  // namespace prada
