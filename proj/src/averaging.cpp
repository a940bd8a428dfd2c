#include "prada/averaging.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace prada {

double convex_hull_area(std::vector<Vec2> points) {
  if (points.size() < 3) return 0.0;
  std::sort(points.begin(), points.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
  });
  points.erase(std::unique(points.begin(), points.end(),
                           [](const Vec2& a, const Vec2& b) { return a == b; }),
               points.end());
  const size_t n = points.size();
  if (n < 3) return 0.0;

  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Vec2> hull(2 * n);
  size_t k = 0;
  for (size_t i = 0; i < n; ++i) {  // lower
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], points[i]) <= 0) --k;
    hull[k++] = points[i];
  }
  for (size_t i = n - 1, t = k + 1; i-- > 0;) {  // upper
    while (k >= t && cross(hull[k - 2], hull[k - 1], points[i]) <= 0) --k;
    hull[k++] = points[i];
  }
  hull.resize(k > 1 ? k - 1 : 0);
  if (hull.size() < 3) return 0.0;

  double area2 = 0.0;
  for (size_t i = 0; i < hull.size(); ++i) {
    const Vec2& a = hull[i];
    const Vec2& b = hull[(i + 1) % hull.size()];
    area2 += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * std::abs(area2);
}

double coverage_weight(const std::vector<Vec2>& inlier_points, const ImageFrame& frame) {
  if (inlier_points.size() < 3)
    throw std::invalid_argument("coverage_weight: needs at least 3 points");
  const double area = convex_hull_area(inlier_points);
  const double frame_area = double(frame.width) * double(frame.height);
  return std::clamp(area / frame_area, 0.0, 1.0);
}

namespace {

struct TrapezoidRule {
  std::vector<double> nodes, weights;
  TrapezoidRule(int n, double R) {
    nodes.resize(n);
    weights.resize(n);
    const double dx = R / double(n - 1);
    for (int i = 0; i < n; ++i) {
      nodes[i] = dx * i;
      weights[i] = (i == 0 || i == n - 1) ? 0.5 * dx : dx;
    }
  }
};

// Least-squares problem behind both averaging modes. Residual per (model i,
// node s): sqrt(w_i * tw_s * r_s^3) * (d(r_s) - d_i(r_s)).
class AveragingProblem {
 public:
  AveragingProblem(const WeightedModelSet& set, DivisionModel init, int n_quad,
                   bool multiplicative)
      : theta_(std::move(init)), rule_(n_quad, set.R), multiplicative_(multiplicative) {
    const size_t n_models = set.models.size();
    const int n = n_quad;
    scale_.resize(n_models * n);
    target_.resize(n_models * n);
    for (size_t i = 0; i < n_models; ++i)
      for (int s = 0; s < n; ++s) {
        const double r = rule_.nodes[s];
        const double hi = set.models[i].h(r);
        scale_[i * n + s] =
            std::sqrt(set.weights[i] * rule_.weights[s] * r * r * r);
        target_[i * n + s] = multiplicative_ ? hi : 1.0 / hi;
      }
  }

  int dim() const { return theta_.degree() - 1; }

  bool eval(Eigen::VectorXd& residuals, Eigen::MatrixXd* jacobian) {
    const int n = int(rule_.nodes.size());
    const int m = int(scale_.size());
    residuals.resize(m);
    if (jacobian) jacobian->setZero(m, dim());
    const int k = theta_.degree();
    for (int s = 0; s < n; ++s) {
      const double r = rule_.nodes[s];
      const double h = theta_.h(r);
      if (!multiplicative_ && h <= 0.0) return false;
      const double d = multiplicative_ ? h : 1.0 / h;
      for (int i = 0; i * n + s < m; ++i) {
        const int row = i * n + s;
        residuals[row] = scale_[row] * (d - target_[row]);
        if (jacobian) {
          double rj = r * r;
          for (int j = 2; j <= k; ++j, rj *= r) {
            const double dd = multiplicative_ ? rj : -rj / (h * h);
            (*jacobian)(row, j - 2) = scale_[row] * dd;
          }
        }
      }
    }
    return true;
  }

  using State = DivisionModel;
  State snapshot() const { return theta_; }
  void restore(const State& s) { theta_ = s; }
  void apply(const Eigen::VectorXd& delta) {
    std::vector<double> free = theta_.free_coeffs();
    for (size_t j = 0; j < free.size(); ++j) free[j] += delta[long(j)];
    theta_.set_free_coeffs(free);
  }

  const DivisionModel& theta() const { return theta_; }

 private:
  DivisionModel theta_;
  TrapezoidRule rule_;
  bool multiplicative_;
  std::vector<double> scale_, target_;
};

WeightedModelSet drop_invalid(const WeightedModelSet& set, bool check_validity) {
  if (set.models.empty() || set.models.size() != set.weights.size())
    throw std::invalid_argument("averaging: empty or inconsistent model set");
  WeightedModelSet kept;
  kept.R = set.R;
  for (size_t i = 0; i < set.models.size(); ++i) {
    if (check_validity && !set.models[i].valid_on(set.R)) continue;
    kept.models.push_back(set.models[i]);
    kept.weights.push_back(set.weights[i]);
  }
  if (kept.models.empty())
    throw std::runtime_error("averaging: all input models invalid on [0, R]");
  const double wsum = std::accumulate(kept.weights.begin(), kept.weights.end(), 0.0);
  if (wsum <= 0.0) throw std::runtime_error("averaging: total weight is zero");
  for (double& w : kept.weights) w /= wsum;
  return kept;
}

DivisionModel average_impl(const WeightedModelSet& raw_set, const AveragingConfig& cfg,
                           bool multiplicative) {
  const WeightedModelSet set = drop_invalid(raw_set, !multiplicative);
  int max_deg = 2;
  for (const auto& m : set.models) max_deg = std::max(max_deg, m.degree());
  const int out_degree = cfg.out_degree > 0 ? cfg.out_degree : max_deg;
  if (out_degree < 2) throw std::invalid_argument("averaging: out_degree must be >= 2");

  const DivisionModel init = weighted_mean_model(set, out_degree);
  AveragingProblem problem(set, init, cfg.n_quad, multiplicative);
  const LmSummary summary = lm_minimize(problem, cfg.lm);
  // LM acceptance guarantees cost <= initialization cost.
  if (summary.failed) return init;
  return problem.theta();
}

}  // namespace

DivisionModel weighted_mean_model(const WeightedModelSet& set, int out_degree) {
  int max_deg = 2;
  for (const auto& m : set.models) max_deg = std::max(max_deg, m.degree());
  const int k = out_degree > 0 ? out_degree : max_deg;
  std::vector<double> coeffs(size_t(k) + 1, 0.0);
  coeffs[0] = 1.0;
  double wsum = 0.0;
  for (size_t i = 0; i < set.models.size(); ++i) wsum += set.weights[i];
  for (size_t i = 0; i < set.models.size(); ++i) {
    const auto& c = set.models[i].coeffs();
    for (size_t j = 2; j < c.size() && j < coeffs.size(); ++j)
      coeffs[j] += set.weights[i] / wsum * c[j];
  }
  return DivisionModel(std::move(coeffs));
}

DivisionModel average_divisional(const WeightedModelSet& set, const AveragingConfig& cfg) {
  return average_impl(set, cfg, false);
}

DivisionModel average_multiplicative_numeric(const WeightedModelSet& set,
                                             const AveragingConfig& cfg) {
  return average_impl(set, cfg, true);
}

std::vector<double> average_multiplicative_closed_form(const WeightedModelSet& set) {
  int max_deg = 2;
  for (const auto& m : set.models) max_deg = std::max(max_deg, m.degree());
  return weighted_mean_model(set, max_deg).coeffs();
}

}  // namespace prada
