#include "prada/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace prada {

namespace {

ReprojResult reproject_grid(const Camera& est, const Camera& gt, double f,
                            const ReprojOptions& opts) {
  const ImageFrame& frame = gt.frame;
  const int nx = opts.dense ? frame.width : opts.grid;
  const int ny = opts.dense ? frame.height : opts.grid;
  const double r_cap = 1.5 * std::max(est.frame.max_radius(), frame.max_radius());

  double err = 0.0;
  long n_ok = 0, n_skip = 0;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const Vec2 pix((ix + 0.5) * frame.width / nx, (iy + 0.5) * frame.height / ny);
      const Vec2 pn = normalize(pix, frame);
      const double r = pn.norm();
      const double h_gt = gt.model.h(r);
      if (h_gt <= 0.0) {
        ++n_skip;
        continue;
      }
      const Vec2 u = pn / h_gt;  // ground-truth backprojection, unit focal

      const auto rd = distorted_radius(est.model, u.norm() / f, r_cap);
      if (!rd) {
        ++n_skip;
        continue;
      }
      const Vec2 pn_est = u.norm() > 0.0 ? Vec2(u * (*rd / u.norm())) : Vec2(0, 0);
      const Vec2 pix_est = denormalize(pn_est, est.frame);
      err += (pix_est - pix).norm();
      ++n_ok;
    }
  }

  ReprojResult out;
  const long total = n_ok + n_skip;
  out.mean_px = n_ok > 0 ? err / double(n_ok) : std::numeric_limits<double>::infinity();
  out.skipped_fraction = total > 0 ? double(n_skip) / double(total) : 1.0;
  out.skip_warning = out.skipped_fraction > 0.1;
  return out;
}

}  // namespace

ReprojResult reprojection_error(const Camera& est, const Camera& gt, double est_focal,
                                const ReprojOptions& opts) {
  if (est.frame.width != gt.frame.width || est.frame.height != gt.frame.height)
    throw std::invalid_argument("reprojection_error: frame size mismatch");
  return reproject_grid(est, gt, est_focal, opts);
}

ReprojResult focal_adjusted_re(const Camera& est, const Camera& gt, const ReprojOptions& opts,
                               double* best_focal) {
  auto cost = [&](double logf) { return reproject_grid(est, gt, std::exp(logf), opts).mean_px; };

  // Golden-section search over log f.
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = -std::log(opts.max_focal_ratio);
  double b = std::log(opts.max_focal_ratio);
  double x1 = b - gr * (b - a);
  double x2 = a + gr * (b - a);
  double f1 = cost(x1), f2 = cost(x2);
  while (b - a > 1e-10) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = cost(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = cost(x2);
    }
  }
  double logf = 0.5 * (a + b);

  // The search space contains f = 1, so FA-RE can never exceed plain RE.
  const ReprojResult at_opt = reproject_grid(est, gt, std::exp(logf), opts);
  const ReprojResult at_one = reproject_grid(est, gt, 1.0, opts);
  if (at_one.mean_px < at_opt.mean_px) {
    if (best_focal) *best_focal = 1.0;
    return at_one;
  }
  if (best_focal) *best_focal = std::exp(logf);
  return at_opt;
}

double align_focal_small_angle(const DivisionModel& model, const ImageFrame& frame,
                               double ray_scale, double dx) {
  if (dx <= 0.0) dx = frame.diagonal() / 1000.0;
  const double rn = dx / frame.diagonal();
  const double ru = rn / model.h(rn);
  // Small-angle regime: the angle is identified with its tangent |u|/scale,
  // so the identity model maps exactly to focal = diagonal.
  const double theta = ru / ray_scale;
  return dx / theta;
}

}  // namespace prada
