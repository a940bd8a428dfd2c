#include "prada/geometry.hpp"

#include <cmath>

namespace prada {

void ImageFrame::validate() const {
  if (width <= 0 || height <= 0)
    throw std::invalid_argument("ImageFrame: non-positive dimensions");
  if (!principal_point.allFinite() || principal_point.x() < 0.0 ||
      principal_point.x() > width || principal_point.y() < 0.0 || principal_point.y() > height)
    throw std::invalid_argument("ImageFrame: principal point outside image");
}

double ImageFrame::max_radius() const {
  const double d = diagonal();
  double r = 0.0;
  const double xs[2] = {0.0, double(width)};
  const double ys[2] = {0.0, double(height)};
  for (double x : xs)
    for (double y : ys)
      r = std::max(r, (Vec2(x, y) - principal_point).norm() / d);
  return r;
}

DivisionModel::DivisionModel(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.size() < 3)
    throw std::invalid_argument("DivisionModel: degree must be >= 2");
  if (coeffs_[0] != 1.0 || coeffs_[1] != 0.0)
    throw std::invalid_argument("DivisionModel: theta_0 must be 1 and theta_1 must be 0");
  for (double c : coeffs_)
    if (!std::isfinite(c)) throw std::invalid_argument("DivisionModel: non-finite coefficient");
}

DivisionModel DivisionModel::identity(int degree) {
  std::vector<double> c(size_t(degree) + 1, 0.0);
  c[0] = 1.0;
  return DivisionModel(std::move(c));
}

DivisionModel DivisionModel::one_parameter(double lambda, int degree) {
  DivisionModel m = identity(degree);
  m.coeffs_[2] = lambda;
  return m;
}

double DivisionModel::h(double r) const {
  double v = coeffs_.back();
  for (int i = int(coeffs_.size()) - 2; i >= 0; --i) v = v * r + coeffs_[i];
  return v;
}

double DivisionModel::h_prime(double r) const {
  const int k = degree();
  double v = k * coeffs_[k];
  for (int i = k - 1; i >= 1; --i) v = v * r + i * coeffs_[i];
  return v;
}

double DivisionModel::g(double r) const {
  // sum_{i>=2} i theta_i r^{i-2}
  const int k = degree();
  double v = k * coeffs_[k];
  for (int i = k - 1; i >= 2; --i) v = v * r + i * coeffs_[i];
  return v;
}

double DivisionModel::g_prime_over_r(double r) const {
  // sum_{i>=3} i (i-2) theta_i r^{i-4}; the i=2 term vanishes.
  const int k = degree();
  if (k < 3) return 0.0;
  double v = 0.0;
  for (int i = k; i >= 3; --i) v = v * r + double(i) * (i - 2) * coeffs_[i];
  return v / r;  // the i=3 term carries 1/r; callers guard r > 0
}

Vec3 DivisionModel::undistort(const Vec2& p) const {
  const double hz = h(p.norm());
  if (hz <= 0.0)
    throw std::domain_error("DivisionModel::undistort: non-positive h at radius " +
                            std::to_string(p.norm()));
  return Vec3(p.x(), p.y(), hz);
}

bool DivisionModel::valid_on(double R, int n_grid) const {
  for (int i = 0; i < n_grid; ++i) {
    const double r = R * double(i) / double(n_grid - 1);
    if (h(r) <= 0.0) return false;
  }
  return true;
}

void DivisionModel::set_free_coeffs(const std::vector<double>& free) {
  if (free.size() != coeffs_.size() - 2)
    throw std::invalid_argument("set_free_coeffs: size mismatch");
  std::copy(free.begin(), free.end(), coeffs_.begin() + 2);
}

DivisionModel DivisionModel::with_degree(int k) const {
  for (size_t i = size_t(k) + 1; i < coeffs_.size(); ++i)
    if (coeffs_[i] != 0.0)
      throw std::invalid_argument("with_degree: would drop a nonzero coefficient");
  std::vector<double> c(size_t(k) + 1, 0.0);
  for (size_t i = 0; i < coeffs_.size() && i < c.size(); ++i) c[i] = coeffs_[i];
  return DivisionModel(std::move(c));
}

}  // namespace prada
