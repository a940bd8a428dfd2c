#include "prada/regularizer.hpp"

#include <cmath>
#include <limits>

#include "prada/quadrature.hpp"

namespace prada {

namespace {

// d/dr of r / h(r).
inline double u_prime(const DivisionModel& m, double r, double* h_out = nullptr) {
  const double h = m.h(r);
  if (h_out) *h_out = h;
  const double hp = m.h_prime(r);
  return (h - r * hp) / (h * h);
}

}  // namespace

double regularization(const DivisionModel& model, double R, int n_samples) {
  const QuadratureRule rule = gauss_legendre(n_samples, 0.0, R);
  double acc = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    double h = 0.0;
    const double up = u_prime(model, rule.nodes[i], &h);
    if (h <= 0.0) return std::numeric_limits<double>::infinity();
    acc += rule.weights[i] * up * up;
  }
  return acc;
}

std::vector<double> regularization_gradient(const DivisionModel& model, double R,
                                            int n_samples) {
  const QuadratureRule rule = gauss_legendre(n_samples, 0.0, R);
  const int k = model.degree();
  std::vector<double> grad(size_t(k) - 1, 0.0);
  for (int i = 0; i < n_samples; ++i) {
    const double r = rule.nodes[i];
    const double h = model.h(r);
    if (h <= 0.0) {
      std::fill(grad.begin(), grad.end(), std::numeric_limits<double>::infinity());
      return grad;
    }
    const double hp = model.h_prime(r);
    const double N = h - r * hp;
    const double up = N / (h * h);
    const double h3 = h * h * h;
    double rj = r * r;  // r^j starting at j = 2
    for (int j = 2; j <= k; ++j, rj *= r) {
      const double dup = ((1.0 - j) * rj * h - 2.0 * N * rj) / h3;
      grad[size_t(j) - 2] += rule.weights[i] * 2.0 * up * dup;
    }
  }
  return grad;
}

double monotonicity_violation_fraction(const DivisionModel& model, double R, int n_samples) {
  int bad = 0;
  for (int i = 0; i < n_samples; ++i) {
    const double r = R * double(i) / double(n_samples - 1);
    double h = 0.0;
    const double up = u_prime(model, r, &h);
    if (h <= 0.0 || up <= 0.0) ++bad;
  }
  return double(bad) / double(n_samples);
}

}  // namespace prada
