#pragma once

#include <vector>

#include "prada/geometry.hpp"

namespace prada {

struct RegularizerConfig {
  double weight = 1e-3;  // multiplied by the inlier count at use sites
  int n_samples = 128;
};

// Integral over [0, R] of the squared radial derivative of the undistorted
// radius r / h(r). Penalizes wild behavior of the model outside the region
// covered by correspondences. Exactly R for the identity model.
// Returns +inf when h is non-positive anywhere on the quadrature grid.
double regularization(const DivisionModel& model, double R, int n_samples = 128);

// Gradient with respect to the free coefficients theta_2..theta_k.
std::vector<double> regularization_gradient(const DivisionModel& model, double R,
                                            int n_samples = 128);

// Fraction of quadrature nodes where the undistorted radius is locally
// decreasing. Reported as a diagnostic, never enforced.
double monotonicity_violation_fraction(const DivisionModel& model, double R,
                                       int n_samples = 256);

}  // namespace prada
