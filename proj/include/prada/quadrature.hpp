#pragma once

#include <vector>

namespace prada {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre rule on [a, b]. Rules are cached per n.
const QuadratureRule& gauss_legendre_01(int n);
QuadratureRule gauss_legendre(int n, double a, double b);

}  // namespace prada
