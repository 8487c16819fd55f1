#pragma once

#include <vector>

namespace stripwet {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule mapped onto [lo, hi].
QuadratureRule gauss_legendre(int n, double lo, double hi);

/// Sum_{n > n_max} exp(-lambda n) n^{-s} for s in {1/2, 3/2}. lambda = 0 is
/// allowed only for s = 3/2.
double power_tail_sum(double s, double lambda, long n_max);

}  // namespace stripwet
