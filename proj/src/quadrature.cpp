#include "stripwet/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stripwet {

QuadratureRule gauss_legendre(int n, double lo, double hi) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n >= 1 required");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double mid = 0.5 * (hi + lo);
  const double half = 0.5 * (hi - lo);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = mid - half * z;
    rule.nodes[n - 1 - i] = mid + half * z;
    rule.weights[i] = half * w;
    rule.weights[n - 1 - i] = half * w;
  }
  return rule;
}

namespace {

double partial_sum(double s, double lambda, long n_max) {
  double acc = 0.0;
  for (long n = n_max; n >= 1; --n) acc += std::exp(-lambda * n) * std::pow(static_cast<double>(n), -s);
  return acc;
}

// Li_s(e^{-mu}) for 0 < mu < 2 pi:
//   Gamma(1 - s) mu^{s-1} + sum_k zeta(s - k) (-mu)^k / k!
double polylog_exp(double s, double mu) {
  double acc = std::tgamma(1.0 - s) * std::pow(mu, s - 1.0);
  double term_scale = 1.0;
  for (int k = 0; k < 60; ++k) {
    if (k > 0) term_scale *= -mu / k;
    const double term = std::riemann_zeta(s - k) * term_scale;
    acc += term;
    if (k > 4 && std::abs(term) < 1e-18 * std::abs(acc)) break;
  }
  return acc;
}

}  // namespace

double power_tail_sum(double s, double lambda, long n_max) {
  if (lambda < 0.0) throw std::invalid_argument("power_tail_sum: lambda >= 0 required");
  if (lambda == 0.0) {
    if (s <= 1.0) throw std::invalid_argument("power_tail_sum: divergent series");
    return std::riemann_zeta(s) - partial_sum(s, 0.0, n_max);
  }
  if (lambda * (n_max + 1) > 745.0) return 0.0;
  if (lambda * n_max >= 1.0 || lambda >= 1.0) {
    double acc = 0.0;
    for (long n = n_max + 1;; ++n) {
      const double term = std::exp(-lambda * n) * std::pow(static_cast<double>(n), -s);
      acc += term;
      if (term <= 1e-17 * acc) break;
    }
    return acc;
  }
  return polylog_exp(s, lambda) - partial_sum(s, lambda, n_max);
}

}  // namespace stripwet
