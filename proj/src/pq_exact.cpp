#include "stripwet/pq_exact.hpp"

#include "stripwet/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stripwet {

namespace {

void check_p(double p) {
  if (!(p > 0.0 && p < 0.5)) throw std::invalid_argument("p must lie in (0, 1/2)");
}

std::complex<double> cubic_at(std::complex<double> x, double c2, double c1, double c0) {
  return ((x + c2) * x + c1) * x + c0;
}

}  // namespace

PQConstants pq_constants(double p) {
  check_p(p);
  PQConstants c;
  c.p = p;
  c.q = 1.0 - 2.0 * p;
  const double s5 = std::sqrt(5.0);
  c.r = 2.0 * std::sqrt(7.0) * std::cos(std::numbers::pi / 3.0 - std::atan(3.0 * std::sqrt(3.0)) / 3.0);
  c.beta_c_0 = -std::log(1.0 - p);
  c.beta_c_1 = -std::log(1.0 - (3.0 - s5) * p / 2.0);
  c.beta_c_2 = -std::log(1.0 - (5.0 - c.r) * p / 3.0);
  c.c_K = std::sqrt(p / (8.0 * std::numbers::pi));
  c.sumK = (1.0 + c.q) / 2.0;
  c.C_1 = 5.0 / ((s5 - 1.0) * (s5 - 1.0) * std::numbers::pi * c.c_K * c.c_K);
  c.Delta_q = 5.0 * (c.q - 1.0) * (c.q - 1.0) / 4.0;
  const double q = c.q;
  const double d = (1.0 + q) / 2.0;
  c.cubic = {1.0, -(2.0 * q + d), q * q + 2.0 * q * d - 2.0 * p * p, -(q * q * d - q * p * p - p * p * d)};
  return c;
}

std::array<std::complex<double>, 3> cardan_roots(double c2, double c1, double c0) {
  using cd = std::complex<double>;
  // X = t - c2/3 gives t^3 + P t + Q.
  const double P = c1 - c2 * c2 / 3.0;
  const double Q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
  const cd disc = std::sqrt(cd(Q * Q / 4.0 + P * P * P / 27.0));
  cd base = -Q / 2.0 + disc;
  if (std::abs(-Q / 2.0 - disc) > std::abs(base)) base = -Q / 2.0 - disc;
  const cd u = std::pow(base, 1.0 / 3.0);
  const cd omega(-0.5, std::sqrt(3.0) / 2.0);
  std::array<cd, 3> roots;
  cd uk = u;
  for (auto& root : roots) {
    const cd vk = std::abs(uk) > 0.0 ? -P / (3.0 * uk) : cd(0.0);
    root = uk + vk - c2 / 3.0;
    uk *= omega;
  }
  for (auto& x : roots) {
    for (int it = 0; it < 3; ++it) {
      const cd deriv = (3.0 * x + 2.0 * c2) * x + c1;
      if (std::abs(deriv) == 0.0) break;
      const cd step = cubic_at(x, c2, c1, c0) / deriv;
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
      x -= step;
    }
  }
  return roots;
}

Matrix pq_matrix(double p, int a) {
  check_p(p);
  if (a < 1) throw std::invalid_argument("pq_matrix: a >= 1 required");
  const double q = 1.0 - 2.0 * p;
  const auto n = static_cast<std::size_t>(a) + 1;
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) = q;
    if (i + 1 < n) m(i, i + 1) = m(i + 1, i) = p;
  }
  m(n - 1, n - 1) = (1.0 + q) / 2.0;
  return m;
}

double spectral_radius_Ma(double p, int a) { return spectral_radius(pq_matrix(p, a)).delta; }

PartitionDP transfer_matrix_series(double p, int a, double beta, const std::vector<long>& N_list,
                                   Boundary boundary, int start) {
  check_p(p);
  if (a < 0) throw std::invalid_argument("transfer_matrix: a >= 0 required");
  if (start < 0 || start > a) throw std::invalid_argument("transfer_matrix: start must lie in [0, a]");
  long n_top = 0;
  for (long n : N_list) {
    if (n < 0 || n > 100000) throw std::invalid_argument("transfer_matrix: N must lie in [0, 1e5]");
    n_top = std::max(n_top, n);
  }
  const double q = 1.0 - 2.0 * p;
  PartitionDP out;
  out.N = N_list;
  out.log_z.assign(N_list.size(), 0.0);
  out.height_cap = static_cast<int>(std::min<long>(a + static_cast<long>(std::ceil(12.0 * std::sqrt(double(n_top)))) + 10,
                                                   start + n_top));
  const auto H = static_cast<std::size_t>(out.height_cap);
  const double eb = std::exp(beta);

  std::vector<double> z(H + 2, 0.0), next(H + 2, 0.0);
  z[start] = 1.0;
  double log_scale = 0.0;
  auto record = [&](long n) {
    double s = 0.0;
    const std::size_t hi = boundary == Boundary::Constrained ? std::min<std::size_t>(a, H) : H;
    for (std::size_t h = 0; h <= hi; ++h) s += z[h];
    for (std::size_t i = 0; i < N_list.size(); ++i)
      if (N_list[i] == n) out.log_z[i] = std::log(s) + log_scale;
  };
  record(0);
  for (long n = 1; n <= n_top; ++n) {
    double total = 0.0;
    for (std::size_t h = 0; h <= H; ++h) {
      double v = q * z[h] + p * z[h + 1];
      if (h > 0) v += p * z[h - 1];
      if (h <= static_cast<std::size_t>(a)) v *= eb;
      next[h] = v;
      total += v;
    }
    out.truncated += p * z[H] / std::max(total, 1e-300);
    if (!(total > 0.0)) throw std::runtime_error("transfer_matrix: weight vanished");
    for (std::size_t h = 0; h <= H; ++h) next[h] /= total;
    log_scale += std::log(total);
    z.swap(next);
    record(n);
  }
  return out;
}

double transfer_matrix_log_z(double p, int a, double beta, long N, Boundary boundary, int start) {
  return transfer_matrix_series(p, a, beta, {N}, boundary, start).log_z.front();
}

}  // namespace stripwet
