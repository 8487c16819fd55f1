#include "stripwet/spectral.hpp"

#include "stripwet/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stripwet {

namespace {

std::vector<double> exp_weights(double lambda, long n_max) {
  std::vector<double> e(n_max);
  for (long n = 1; n <= n_max; ++n) e[n - 1] = std::exp(-lambda * n);
  return e;
}

double weighted_series(std::span<const double> f, const std::vector<double>& e) {
  double acc = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n) acc += f[n] * e[n];
  return acc;
}

struct PowerResult {
  double delta;
  std::vector<double> vec;
  double residual;
  int iterations;
};

PowerResult power_iteration(const Matrix& b, double tol, int max_iter) {
  const std::size_t n = b.rows();
  std::vector<double> v(n, 1.0), y(n);
  double norm_inf = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double x : b.row(i)) s += std::abs(x);
    norm_inf = std::max(norm_inf, s);
  }
  if (norm_inf == 0.0) return {0.0, v, 0.0, 0};
  const double shift = 0.1 * norm_inf;
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iter; ++it) {
    b.multiply(v, y);
    double vv = 0.0;
    double vy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      vv += v[i] * v[i];
      vy += v[i] * y[i];
    }
    const double delta = vy / vv;
    residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) residual = std::max(residual, std::abs(y[i] - delta * v[i]));
    if (residual <= tol * delta || delta == 0.0) return {delta, v, residual / std::max(delta, 1e-300), it};
    double top = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] += shift * v[i];
      top = std::max(top, y[i]);
    }
    for (std::size_t i = 0; i < n; ++i) v[i] = y[i] / top;
  }
  throw SpectralError("spectral_radius: no convergence within the iteration cap", residual);
}

}  // namespace

OperatorB assemble_B(const ReturnKernel& kernel, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("assemble_B: lambda >= 0 required");
  const std::size_t m = kernel.n_nodes();
  const auto e = exp_weights(lambda, kernel.n_max);
  const double tail = power_tail_sum(1.5, lambda, kernel.n_max);
  auto entry = [&](std::size_t src, std::size_t j) {
    return (weighted_series(kernel.series(src, j), e) + kernel.tail_theta(src, j) * tail) * kernel.weights[j];
  };
  OperatorB op;
  op.lambda = lambda;
  op.matrix = Matrix(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) op.matrix(i, j) = entry(i, j);
  op.origin_row.resize(m);
  for (std::size_t j = 0; j < m; ++j) op.origin_row[j] = entry(kernel.origin, j);
  return op;
}

SpectralSolution spectral_radius(const Matrix& m, double tol, int max_iter) {
  if (m.rows() != m.cols() || m.rows() == 0) throw std::invalid_argument("spectral_radius: square matrix required");
  for (double x : m.data())
    if (!(x >= 0.0)) throw std::invalid_argument("spectral_radius: matrix must be nonnegative");
  const PowerResult right = power_iteration(m, tol, max_iter);
  const PowerResult left = power_iteration(m.transposed(), tol, max_iter);
  SpectralSolution s;
  s.delta = right.delta;
  s.v = right.vec;
  s.w = left.vec;
  s.residual = std::max(right.residual, left.residual);
  s.iterations = right.iterations + left.iterations;
  return s;
}

double spectral_radius_at(const ReturnKernel& kernel, double lambda) {
  const OperatorB op = assemble_B(kernel, lambda);
  return power_iteration(op.matrix, 1e-13, 200000).delta;
}

double critical_beta(const ReturnKernel& kernel) {
  const double d = spectral_radius_at(kernel, 0.0);
  if (!(d > 0.0)) throw std::runtime_error("critical_beta: B^0 has zero spectral radius");
  return -std::log(d);
}

FreeEnergy free_energy(const ReturnKernel& kernel, double beta, double tol) {
  FreeEnergy out;
  out.beta_c = critical_beta(kernel);
  if (beta <= out.beta_c) return out;
  const double target = std::exp(-beta);
  double lo = 0.0;
  double hi = 1e-14;
  while (spectral_radius_at(kernel, hi) > target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e4) throw std::runtime_error("free_energy: bracket expansion failed");
  }
  int steps = 0;
  while (hi - lo > tol * std::min(1.0, hi) && steps < 300) {
    const double mid = 0.5 * (lo + hi);
    if (spectral_radius_at(kernel, mid) > target)
      lo = mid;
    else
      hi = mid;
    ++steps;
  }
  out.F = 0.5 * (lo + hi);
  out.delta_residual = std::abs(spectral_radius_at(kernel, out.F) - target);
  out.bisection_steps = steps;
  return out;
}

double TiltedKernel::K(std::size_t i, std::size_t j, long n) const {
  if (n <= 0) return 0.0;
  if (n <= n_max) return values[(i * m + j) * n_max + (n - 1)];
  const double dn = static_cast<double>(n);
  return tail(i, j) * std::exp(-F * dn) / (dn * std::sqrt(dn));
}

double TiltedKernel::K_init(std::size_t j, long n) const {
  if (n <= 0) return 0.0;
  if (n <= n_max) return init_values[j * n_max + (n - 1)];
  const double dn = static_cast<double>(n);
  return init_tail[j] * std::exp(-F * dn) / (dn * std::sqrt(dn));
}

double TiltedKernel::invariance_residual() const {
  std::vector<double> out(m, 0.0);
  const double tail_sum = power_tail_sum(1.5, F, n_max);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = tail(i, j) * tail_sum;
      for (long n = 1; n <= n_max; ++n) s += values[(i * m + j) * n_max + (n - 1)];
      out[j] += mu[i] * s / row_mass[i];
    }
  }
  double r = 0.0;
  for (std::size_t j = 0; j < m; ++j) r += std::abs(out[j] - mu[j]);
  return r;
}

TiltedKernel build_tilted(const ReturnKernel& kernel, double beta) {
  if (!std::isfinite(beta)) throw std::invalid_argument("build_tilted: finite beta required");
  const FreeEnergy fe = free_energy(kernel, beta);
  const OperatorB op = assemble_B(kernel, fe.F);
  const SpectralSolution sol = spectral_radius(op.matrix);
  if (std::any_of(sol.v.begin(), sol.v.end(), [](double x) { return !(x > 0.0); }))
    throw std::runtime_error("build_tilted: Perron vector is not positive");

  TiltedKernel t;
  t.beta = beta;
  t.F = fe.F;
  t.beta_c = fe.beta_c;
  t.delta = sol.delta;
  t.n_max = kernel.n_max;
  t.m = kernel.n_nodes();
  t.v = sol.v;
  t.left = sol.w;
  const std::size_t m = t.m;
  const long n_max = kernel.n_max;

  if (kernel.origin < m) {
    t.v_origin = t.v[kernel.origin];
  } else {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += op.origin_row[j] * t.v[j];
    t.v_origin = s / sol.delta;
  }

  const double eb = std::exp(beta);
  const auto e = exp_weights(fe.F, n_max);
  const double tail_sum = power_tail_sum(1.5, fe.F, n_max);
  const double tail_mean = fe.F > 0.0 ? power_tail_sum(0.5, fe.F, n_max) : std::numeric_limits<double>::infinity();

  t.values.assign(m * m * n_max, 0.0);
  t.tail = Matrix(m, m);
  t.row_mass.assign(m, 0.0);
  std::vector<double> row_mean(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double c = eb * kernel.weights[j] * t.v[j] / t.v[i];
      const auto f = kernel.series(i, j);
      double* out = t.values.data() + (i * m + j) * n_max;
      double mass = 0.0;
      double first_moment = 0.0;
      for (long n = 1; n <= n_max; ++n) {
        out[n - 1] = c * f[n - 1] * e[n - 1];
        mass += out[n - 1];
        first_moment += n * out[n - 1];
      }
      t.tail(i, j) = c * kernel.tail_theta(i, j);
      mass += t.tail(i, j) * tail_sum;
      if (t.tail(i, j) > 0.0) first_moment += t.tail(i, j) * tail_mean;
      t.row_mass[i] += mass;
      row_mean[i] += first_moment;
    }
  }

  t.init_values.assign(m * n_max, 0.0);
  t.init_tail.assign(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const double c = eb * kernel.weights[j] * t.v[j] / t.v_origin;
    const auto f = kernel.series(kernel.origin, j);
    for (long n = 1; n <= n_max; ++n) {
      t.init_values[j * n_max + (n - 1)] = c * f[n - 1] * e[n - 1];
      t.init_row_mass += t.init_values[j * n_max + (n - 1)];
    }
    t.init_tail[j] = c * kernel.tail_theta(kernel.origin, j);
    t.init_row_mass += t.init_tail[j] * tail_sum;
  }

  t.mu.resize(m);
  double z = 0.0;
  for (std::size_t j = 0; j < m; ++j) z += t.mu[j] = t.left[j] * t.v[j];
  for (auto& x : t.mu) x /= z;

  t.localized = beta > fe.beta_c;
  if (t.localized) {
    t.C_beta = 0.0;
    for (std::size_t i = 0; i < m; ++i) t.C_beta += t.mu[i] * row_mean[i];
  } else {
    t.C_beta = std::numeric_limits<double>::infinity();
  }
  return t;
}

}  // namespace stripwet
