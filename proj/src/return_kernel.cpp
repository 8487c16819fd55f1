#include "stripwet/return_kernel.hpp"

#include "stripwet/parallel.hpp"
#include "stripwet/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace stripwet {

double ReturnKernel::survival_at(std::size_t src, long n) const {
  if (n <= 0) return 1.0;
  if (n <= n_max) return survival[src * (n_max + 1) + n];
  return survival_tail[src] / std::sqrt(static_cast<double>(n));
}

double ReturnKernel::total_return_mass(std::size_t src) const {
  const double tail = power_tail_sum(1.5, 0.0, n_max);
  double mass = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    double s = tail_theta(src, j) * tail;
    for (double v : series(src, j)) s += v;
    mass += s * weights[j];
  }
  return mass;
}

double lattice_tail_constant(double p) { return std::sqrt(p) / (2.0 * std::sqrt(std::numbers::pi)); }

ReturnKernel build_pq(double p, long a, long n_max) {
  if (a < 1) throw std::invalid_argument("build_pq: a must be a positive integer");
  if (n_max < 2) throw std::invalid_argument("build_pq: n_max >= 2 required");
  ReturnKernel k;
  k.law = IncrementLaw::pq(p);
  k.a = static_cast<double>(a);
  k.n_max = n_max;
  for (long y = 0; y <= a; ++y) {
    k.nodes.push_back(static_cast<double>(y));
    k.weights.push_back(1.0);
  }
  const std::size_t m = k.nodes.size();
  k.origin = 0;
  k.n_sources = m;
  k.values.assign(m * m * n_max, 0.0);
  k.tail_theta = Matrix(m, m);
  k.survival.assign(m * (n_max + 1), 0.0);
  k.survival_tail.assign(m, 0.0);

  const double q = 1.0 - 2.0 * p;
  for (long x = 0; x <= a; ++x) {
    const auto src = static_cast<std::size_t>(x);
    double* vals = k.values.data() + src * m * n_max;
    for (long y = 0; y <= a; ++y) vals[y * n_max] = k.law.density(static_cast<double>(y - x));
    double* surv = k.survival.data() + src * (n_max + 1);
    surv[0] = 1.0;
  }

  // Only x = a reaches above the strip. phi[j] = P_a[S_1..S_n > a, S_n = a + 1 + j]
  // for j <= n_max - n.
  const auto src = static_cast<std::size_t>(a);
  double* vals = k.values.data() + src * m * n_max;
  double* surv = k.survival.data() + src * (n_max + 1);
  std::vector<double> phi(static_cast<std::size_t>(n_max) + 2, 0.0), next(phi.size(), 0.0);
  phi[0] = p;
  surv[1] = p;
  long top = 0;
  for (long n = 2; n <= n_max; ++n) {
    const double back = p * phi[0];
    vals[a * n_max + (n - 1)] = back;
    surv[n] = surv[n - 1] - back;
    const long new_top = std::min(top + 1, n_max - n);
    for (long j = 0; j <= new_top; ++j) {
      double v = q * phi[j] + p * phi[j + 1];
      if (j > 0) v += p * phi[j - 1];
      next[j] = v;
    }
    for (long j = new_top + 1; j <= top + 1; ++j) next[j] = 0.0;
    top = new_top;
    phi.swap(next);
  }
  k.survival_tail[src] = surv[n_max] * std::sqrt(static_cast<double>(n_max));
  k.tail_theta(static_cast<std::size_t>(a), static_cast<std::size_t>(a)) = lattice_tail_constant(p);
  return k;
}

ReturnKernel build_continuous(const IncrementLaw& law, double a, const KernelOptions& opts) {
  if (law.is_lattice()) throw std::invalid_argument("build_continuous: continuous law required");
  if (!(a > 0.0)) throw std::invalid_argument("build_continuous: a > 0 required");
  if (opts.nodes < 1) throw std::invalid_argument("build_continuous: nodes >= 1 required");
  const double sigma = law.sigma();
  ReturnKernel k;
  k.law = law;
  k.a = a;
  k.n_max = opts.n_max > 0 ? opts.n_max : 512;
  if (k.n_max < 2) throw std::invalid_argument("build_continuous: n_max >= 2 required");
  const long n_max = k.n_max;
  const double step = opts.grid_step > 0.0 ? opts.grid_step : sigma / 5.0;
  k.truncation_height =
      opts.truncation_height > 0.0 ? opts.truncation_height : a + 8.0 * sigma * std::sqrt(double(n_max));
  if (!(k.truncation_height > a)) throw std::invalid_argument("build_continuous: truncation height must exceed a");

  const QuadratureRule rule = gauss_legendre(opts.nodes, 0.0, a);
  k.nodes = rule.nodes;
  k.weights = rule.weights;
  const std::size_t m = k.nodes.size();
  k.origin = m;
  k.n_sources = m + 1;
  std::vector<double> sources = k.nodes;
  sources.push_back(0.0);

  // Excursion grid u_i = a + i * step on [a, T]; trapezoid weights with
  // Gregory end corrections.
  const auto cells = std::max<std::size_t>(6, static_cast<std::size_t>(std::ceil((k.truncation_height - a) / step)));
  const std::size_t n_grid = cells + 1;
  std::vector<double> u(n_grid), w(n_grid, step);
  for (std::size_t i = 0; i < n_grid; ++i) u[i] = a + step * static_cast<double>(i);
  constexpr double kGregory[3] = {3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0};
  for (std::size_t i = 0; i < 3; ++i) {
    w[i] = kGregory[i] * step;
    w[n_grid - 1 - i] = kGregory[i] * step;
  }
  const double top_u = u.back();

  const double radius = law.support_radius();
  const auto band = static_cast<long>(std::ceil(radius / step));
  std::vector<double> hk(2 * band + 1);
  for (long d = -band; d <= band; ++d) hk[d + band] = law.density(step * static_cast<double>(d));

  // proj[j][i] = h(y_j - u_i) for grid points within reach of node j.
  const auto reach = std::min(n_grid, static_cast<std::size_t>(std::ceil(radius / step)) + 2);
  std::vector<double> proj(m * reach);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < reach; ++i) proj[j * reach + i] = law.density(k.nodes[j] - u[i]);

  k.values.assign(k.n_sources * m * n_max, 0.0);
  k.survival.assign(k.n_sources * (n_max + 1), 0.0);
  k.survival_tail.assign(k.n_sources, 0.0);
  std::vector<double> lost(k.n_sources, 0.0);

  parallel_blocks(k.n_sources, opts.threads, [&](std::size_t src) {
    const double x = sources[src];
    double* vals = k.values.data() + src * m * n_max;
    for (std::size_t j = 0; j < m; ++j) vals[j * n_max] = law.density(k.nodes[j] - x);

    // g = w * phi_n on the grid; [0, hi] is the active range.
    std::vector<double> g(n_grid, 0.0), next(n_grid, 0.0);
    std::size_t hi = 0;
    for (std::size_t i = 0; i < n_grid; ++i) {
      g[i] = w[i] * law.density(u[i] - x);
      if (g[i] > 0.0) hi = i;
    }
    double* surv = k.survival.data() + src * (n_max + 1);
    surv[0] = 1.0;
    for (std::size_t i = 0; i <= hi; ++i) surv[1] += g[i];

    for (long n = 2; n <= n_max; ++n) {
      for (std::size_t j = 0; j < m; ++j) {
        double acc = 0.0;
        const double* pr = proj.data() + j * reach;
        const std::size_t lim = std::min(reach, hi + 1);
        for (std::size_t i = 0; i < lim; ++i) acc += g[i] * pr[i];
        vals[j * n_max + (n - 1)] = acc;
      }
      double escaped = 0.0;
      for (std::size_t i = 0; i <= hi; ++i)
        if (top_u - u[i] < radius) escaped += g[i] * law.upper_tail(top_u - u[i]);
      lost[src] = std::max(lost[src], escaped);

      const std::size_t out_hi = std::min(n_grid - 1, hi + static_cast<std::size_t>(band));
      std::fill(next.begin(), next.begin() + out_hi + 1, 0.0);
      for (long d = -band; d <= band; ++d) {
        const double c = hk[d + band];
        if (c == 0.0) continue;
        // next[i] += c * g[i - d] for i - d in [0, hi]
        const long i_lo = std::max(0L, d);
        const long i_hi = std::min(static_cast<long>(out_hi), static_cast<long>(hi) + d);
        for (long i = i_lo; i <= i_hi; ++i) next[i] += c * g[i - d];
      }
      double mass = 0.0;
      double peak = 0.0;
      for (std::size_t i = 0; i <= out_hi; ++i) {
        next[i] *= w[i];
        mass += next[i];
        peak = std::max(peak, next[i]);
      }
      std::size_t new_hi = out_hi;
      while (new_hi > 0 && next[new_hi] < 1e-30 * peak) --new_hi;
      for (std::size_t i = new_hi + 1; i <= out_hi; ++i) next[i] = 0.0;
      hi = new_hi;
      g.swap(next);
      surv[n] = mass;
    }
    k.survival_tail[src] = surv[n_max] * std::sqrt(static_cast<double>(n_max));
  });

  k.lost_mass_per_step = *std::max_element(lost.begin(), lost.end());
  if (k.lost_mass_per_step > 1e-6)
    std::cerr << "warning: return kernel lost " << k.lost_mass_per_step
              << " mass per step past the truncation height\n";

  k.tail_theta = Matrix(k.n_sources, m);
  const double scale = std::pow(static_cast<double>(n_max), 1.5);
  for (std::size_t s = 0; s < k.n_sources; ++s)
    for (std::size_t j = 0; j < m; ++j) k.tail_theta(s, j) = scale * k.f(s, j, n_max);
  return k;
}

ReturnKernel build_kernel(const IncrementLaw& law, double a, const KernelOptions& opts) {
  if (law.is_lattice()) {
    if (a != std::floor(a)) throw std::invalid_argument("lattice kernels need an integer a");
    return build_pq(law.p(), static_cast<long>(a), opts.n_max > 0 ? opts.n_max : 8192);
  }
  return build_continuous(law, a, opts);
}

void attach_ladder_theta(ReturnKernel& kernel, const LadderTables& tables) {
  const std::size_t m = kernel.n_nodes();
  kernel.theta_defph = Matrix(kernel.n_sources, m);
  for (std::size_t s = 0; s < kernel.n_sources; ++s) {
    const double x = s < m ? kernel.nodes[s] : 0.0;
    for (std::size_t j = 0; j < m; ++j)
      kernel.theta_defph(s, j) = theta_a(tables, kernel.law.sigma(), kernel.a, x, kernel.nodes[j]);
  }
}

Matrix tail_ratio(const ReturnKernel& kernel, long n) {
  if (kernel.theta_defph.rows() == 0) throw std::logic_error("tail_ratio: ladder theta not attached");
  if (n <= 0) n = kernel.n_max;
  if (n < 2 || n > kernel.n_max) throw std::out_of_range("tail_ratio: n outside the table");
  const std::size_t m = kernel.n_nodes();
  Matrix r(kernel.n_sources, m, std::numeric_limits<double>::quiet_NaN());
  const double scale = std::pow(static_cast<double>(n), 1.5);
  for (std::size_t s = 0; s < kernel.n_sources; ++s) {
    for (std::size_t j = 0; j < m; ++j) {
      const double theta = kernel.theta_defph(s, j);
      const auto series = kernel.series(s, j);
      const bool vanishes = std::all_of(series.begin() + 1, series.end(), [](double v) { return v == 0.0; });
      if (theta > 0.0 && !vanishes) r(s, j) = scale * kernel.f(s, j, n) / theta;
    }
  }
  return r;
}

}  // namespace stripwet
