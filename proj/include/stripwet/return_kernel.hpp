#pragma once

#include "stripwet/increments.hpp"
#include "stripwet/ladder.hpp"
#include "stripwet/matrix.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace stripwet {

/// Return kernel f_{x,y}(n) = P_x[S_1 > a, ..., S_{n-1} > a, S_n in dy] / dy
/// tabulated for n = 1..n_max, sources x and strip nodes y.
///
/// Sources are the strip nodes followed, when 0 is not itself a node, by an
/// extra origin row for walks started at S_0 = 0. Lattice kernels carry unit
/// node weights and point masses; continuous kernels carry Gauss-Legendre
/// weights and densities.
struct ReturnKernel {
  IncrementLaw law = IncrementLaw::gaussian(1.0);
  double a = 0.0;
  long n_max = 0;
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t origin = 0;
  std::size_t n_sources = 0;
  /// values[(src * nodes + dst) * n_max + (n - 1)]
  std::vector<double> values;
  /// f_{x,y}(n) ~ tail_theta(x, y) n^{-3/2} for n > n_max.
  Matrix tail_theta;
  /// Theta_a from ladder tails; empty until attach_ladder_theta.
  Matrix theta_defph;
  /// survival[src * (n_max + 1) + n] = P_x[S_1 > a, ..., S_n > a].
  std::vector<double> survival;
  /// P_x[S_1 > a, ..., S_n > a] ~ survival_tail[src] n^{-1/2} for n > n_max.
  std::vector<double> survival_tail;
  double truncation_height = 0.0;
  /// Largest mass pushed past the truncation height in one step.
  double lost_mass_per_step = 0.0;

  std::size_t n_nodes() const { return nodes.size(); }
  double f(std::size_t src, std::size_t dst, long n) const {
    return values[(src * nodes.size() + dst) * n_max + (n - 1)];
  }
  std::span<const double> series(std::size_t src, std::size_t dst) const {
    return {values.data() + (src * nodes.size() + dst) * n_max, static_cast<std::size_t>(n_max)};
  }
  /// P_x[S_1 > a, ..., S_n > a] for any n >= 0, tail extrapolated.
  double survival_at(std::size_t src, long n) const;
  /// Sum_n Sum_y f_{x,y}(n) w_y including the analytic tail.
  double total_return_mass(std::size_t src) const;
};

struct KernelOptions {
  int nodes = 16;
  /// 0 selects 8192 for the lattice and 512 otherwise.
  long n_max = 0;
  /// 0 selects a + 8 sigma sqrt(n_max).
  double truncation_height = 0.0;
  /// Excursion grid spacing; 0 selects sigma / 5.
  double grid_step = 0.0;
  unsigned threads = 1;
};

ReturnKernel build_pq(double p, long a, long n_max = 8192);
ReturnKernel build_continuous(const IncrementLaw& law, double a, const KernelOptions& opts = {});
/// Dispatches on the law kind; a must be a positive integer for the lattice.
ReturnKernel build_kernel(const IncrementLaw& law, double a, const KernelOptions& opts = {});

/// n^{3/2} f_{x,y}(n) tail constant of the lattice (a, a) entry.
double lattice_tail_constant(double p);

/// Fills theta_defph from ladder tails.
void attach_ladder_theta(ReturnKernel& kernel, const LadderTables& tables);

/// n^{3/2} f_{x,y}(n) / Theta_a(x,y) over sources x (rows) and nodes y.
/// Entries with Theta_a = 0, or with f_{x,y} identically 0 beyond n = 1, are NaN.
Matrix tail_ratio(const ReturnKernel& kernel, long n = 0);

/// Binary cache. Throws std::runtime_error on IO or format errors.
void save_kernel(const ReturnKernel& kernel, const std::string& path);
ReturnKernel load_kernel(const std::string& path);

/// File name that identifies a kernel build.
std::string kernel_cache_name(const IncrementLaw& law, double a, const KernelOptions& opts);
/// Builds, or loads from STRIPWET_CACHE_DIR when that is set and a matching
/// file exists (writing it otherwise).
ReturnKernel cached_kernel(const IncrementLaw& law, double a, const KernelOptions& opts = {});

}  // namespace stripwet
