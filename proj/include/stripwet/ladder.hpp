#pragma once

#include "stripwet/increments.hpp"

#include <cstdint>
#include <vector>

namespace stripwet {

/// Ladder renewal functions and strict ladder-height tails on a grid over
/// [0, x_max]. For the (p,q) walk the tables are exact and the *_at queries
/// use closed forms; otherwise values between grid points are interpolated.
struct LadderTables {
  std::vector<double> grid;
  std::vector<double> U, V;
  std::vector<double> asc_tail, desc_tail;
  std::vector<double> U_stderr, V_stderr, asc_stderr, desc_stderr;
  long sample_count = 0;
  long unresolved = 0;
  bool exact = false;

  double U_at(double x) const;
  double V_at(double x) const;
  /// P[H_1 >= u].
  double asc_tail_at(double u) const;
  /// P[H_1^- >= u].
  double desc_tail_at(double u) const;
};

struct LadderOptions {
  int grid_points = 201;
  /// Steps allowed per ladder epoch before a sample is dropped as unresolved.
  long step_cap = 1L << 18;
  unsigned threads = 1;
};

LadderTables estimate_ladder(const IncrementLaw& law, long n_samples, double x_max,
                             std::uint64_t seed, const LadderOptions& opts = {});

/// P[H_1^- >= a - y] P[H_1 >= a - x] / (sigma sqrt(2 pi)); 0 off [0,a]^2
/// unless strict, in which case that throws.
double theta_a(const LadderTables& tables, double sigma, double a, double x, double y,
               bool strict = false);

struct StayAboveRow {
  long n;
  double scaled_prob;  // sqrt(n) P_x[S_1 > a, ..., S_n > a]
  double stderr_scaled;
  double limit;        // P[H_1 >= a - x] / (sqrt(2 pi) sigma)
  double ratio;        // NaN when skipped
  bool skipped;        // event empty
};

/// Exact lattice DP for the (p,q) walk, Monte Carlo otherwise.
std::vector<StayAboveRow> stayabove_check(const IncrementLaw& law, const LadderTables& tables,
                                          double a, double x, const std::vector<long>& n_list,
                                          long n_samples, std::uint64_t seed,
                                          unsigned threads = 1);

struct FluctuResult {
  long n;
  double prob;  // P_x[S_1 >= 0, ..., S_n >= 0]
  double stderr_prob;
  double limit;  // V(x) / (sqrt(2 pi) sigma sqrt(n))
  double ratio;
};

/// Requires x <= n^{1/4}. n = 0 returns probability 1 with a NaN ratio.
FluctuResult fluctu_check(const IncrementLaw& law, const LadderTables& tables, double x, long n,
                          long n_samples, std::uint64_t seed, unsigned threads = 1);

/// P_x[S_k >= level (or > level when strict) for k = 1..n] for each n in
/// n_list, by exact DP on the integer lattice. x and level are integers.
std::vector<double> lattice_survival(double p, long x, long level, bool strict,
                                     const std::vector<long>& n_list);

}  // namespace stripwet
