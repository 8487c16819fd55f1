#include "stripwet/ladder.hpp"

#include "stripwet/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace stripwet {

namespace {

constexpr double kSqrt2Pi = 2.50662827463100050242;
constexpr std::size_t kBlocks = 64;

double interpolate(const std::vector<double>& grid, const std::vector<double>& values, double x) {
  if (x <= grid.front()) return values.front();
  if (x >= grid.back()) return values.back();
  const double step = grid[1] - grid[0];
  const auto i = std::min(static_cast<std::size_t>((x - grid.front()) / step), grid.size() - 2);
  const double t = (x - grid[i]) / step;
  return values[i] + t * (values[i + 1] - values[i]);
}

// Strict ladder heights of the walk (sign = +1) or of its reflection
// (sign = -1) until their running sum exceeds x_max. Returns false if an
// epoch runs past the step cap.
bool ladder_sequence(const IncrementLaw& law, Rng& rng, double sign, double x_max, long cap,
                     std::vector<double>& heights) {
  heights.clear();
  double total = 0.0;
  while (total <= x_max) {
    double s = 0.0;
    long steps = 0;
    do {
      s += sign * law.draw(rng);
      if (++steps > cap) return false;
    } while (s <= 0.0);
    heights.push_back(s);
    total += s;
  }
  return true;
}

struct Accum {
  std::vector<double> u_sum, u_sq, tail_sum;
  long resolved = 0;
  long unresolved = 0;

  explicit Accum(std::size_t g) : u_sum(g, 0.0), u_sq(g, 0.0), tail_sum(g, 0.0) {}

  void merge(const Accum& o) {
    for (std::size_t i = 0; i < u_sum.size(); ++i) {
      u_sum[i] += o.u_sum[i];
      u_sq[i] += o.u_sq[i];
      tail_sum[i] += o.tail_sum[i];
    }
    resolved += o.resolved;
    unresolved += o.unresolved;
  }
};

void finish(const Accum& acc, std::vector<double>& renewal, std::vector<double>& renewal_se,
            std::vector<double>& tail, std::vector<double>& tail_se) {
  const std::size_t g = acc.u_sum.size();
  renewal.assign(g, 1.0);
  renewal_se.assign(g, 0.0);
  tail.assign(g, 1.0);
  tail_se.assign(g, 0.0);
  const double n = static_cast<double>(acc.resolved);
  if (acc.resolved == 0) return;
  for (std::size_t i = 0; i < g; ++i) {
    const double m = acc.u_sum[i] / n;
    renewal[i] = m;
    if (acc.resolved > 1) {
      const double var = std::max(0.0, (acc.u_sq[i] - n * m * m) / (n - 1.0));
      renewal_se[i] = std::sqrt(var / n);
    }
    tail[i] = acc.tail_sum[i] / n;
    tail_se[i] = std::sqrt(tail[i] * (1.0 - tail[i]) / n);
  }
}

Accum simulate_side(const IncrementLaw& law, long n_samples, const std::vector<double>& grid,
                    double sign, std::uint64_t seed, std::uint64_t stream_base,
                    const LadderOptions& opts) {
  const std::size_t g = grid.size();
  std::vector<Accum> blocks(kBlocks, Accum(g));
  parallel_blocks(kBlocks, opts.threads, [&](std::size_t b) {
    Rng rng(seed, stream_base + b);
    const long lo = n_samples * static_cast<long>(b) / static_cast<long>(kBlocks);
    const long hi = n_samples * static_cast<long>(b + 1) / static_cast<long>(kBlocks);
    Accum& acc = blocks[b];
    std::vector<double> heights;
    for (long s = lo; s < hi; ++s) {
      if (!ladder_sequence(law, rng, sign, grid.back(), opts.step_cap, heights)) {
        ++acc.unresolved;
        continue;
      }
      ++acc.resolved;
      // count(x) = #{k >= 0 : H_1 + ... + H_k <= x}
      double partial = 0.0;
      std::size_t k = 0;
      long count = 1;
      for (std::size_t i = 0; i < g; ++i) {
        while (k < heights.size() && partial + heights[k] <= grid[i]) {
          partial += heights[k++];
          ++count;
        }
        acc.u_sum[i] += count;
        acc.u_sq[i] += static_cast<double>(count) * count;
        if (heights.front() >= grid[i]) acc.tail_sum[i] += 1.0;
      }
    }
  });
  Accum total(g);
  for (const auto& b : blocks) total.merge(b);
  return total;
}

}  // namespace

double LadderTables::U_at(double x) const {
  if (x < 0.0) return 0.0;
  if (exact) return 1.0 + std::floor(x);
  return interpolate(grid, U, x);
}

double LadderTables::V_at(double x) const {
  if (x < 0.0) return 0.0;
  if (exact) return 1.0 + std::floor(x);
  return interpolate(grid, V, x);
}

double LadderTables::asc_tail_at(double u) const {
  if (u <= 0.0) return 1.0;
  if (exact) return u <= 1.0 ? 1.0 : 0.0;
  return interpolate(grid, asc_tail, u);
}

double LadderTables::desc_tail_at(double u) const {
  if (u <= 0.0) return 1.0;
  if (exact) return u <= 1.0 ? 1.0 : 0.0;
  return interpolate(grid, desc_tail, u);
}

LadderTables estimate_ladder(const IncrementLaw& law, long n_samples, double x_max,
                             std::uint64_t seed, const LadderOptions& opts) {
  if (n_samples < 1) throw std::invalid_argument("estimate_ladder: n_samples >= 1 required");
  if (!(x_max > 0.0)) throw std::invalid_argument("estimate_ladder: x_max > 0 required");
  if (opts.grid_points < 2) throw std::invalid_argument("estimate_ladder: grid_points >= 2");

  LadderTables t;
  const auto g = static_cast<std::size_t>(opts.grid_points);
  t.grid.resize(g);
  for (std::size_t i = 0; i < g; ++i) t.grid[i] = x_max * static_cast<double>(i) / (g - 1);

  if (law.is_lattice()) {
    // Ladder steps of a +-1/0 walk are exactly 1, so H_k = k.
    t.exact = true;
    for (double x : t.grid) {
      t.U.push_back(t.U_at(x));
      t.asc_tail.push_back(t.asc_tail_at(x));
    }
    t.V = t.U;
    t.desc_tail = t.asc_tail;
    t.U_stderr.assign(g, 0.0);
    t.V_stderr.assign(g, 0.0);
    t.asc_stderr.assign(g, 0.0);
    t.desc_stderr.assign(g, 0.0);
    return t;
  }

  const Accum asc = simulate_side(law, n_samples, t.grid, +1.0, seed, 0, opts);
  const Accum desc = simulate_side(law, n_samples, t.grid, -1.0, seed, kBlocks, opts);
  finish(asc, t.U, t.U_stderr, t.asc_tail, t.asc_stderr);
  finish(desc, t.V, t.V_stderr, t.desc_tail, t.desc_stderr);
  t.sample_count = std::min(asc.resolved, desc.resolved);
  t.unresolved = asc.unresolved + desc.unresolved;
  return t;
}

double theta_a(const LadderTables& tables, double sigma, double a, double x, double y,
               bool strict) {
  const bool inside = x >= 0.0 && x <= a && y >= 0.0 && y <= a;
  if (!inside) {
    if (strict) throw std::out_of_range("theta_a: x and y must lie in [0, a]");
    return 0.0;
  }
  return tables.desc_tail_at(a - y) * tables.asc_tail_at(a - x) / (sigma * kSqrt2Pi);
}

std::vector<double> lattice_survival(double p, long x, long level, bool strict,
                                     const std::vector<long>& n_list) {
  const double q = 1.0 - 2.0 * p;
  const long floor_h = strict ? level + 1 : level;
  long n_max = 0;
  for (long n : n_list) n_max = std::max(n_max, n);

  std::vector<double> out(n_list.size(), 0.0);
  for (std::size_t i = 0; i < n_list.size(); ++i)
    if (n_list[i] == 0) out[i] = 1.0;
  if (n_max == 0) return out;

  // cur[k] = P[S_n = floor_h + k, survived]
  const long width = std::max(0L, x - floor_h) + n_max + 2;
  std::vector<double> cur(width, 0.0), next(width, 0.0);
  for (long d = -1; d <= 1; ++d) {
    const long h = x + d;
    if (h >= floor_h) cur[h - floor_h] += d == 0 ? q : p;
  }
  long top = std::max(0L, x + 1 - floor_h);
  auto record = [&](long n) {
    double s = 0.0;
    for (long k = 0; k <= top; ++k) s += cur[k];
    for (std::size_t i = 0; i < n_list.size(); ++i)
      if (n_list[i] == n) out[i] = s;
  };
  record(1);
  for (long n = 2; n <= n_max; ++n) {
    std::fill(next.begin(), next.begin() + std::min(width, top + 2), 0.0);
    for (long k = 0; k <= top; ++k) {
      const double m = cur[k];
      if (m == 0.0) continue;
      if (k > 0) next[k - 1] += p * m;
      next[k] += q * m;
      next[k + 1] += p * m;
    }
    ++top;
    cur.swap(next);
    record(n);
  }
  return out;
}

std::vector<StayAboveRow> stayabove_check(const IncrementLaw& law, const LadderTables& tables,
                                          double a, double x, const std::vector<long>& n_list,
                                          long n_samples, std::uint64_t seed, unsigned threads) {
  if (x < 0.0 || x > a) throw std::out_of_range("stayabove_check: x must lie in [0, a]");
  const double limit = tables.asc_tail_at(a - x) / (kSqrt2Pi * law.sigma());
  const bool empty = law.upper_tail(a - x) == 0.0;

  std::vector<double> prob(n_list.size(), 0.0);
  std::vector<double> se(n_list.size(), 0.0);
  if (empty) {
    // nothing to estimate
  } else if (law.is_lattice()) {
    prob = lattice_survival(law.p(), std::lround(x), std::lround(a), true, n_list);
  } else {
    if (n_samples < 1) throw std::invalid_argument("stayabove_check: n_samples >= 1 required");
    long n_max = 0;
    for (long n : n_list) n_max = std::max(n_max, n);
    std::vector<std::vector<long>> alive(kBlocks, std::vector<long>(n_list.size(), 0));
    parallel_blocks(kBlocks, threads, [&](std::size_t b) {
      Rng rng(seed, b);
      const long lo = n_samples * static_cast<long>(b) / static_cast<long>(kBlocks);
      const long hi = n_samples * static_cast<long>(b + 1) / static_cast<long>(kBlocks);
      for (long s = lo; s < hi; ++s) {
        double pos = x;
        long survived = 0;
        while (survived < n_max) {
          pos += law.draw(rng);
          if (pos <= a) break;
          ++survived;
        }
        for (std::size_t i = 0; i < n_list.size(); ++i)
          if (survived >= n_list[i]) ++alive[b][i];
      }
    });
    for (std::size_t i = 0; i < n_list.size(); ++i) {
      long total = 0;
      for (const auto& blk : alive) total += blk[i];
      prob[i] = static_cast<double>(total) / n_samples;
      se[i] = std::sqrt(prob[i] * (1.0 - prob[i]) / n_samples);
    }
  }

  std::vector<StayAboveRow> rows;
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    const double rn = std::sqrt(static_cast<double>(n_list[i]));
    StayAboveRow r{n_list[i], rn * prob[i], rn * se[i], limit,
                   std::numeric_limits<double>::quiet_NaN(), empty};
    if (!empty && limit > 0.0) r.ratio = r.scaled_prob / limit;
    rows.push_back(r);
  }
  return rows;
}

FluctuResult fluctu_check(const IncrementLaw& law, const LadderTables& tables, double x, long n,
                          long n_samples, std::uint64_t seed, unsigned threads) {
  if (x < 0.0) throw std::out_of_range("fluctu_check: x >= 0 required");
  if (n < 0) throw std::invalid_argument("fluctu_check: n >= 0 required");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (n == 0) return {0, 1.0, 0.0, nan, nan};
  if (x > std::pow(static_cast<double>(n), 0.25))
    throw std::out_of_range("fluctu_check: x must not exceed n^{1/4}");

  FluctuResult r{n, 0.0, 0.0, 0.0, nan};
  r.limit = tables.V_at(x) / (kSqrt2Pi * law.sigma() * std::sqrt(static_cast<double>(n)));
  if (law.is_lattice()) {
    r.prob = lattice_survival(law.p(), std::lround(x), 0, false, {n}).front();
  } else {
    if (n_samples < 1) throw std::invalid_argument("fluctu_check: n_samples >= 1 required");
    std::vector<long> alive(kBlocks, 0);
    parallel_blocks(kBlocks, threads, [&](std::size_t b) {
      Rng rng(seed, b);
      const long lo = n_samples * static_cast<long>(b) / static_cast<long>(kBlocks);
      const long hi = n_samples * static_cast<long>(b + 1) / static_cast<long>(kBlocks);
      for (long s = lo; s < hi; ++s) {
        double pos = x;
        long k = 0;
        for (; k < n; ++k) {
          pos += law.draw(rng);
          if (pos < 0.0) break;
        }
        if (k == n) ++alive[b];
      }
    });
    long total = 0;
    for (long c : alive) total += c;
    r.prob = static_cast<double>(total) / n_samples;
    r.stderr_prob = std::sqrt(r.prob * (1.0 - r.prob) / n_samples);
  }
  r.ratio = r.prob / r.limit;
  return r;
}

}  // namespace stripwet
