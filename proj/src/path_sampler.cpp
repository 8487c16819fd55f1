#include "stripwet/path_sampler.hpp"

#include "stripwet/parallel.hpp"
#include "stripwet/renewal.hpp"
#include "stripwet/spectral.hpp"
#include "stripwet/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace stripwet {

namespace {

constexpr std::size_t kBlocks = 64;

class SummaryBuilder {
 public:
  SummaryBuilder(long N, double a, const std::vector<long>& marginal_times)
      : N_(N), a_(a), times_(marginal_times) {
    s_.R_A = N;
    s_.marginals.assign(times_.size(), 0.0);
  }

  void visit(long i, double h) {
    if (h >= 0.0 && h <= a_) {
      s_.last_contact = i;
      ++s_.contacts;
      if (2 * i <= N_) s_.L_A = i;
      if (2 * i >= N_ && !right_found_) {
        s_.R_A = i;
        right_found_ = true;
      }
    }
    s_.sup = std::max(s_.sup, h);
    for (std::size_t k = 0; k < times_.size(); ++k)
      if (times_[k] == i) s_.marginals[k] = h;
    if (i == N_) s_.end_height = h;
  }

  PathSummary finish() { return s_; }

 private:
  long N_;
  double a_;
  const std::vector<long>& times_;
  PathSummary s_;
  bool right_found_ = false;
};

PathSummary summarize(const std::vector<double>& heights, double a, const std::vector<long>& times) {
  const long N = static_cast<long>(heights.size());
  SummaryBuilder b(N, a, times);
  for (long i = 1; i <= N; ++i) b.visit(i, heights[i - 1]);
  return b.finish();
}

PathSample full_path(std::vector<double> heights, double a, Boundary boundary) {
  PathSample ps;
  const long N = static_cast<long>(heights.size());
  ps.contact_set.push_back(0);
  for (long i = 1; i <= N; ++i)
    if (heights[i - 1] >= 0.0 && heights[i - 1] <= a) ps.contact_set.push_back(i);
  ps.L_A = 0;
  ps.R_A = N;
  for (long i : ps.contact_set) {
    if (2 * i <= N) ps.L_A = i;
  }
  for (long i : ps.contact_set) {
    if (2 * i >= N) {
      ps.R_A = i;
      break;
    }
  }
  ps.heights = std::move(heights);
  ps.boundary = boundary;
  return ps;
}

std::size_t pick(const std::vector<double>& cumulative, Rng& rng) {
  const double u = rng.uniform() * cumulative.back();
  return static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
}

}  // namespace

LatticeSampler::LatticeSampler(double p, long a, double beta, long N, Boundary boundary)
    : p_(p), q_(1.0 - 2.0 * p), a_(a), beta_(beta), N_(N), boundary_(boundary) {
  if (!(p > 0.0 && p <= 0.5)) throw std::invalid_argument("LatticeSampler: p must lie in (0, 1/2]");
  if (a < 0) throw std::invalid_argument("LatticeSampler: a >= 0 required");
  if (N < 1 || N > (1L << 15)) throw std::invalid_argument("LatticeSampler: N must lie in [1, 2^15]");
  if (!std::isfinite(beta)) throw std::invalid_argument("LatticeSampler: finite beta required");
  cap_ = std::min(N, a + static_cast<long>(std::ceil(12.0 * std::sqrt(static_cast<double>(N)))) + 10);
  const auto H = static_cast<std::size_t>(cap_) + 1;
  w_.assign(static_cast<std::size_t>(N + 1) * H, 0.0);
  const double eb = std::exp(beta);
  double* last = w_.data() + static_cast<std::size_t>(N) * H;
  for (std::size_t h = 0; h < H; ++h)
    last[h] = (boundary == Boundary::Free || static_cast<long>(h) <= a) ? 1.0 : 0.0;
  double log_scale = 0.0;
  for (long n = N - 1; n >= 0; --n) {
    const double* nxt = w_.data() + static_cast<std::size_t>(n + 1) * H;
    double* cur = w_.data() + static_cast<std::size_t>(n) * H;
    double top = 0.0;
    for (std::size_t h = 0; h < H; ++h) {
      auto term = [&](std::size_t g, double prob) {
        return prob * (static_cast<long>(g) <= a ? eb : 1.0) * nxt[g];
      };
      double v = term(h, q_);
      if (h > 0) v += term(h - 1, p_);
      if (h + 1 < H) v += term(h + 1, p_);
      cur[h] = v;
      top = std::max(top, v);
    }
    if (!(top > 0.0)) throw std::runtime_error("LatticeSampler: zero total weight");
    for (std::size_t h = 0; h < H; ++h) cur[h] /= top;
    log_scale += std::log(top);
  }
  if (!(w_[0] > 0.0)) throw std::runtime_error("LatticeSampler: zero total weight");
  log_z_ = std::log(w_[0]) + log_scale;
}

SampleSet LatticeSampler::sample(long n_paths, std::uint64_t seed, const SampleOptions& opts) const {
  if (n_paths < 1) throw std::invalid_argument("sample: n_paths >= 1 required");
  SampleSet set;
  set.N = N_;
  set.a = static_cast<double>(a_);
  set.beta = beta_;
  set.sigma = std::sqrt(2.0 * p_);
  set.boundary = boundary_;
  set.summaries.resize(n_paths);
  if (opts.keep_paths) set.paths.resize(n_paths);
  const auto H = static_cast<std::size_t>(cap_) + 1;
  const double eb = std::exp(beta_);

  // Each block advances all of its paths one column at a time.
  parallel_blocks(kBlocks, opts.threads, [&](std::size_t b) {
    Rng rng(seed, b);
    const long lo = n_paths * static_cast<long>(b) / static_cast<long>(kBlocks);
    const long hi = n_paths * static_cast<long>(b + 1) / static_cast<long>(kBlocks);
    const auto count = static_cast<std::size_t>(hi - lo);
    if (count == 0) return;
    std::vector<SummaryBuilder> builders;
    builders.reserve(count);
    for (std::size_t i = 0; i < count; ++i) builders.emplace_back(N_, static_cast<double>(a_), opts.marginal_times);
    std::vector<std::size_t> h(count, 0);
    std::vector<std::vector<double>> heights(opts.keep_paths ? count : 0, std::vector<double>(N_, 0.0));
    for (long n = 0; n < N_; ++n) {
      const double* nxt = w_.data() + static_cast<std::size_t>(n + 1) * H;
      for (std::size_t i = 0; i < count; ++i) {
        std::size_t x = h[i];
        auto weight = [&](std::size_t g, double prob) {
          return prob * (static_cast<long>(g) <= a_ ? eb : 1.0) * nxt[g];
        };
        const double wd = x > 0 ? weight(x - 1, p_) : 0.0;
        const double ws = weight(x, q_);
        const double wu = x + 1 < H ? weight(x + 1, p_) : 0.0;
        const double u = rng.uniform() * (wd + ws + wu);
        if (u < wd)
          --x;
        else if (u >= wd + ws)
          ++x;
        h[i] = x;
        builders[i].visit(n + 1, static_cast<double>(x));
        if (opts.keep_paths) heights[i][n] = static_cast<double>(x);
      }
    }
    for (std::size_t i = 0; i < count; ++i) {
      set.summaries[lo + i] = builders[i].finish();
      if (opts.keep_paths) set.paths[lo + i] = full_path(heights[i], static_cast<double>(a_), boundary_);
    }
  });
  return set;
}

SampleSet sample_pq(double p, long a, double beta, long N, Boundary boundary, long n_paths,
                    std::uint64_t seed, const SampleOptions& opts) {
  if (!(p > 0.0 && p < 0.5)) throw std::invalid_argument("sample_pq: p must lie in (0, 1/2)");
  return LatticeSampler(p, a, beta, N, boundary).sample(n_paths, seed, opts);
}

SampleSet sample_continuous(const IncrementLaw& law, double a, double beta, long N, Boundary boundary,
                            long n_paths, std::uint64_t seed, const ContinuousSampleOptions& opts) {
  if (law.is_lattice()) throw std::invalid_argument("sample_continuous: continuous law required");
  if (N < 1) throw std::invalid_argument("sample_continuous: N >= 1 required");
  if (n_paths < 1) throw std::invalid_argument("sample_continuous: n_paths >= 1 required");
  const ReturnKernel kernel = cached_kernel(law, a, opts.kernel);
  const TiltedKernel tk = build_tilted(kernel, beta);
  const RenewalKernel rk = RenewalKernel::from_tilted(tk);
  const GreenSeries g = green_function(rk, N, {true, 0});
  const std::size_t m = tk.m;
  const double F = tk.F;

  // Terminal choice over (t, j); index t * m + j, and index 0 for "no contact" (free only).
  std::vector<double> terminal(static_cast<std::size_t>(N + 1) * m, 0.0);
  if (boundary == Boundary::Constrained) {
    for (std::size_t j = 0; j < m; ++j) terminal[N * m + j] = g.Z[N][j] * tk.v_origin / tk.v[j];
  } else {
    terminal[0] = kernel.survival_at(kernel.origin, N) * std::exp(-F * N);
    for (long t = 1; t <= N; ++t)
      for (std::size_t j = 0; j < m; ++j)
        terminal[t * m + j] = g.Z[t][j] * tk.v_origin / tk.v[j] * kernel.survival_at(j, N - t) *
                              std::exp(-F * static_cast<double>(N - t));
  }
  std::vector<double> terminal_cum(terminal.size());
  std::partial_sum(terminal.begin(), terminal.end(), terminal_cum.begin());
  if (!(terminal_cum.back() > 0.0)) throw std::runtime_error("sample_continuous: zero total weight");

  const double h_max = law.max_density();
  const bool gaussian = law.kind() == LawKind::Gaussian;
  const double sigma = law.sigma();

  SampleSet set;
  set.N = N;
  set.a = a;
  set.beta = beta;
  set.sigma = sigma;
  set.boundary = boundary;
  set.summaries.resize(n_paths);
  if (opts.base.keep_paths) set.paths.resize(n_paths);

  auto stall = [&](long n, double x, double y) {
    std::ostringstream os;
    os << "sample_continuous: rejection stalled on an excursion of length " << n << " from " << x;
    if (y >= 0.0) os << " to " << y;
    os << " after " << opts.max_attempts << " attempts";
    throw std::runtime_error(os.str());
  };

  parallel_blocks(kBlocks, opts.base.threads, [&](std::size_t b) {
    Rng rng(seed, b);
    const long lo = n_paths * static_cast<long>(b) / static_cast<long>(kBlocks);
    const long hi = n_paths * static_cast<long>(b + 1) / static_cast<long>(kBlocks);
    std::vector<double> heights(N), weights, cum, trial;
    std::vector<std::pair<long, std::size_t>> contacts;  // (time, node), increasing in time
    for (long path = lo; path < hi; ++path) {
      contacts.clear();
      const std::size_t term = pick(terminal_cum, rng);
      long t = 0;
      std::size_t j = 0;
      if (!(boundary == Boundary::Free && term == 0)) {
        t = static_cast<long>(term / m);
        j = term % m;
        contacts.push_back({t, j});
      }
      // walk back through the renewal sequence
      while (t > 0) {
        weights.assign(static_cast<std::size_t>(t - 1) * m + 1, 0.0);
        weights[0] = tk.K_init(j, t);
        for (long s = 1; s < t; ++s)
          for (std::size_t i = 0; i < m; ++i) weights[(s - 1) * m + i + 1] = g.Z[s][i] * tk.K(i, j, t - s);
        cum.resize(weights.size());
        std::partial_sum(weights.begin(), weights.end(), cum.begin());
        const std::size_t idx = pick(cum, rng);
        if (idx == 0) break;
        t = static_cast<long>((idx - 1) / m) + 1;
        j = (idx - 1) % m;
        contacts.push_back({t, j});
      }
      std::reverse(contacts.begin(), contacts.end());

      long prev_t = 0;
      double prev_x = 0.0;
      auto fill = [&](long t0, double x, long len, double y, bool bridge) {
        // heights t0+1 .. t0+len-1 (bridge) or t0+1 .. t0+len (free end), all > a
        const long inner = bridge ? len - 1 : len;
        if (inner <= 0) return;
        trial.resize(len);
        for (long attempt = 1;; ++attempt) {
          if (attempt > opts.max_attempts) stall(len, x, bridge ? y : -1.0);
          bool ok = true;
          if (bridge && gaussian) {
            double s = 0.0;
            for (long k = 0; k < len; ++k) trial[k] = s += sigma * rng.normal();
            const double shift = trial[len - 1] - (y - x);
            for (long k = 0; k < inner && ok; ++k) {
              const double v = x + trial[k] - shift * static_cast<double>(k + 1) / len;
              trial[k] = v;
              ok = v > a;
            }
          } else {
            double s = x;
            for (long k = 0; k < inner && ok; ++k) {
              s += law.draw(rng);
              trial[k] = s;
              ok = s > a;
            }
            if (ok && bridge) ok = rng.uniform() * h_max < law.density(y - s);
          }
          if (ok) break;
        }
        for (long k = 0; k < inner; ++k) heights[t0 + k] = trial[k];
      };
      for (const auto& [ct, cj] : contacts) {
        const double y = kernel.nodes[cj];
        fill(prev_t, prev_x, ct - prev_t, y, true);
        heights[ct - 1] = y;
        prev_t = ct;
        prev_x = y;
      }
      if (prev_t < N) fill(prev_t, prev_x, N - prev_t, 0.0, false);

      set.summaries[path] = summarize(heights, a, opts.base.marginal_times);
      if (opts.base.keep_paths) set.paths[path] = full_path(heights, a, boundary);
    }
  });
  return set;
}

RescaledPath::RescaledPath(const std::vector<double>& heights, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("rescale: sigma > 0 required");
  const double N = static_cast<double>(heights.size());
  const double scale = heights.empty() ? 0.0 : 1.0 / (sigma * std::sqrt(N));
  values_.reserve(heights.size() + 1);
  values_.push_back(0.0);
  for (double h : heights) values_.push_back(h * scale);
}

double RescaledPath::operator()(double t) const {
  const long n = N();
  if (n == 0) return 0.0;
  const double x = std::clamp(t, 0.0, 1.0) * static_cast<double>(n);
  const auto k = std::min(static_cast<long>(std::floor(x)), n);
  if (k == n) return values_[n];
  const double frac = x - static_cast<double>(k);
  return values_[k] + frac * (values_[k + 1] - values_[k]);
}

RescaledPath rescale(const std::vector<double>& heights, double sigma) { return RescaledPath(heights, sigma); }

std::vector<ContactTailRow> contact_stats(const SampleSet& samples, const std::vector<long>& L_grid) {
  if (samples.summaries.empty()) throw std::invalid_argument("contact_stats: no samples");
  const double n = static_cast<double>(samples.summaries.size());
  std::vector<ContactTailRow> rows;
  for (long L : L_grid) {
    long c_last = 0, c_left = 0, c_right = 0;
    for (const auto& s : samples.summaries) {
      c_last += s.last_contact >= L;
      c_left += s.L_A >= L;
      c_right += samples.N - s.R_A >= L;
    }
    rows.push_back({L, c_last / n, c_left / n, c_right / n});
  }
  return rows;
}

SampleSet reference_sampler(ReferenceKind kind, long N_ref, long n_paths, std::uint64_t seed,
                            const SampleOptions& opts) {
  if (kind == ReferenceKind::Excursion && N_ref % 2 != 0)
    throw std::invalid_argument("reference_sampler: excursions need an even N_ref");
  const Boundary b = kind == ReferenceKind::Meander ? Boundary::Free : Boundary::Constrained;
  return LatticeSampler(0.5, 0, 0.0, N_ref, b).sample(n_paths, seed, opts);
}

std::vector<long> marginal_indices(const std::vector<double>& t_grid, long N) {
  std::vector<long> k;
  for (double t : t_grid) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("marginal_indices: t must lie in [0, 1]");
    k.push_back(std::lround(t * static_cast<double>(N)));
  }
  return k;
}

ScalingResult scaling_test(const SampleSet& samples, double sample_cell, const SampleSet& reference,
                           double reference_cell, const std::vector<double>& t_grid, std::uint64_t seed) {
  if (samples.summaries.empty() || reference.summaries.empty())
    throw std::invalid_argument("scaling_test: empty sample set");
  ScalingResult r;
  r.regime = "subcritical";
  r.n_paths = static_cast<long>(samples.summaries.size());
  r.t = t_grid;
  Rng rs(seed, 0);
  Rng rr(seed, 1);
  auto marginal = [](const SampleSet& set, std::size_t idx, double cell, Rng& rng) {
    const double scale = 1.0 / (set.sigma * std::sqrt(static_cast<double>(set.N)));
    std::vector<double> xs;
    xs.reserve(set.summaries.size());
    for (const auto& s : set.summaries) {
      if (idx >= s.marginals.size()) throw std::invalid_argument("scaling_test: marginal not recorded");
      xs.push_back((s.marginals[idx] + cell * (rng.uniform() - 0.5)) * scale);
    }
    return xs;
  };
  for (std::size_t i = 0; i < t_grid.size(); ++i)
    r.ks.push_back(ks_two_sample(marginal(samples, i, sample_cell, rs), marginal(reference, i, reference_cell, rr)));
  return r;
}

ScalingResult sup_quantiles(const SampleSet& samples, const std::vector<double>& levels) {
  if (samples.summaries.empty()) throw std::invalid_argument("sup_quantiles: empty sample set");
  ScalingResult r;
  r.regime = "supercritical";
  r.n_paths = static_cast<long>(samples.summaries.size());
  const double scale = 1.0 / (samples.sigma * std::sqrt(static_cast<double>(samples.N)));
  std::vector<double> sups;
  for (const auto& s : samples.summaries) sups.push_back(s.sup * scale);
  r.sup_levels = levels;
  for (double l : levels) r.sup_quantiles.push_back(quantile(sups, l));
  return r;
}

}  // namespace stripwet
