#include "stripwet/renewal.hpp"

#include "stripwet/parallel.hpp"
#include "stripwet/pq_exact.hpp"
#include "stripwet/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace stripwet {

RenewalKernel RenewalKernel::from_table(std::size_t m, long n_max, std::vector<double> values) {
  if (values.size() != m * m * static_cast<std::size_t>(n_max))
    throw std::invalid_argument("RenewalKernel: table size mismatch");
  RenewalKernel k;
  k.m = m;
  k.n_max = n_max;
  k.values = std::move(values);
  k.tail = Matrix(m, m);
  return k;
}

RenewalKernel RenewalKernel::from_tilted(const TiltedKernel& t) {
  RenewalKernel k = from_table(t.m, t.n_max, t.values);
  k.tail = t.tail;
  k.decay = t.F;
  k.init_values = t.init_values;
  k.init_tail = t.init_tail;
  return k;
}

double RenewalKernel::K(std::size_t i, std::size_t j, long n) const {
  if (n <= 0) return 0.0;
  if (n <= n_max) return values[(i * m + j) * n_max + (n - 1)];
  const double dn = static_cast<double>(n);
  return tail(i, j) * std::exp(-decay * dn) / (dn * std::sqrt(dn));
}

double RenewalKernel::K_init(std::size_t j, long n) const {
  if (n <= 0) return 0.0;
  if (n <= n_max) return init_values[j * n_max + (n - 1)];
  const double dn = static_cast<double>(n);
  return init_tail[j] * std::exp(-decay * dn) / (dn * std::sqrt(dn));
}

double RenewalKernel::row_mass(std::size_t i) const {
  const double ts = power_tail_sum(1.5, decay, n_max);
  double s = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    for (long n = 1; n <= n_max; ++n) s += values[(i * m + j) * n_max + (n - 1)];
    s += tail(i, j) * ts;
  }
  return s;
}

double RenewalKernel::init_mass() const {
  if (!has_init()) throw std::logic_error("RenewalKernel: no initial row");
  const double ts = power_tail_sum(1.5, decay, n_max);
  double s = std::accumulate(init_values.begin(), init_values.end(), 0.0);
  for (double c : init_tail) s += c * ts;
  return s;
}

namespace {

struct AliasTable {
  std::vector<double> prob;
  std::vector<std::uint32_t> alias;
};

AliasTable build_alias(std::vector<double> w) {
  const std::size_t n = w.size();
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  AliasTable t;
  t.prob.assign(n, 1.0);
  t.alias.resize(n);
  std::iota(t.alias.begin(), t.alias.end(), 0u);
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] *= static_cast<double>(n) / total;
    (w[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const auto s = small.back();
    small.pop_back();
    const auto l = large.back();
    t.prob[s] = w[s];
    t.alias[s] = l;
    w[l] -= 1.0 - w[s];
    if (w[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  return t;
}

}  // namespace

namespace {

std::uint32_t alias_threshold(double prob) {
  const double scaled = std::ldexp(prob, 32);
  return scaled >= 4294967295.0 ? 0xffffffffu : static_cast<std::uint32_t>(scaled);
}

constexpr double kCommon = 1e-4;        // head outcomes at least this likely enter block trees
constexpr std::size_t kLeaves = 2048;   // leaves per block tree
constexpr std::uint32_t kMaxRun = 64;

}  // namespace

RenewalSampler::RenewalSampler(const RenewalKernel& k) : k_(k) {
  head_n_ = std::max(1L, std::min(k.n_max, static_cast<long>(256 / std::max<std::size_t>(1, k.m))));
  const double ts = power_tail_sum(1.5, k.decay, k.n_max);
  auto make_alias = [&](const std::vector<Renewal>& head, const std::vector<double>& w, std::vector<double> rest_cum) {
    std::vector<double> weights = w;
    weights.push_back(rest_cum.back());
    AliasTable t = build_alias(std::move(weights));
    Alias out;
    out.rest_cum = std::move(rest_cum);
    auto outcome = [&](std::size_t i) { return i < head.size() ? head[i] : Renewal{0, 0}; };
    for (std::size_t i = 0; i < t.prob.size(); ++i) {
      const Renewal a = outcome(i);
      const Renewal b = outcome(t.alias[i]);
      out.cells.push_back({alias_threshold(t.prob[i]),
                           {static_cast<std::int32_t>(a.time), static_cast<std::int32_t>(b.time)},
                           {static_cast<std::uint32_t>(a.state), static_cast<std::uint32_t>(b.state)}});
    }
    return out;
  };
  auto make_row = [&](const double* table, auto tail_of) {
    // table[j * n_max + n - 1]
    Row row;
    std::vector<Renewal> head, rare;
    std::vector<double> w, rare_w;
    double mass = 0.0;
    for (std::size_t j = 0; j < k.m; ++j)
      for (long n = 1; n <= head_n_; ++n) {
        const double v = table[j * k.n_max + (n - 1)];
        head.push_back({n, j});
        w.push_back(v);
        mass += v;
        if (v >= kCommon) {
          row.common.push_back({static_cast<std::int32_t>(n), static_cast<std::uint32_t>(j)});
          row.common_prob.push_back(v);
        } else {
          rare.push_back({n, j});
          rare_w.push_back(v);
        }
      }
    std::vector<double> rest_cum;
    double rest_mass = 0.0;
    for (std::size_t j = 0; j < k.m; ++j)
      for (long n = head_n_ + 1; n <= k.n_max; ++n) {
        rest_mass += table[j * k.n_max + (n - 1)];
        rest_cum.push_back(rest_mass);
      }
    for (std::size_t j = 0; j < k.m; ++j) {
      rest_mass += tail_of(j) * ts;
      rest_cum.push_back(rest_mass);
    }
    mass += rest_mass;
    if (mass > 1.0 + 1e-9) throw std::invalid_argument("RenewalSampler: row mass exceeds 1");
    rest_mass += std::max(0.0, 1.0 - mass);
    rest_cum.push_back(rest_mass);
    row.outside_mass = std::accumulate(rare_w.begin(), rare_w.end(), rest_mass);
    row.all = make_alias(head, w, rest_cum);
    if (row.outside_mass > 0.0) row.outside = make_alias(rare, rare_w, std::move(rest_cum));
    rows_.push_back(std::move(row));
  };
  for (std::size_t i = 0; i < k.m; ++i)
    make_row(k.values.data() + i * k.m * k.n_max, [&](std::size_t j) { return k.tail(i, j); });
  if (k.has_init()) make_row(k.init_values.data(), [&](std::size_t j) { return k.init_tail[j]; });
  for (std::size_t r = 0; r < rows_.size(); ++r) build_blocks(r);
}

void RenewalSampler::build_blocks(std::size_t row) {
  // Tree nodes are runs; expanding a node replaces it by its common one-step
  // extensions and one open leaf holding the remaining mass.
  struct Node {
    double prob;
    std::int64_t parent;
    Step step;
    std::uint32_t depth;
    std::int32_t time;
    std::uint32_t state;
    bool open;
  };
  std::vector<Node> nodes;
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry> frontier;
  std::vector<std::size_t> leaves;
  auto expand = [&](std::int64_t parent, std::size_t r, double prob, std::uint32_t depth, std::int32_t time) {
    const Row& src = rows_[r];
    for (std::size_t c = 0; c < src.common.size(); ++c) {
      const Step st = src.common[c];
      nodes.push_back({prob * src.common_prob[c], parent, st, depth + 1, time + st.time, st.state, false});
      frontier.push({nodes.back().prob, nodes.size() - 1});
    }
    const double rest = prob * src.outside_mass;
    if (rest > 0.0) {
      nodes.push_back({rest, parent, {0, static_cast<std::uint32_t>(r)}, depth, time, static_cast<std::uint32_t>(r), true});
      leaves.push_back(nodes.size() - 1);
    }
  };
  expand(-1, row, 1.0, 0, 0);
  while (!frontier.empty()) {
    const std::size_t id = frontier.top().second;
    frontier.pop();
    const Node n = nodes[id];
    const std::size_t grow = rows_[n.state].common.size() + 1;
    if (n.depth >= kMaxRun || leaves.size() + frontier.size() + grow > kLeaves) {
      leaves.push_back(id);
      continue;
    }
    expand(static_cast<std::int64_t>(id), n.state, n.prob, n.depth, n.time);
  }

  BlockTable& table = rows_[row].blocks;
  std::vector<double> w;
  for (std::size_t id : leaves) {
    const Node& n = nodes[id];
    // an open leaf's parent holds the run; a closed leaf is itself the last step
    std::vector<Step> run;
    for (std::int64_t at = n.open ? n.parent : static_cast<std::int64_t>(id); at >= 0; at = nodes[at].parent)
      run.push_back(nodes[at].step);
    std::reverse(run.begin(), run.end());
    table.leaves.push_back({n.time, n.state, static_cast<std::uint32_t>(steps_.size()),
                            static_cast<std::uint32_t>(run.size()), n.open});
    steps_.insert(steps_.end(), run.begin(), run.end());
    w.push_back(n.prob);
  }
  const AliasTable t = build_alias(std::move(w));
  for (std::size_t i = 0; i < t.prob.size(); ++i)
    table.cells.push_back({alias_threshold(t.prob[i]), {static_cast<std::uint32_t>(i), t.alias[i]}});
}

Renewal RenewalSampler::rest(const Alias& a, Rng& rng) const {
  const double u = rng.uniform() * a.rest_cum.back();
  const auto idx = static_cast<std::size_t>(std::upper_bound(a.rest_cum.begin(), a.rest_cum.end(), u) - a.rest_cum.begin());
  const auto body = static_cast<std::size_t>(k_.n_max - head_n_);
  const std::size_t cells = k_.m * body;
  if (idx < cells) return {head_n_ + 1 + static_cast<long>(idx % body), idx / body};
  if (idx < cells + k_.m) return {sample_tail(rng), idx - cells};
  return {0, 0};
}

long RenewalSampler::sample_tail(Rng& rng) const {
  const double n1 = static_cast<double>(k_.n_max + 1);
  const double d = k_.decay;
  for (;;) {
    if (d * n1 > 1.0) {
      const double u = 1.0 - rng.uniform();
      const double n = n1 + std::floor(std::log(u) / -d);
      if (rng.uniform() < std::pow(n1 / n, 1.5)) return static_cast<long>(n);
    } else {
      const double u = 1.0 - rng.uniform();
      const double n = std::floor(n1 / (u * u));
      if (!(n < 9e15)) continue;
      auto ratio = [](double x) { return std::pow(x, -1.5) / (1.0 / std::sqrt(x) - 1.0 / std::sqrt(x + 1.0)); };
      if (rng.uniform() < ratio(n) / ratio(n1) * std::exp(-d * (n - n1))) return static_cast<long>(n);
    }
  }
}

Trajectory simulate(const RenewalKernel& k, long horizon, RenewalStart start, Rng& rng) {
  return simulate(RenewalSampler(k), horizon, start, rng);
}

Trajectory simulate(const RenewalSampler& sampler, long horizon, RenewalStart start, Rng& rng) {
  if (horizon < 1) throw std::invalid_argument("simulate: horizon >= 1 required");
  const RenewalKernel& k = sampler.kernel();
  if (start.use_init && !k.has_init()) throw std::invalid_argument("simulate: kernel has no initial row");
  Trajectory tr;
  long t = 0;
  std::size_t row = start.use_init ? k.m : start.state;
  for (;;) {
    const Renewal r = sampler.next(row, rng);
    if (r.time == 0) {
      tr.died = true;
      break;
    }
    t += r.time;
    if (t > horizon) break;
    tr.renewals.push_back({t, r.state});
    row = r.state;
  }
  return tr;
}

GreenSeries green_function(const RenewalKernel& k, long N_max, RenewalStart start) {
  if (N_max < 0) throw std::invalid_argument("green_function: N_max >= 0 required");
  if (start.use_init && !k.has_init()) throw std::invalid_argument("green_function: kernel has no initial row");
  const std::size_t m = k.m;
  // kk[n][i * m + j] = K_ij(n)
  std::vector<std::vector<double>> kk(N_max + 1, std::vector<double>(m * m, 0.0));
  for (long n = 1; n <= N_max; ++n)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) kk[n][i * m + j] = k.K(i, j, n);

  GreenSeries g;
  g.Z.assign(N_max + 1, std::vector<double>(m, 0.0));
  if (!start.use_init) g.Z[0][start.state] = 1.0;
  for (long N = 1; N <= N_max; ++N) {
    auto& z = g.Z[N];
    for (std::size_t j = 0; j < m; ++j) z[j] = start.use_init ? k.K_init(j, N) : kk[N][start.state * m + j];
    for (long t = 1; t < N; ++t) {
      const auto& prev = g.Z[t];
      const auto& kn = kk[N - t];
      for (std::size_t i = 0; i < m; ++i) {
        const double zi = prev[i];
        if (zi == 0.0) continue;
        const double* row = kn.data() + i * m;
        for (std::size_t j = 0; j < m; ++j) z[j] += zi * row[j];
      }
    }
  }
  return g;
}

std::vector<ForwardTV> forward_chain_tv(const RenewalKernel& k, const std::vector<double>& mu, double xi,
                                        const std::vector<long>& j_list, long n_chains, RenewalStart start,
                                        std::uint64_t seed, unsigned threads) {
  if (mu.size() != k.m) throw std::invalid_argument("forward_chain_tv: mu has the wrong size");
  if (!(xi >= 1.0)) throw std::invalid_argument("forward_chain_tv: xi >= 1 required");
  if (n_chains < 1) throw std::invalid_argument("forward_chain_tv: n_chains >= 1 required");
  for (std::size_t i = 0; i < k.m; ++i)
    if (k.row_mass(i) < 1.0 - 1e-9) throw std::invalid_argument("forward_chain_tv: kernel is defective");
  if (start.use_init && k.init_mass() < 1.0 - 1e-9) throw std::invalid_argument("forward_chain_tv: kernel is defective");

  std::vector<std::size_t> order(j_list.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return j_list[x] < j_list[y]; });

  std::vector<long> marks(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) marks[i] = j_list[order[i]] + 1;

  const RenewalSampler sampler(k);
  constexpr std::size_t kBlocks = 256;
  std::vector<std::vector<long>> hits(kBlocks, std::vector<long>(j_list.size() * k.m, 0));
  parallel_blocks(kBlocks, threads, [&](std::size_t b) {
    Rng rng(seed, b);
    const long lo = n_chains * static_cast<long>(b) / static_cast<long>(kBlocks);
    const long hi = n_chains * static_cast<long>(b + 1) / static_cast<long>(kBlocks);
    auto& h = hits[b];
    // Chains advance in lockstep lanes so that independent draws overlap; a
    // finished lane picks up the next chain of the block.
    constexpr long kLanes = 16;
    constexpr long kIdle = std::numeric_limits<long>::max();
    const std::size_t row0 = start.use_init ? k.m : start.state;
    const auto& steps = sampler.steps();
    std::array<long, kLanes> t{};
    std::array<std::size_t, kLanes> row{};
    std::array<std::size_t, kLanes> target{};
    std::array<long, kLanes> mark{};  // next time of interest, j + 1
    long next_chain = lo;
    long live = 0;
    auto launch = [&](long l) {
      if (next_chain < hi) {
        ++next_chain;
        ++live;
        t[l] = 0;
        row[l] = row0;
        target[l] = 0;
        mark[l] = marks[0];
      } else {
        mark[l] = kIdle;
      }
    };
    // advance lane l by one renewal (n, j) and settle the marks it reaches
    auto settle = [&](long l, long n, std::size_t j) {
      t[l] += n;
      row[l] = j;
      while (t[l] >= mark[l]) {
        if (mark[l] == t[l]) ++h[order[target[l]] * k.m + j];
        if (++target[l] == order.size()) {
          --live;
          launch(l);
          return false;
        }
        mark[l] = marks[target[l]];
      }
      return true;
    };
    for (long l = 0; l < kLanes; ++l) launch(l);
    while (live > 0) {
      for (long l = 0; l < kLanes; ++l) {
        if (mark[l] == kIdle) continue;
        const auto& blk = sampler.next_block(row[l], rng);
        if (!blk.open && t[l] + blk.time < mark[l]) {
          t[l] += blk.time;
          row[l] = blk.state;
          continue;
        }
        bool running = true;
        for (std::uint32_t s = 0; s < blk.len && running; ++s)
          running = settle(l, steps[blk.first + s].time, steps[blk.first + s].state);
        if (running && blk.open) {
          const Renewal r = sampler.next_outside(row[l], rng);
          if (r.time == 0) throw std::runtime_error("forward_chain_tv: chain died");
          settle(l, r.time, r.state);
        }
      }
    }
  });

  std::vector<ForwardTV> out;
  for (std::size_t idx = 0; idx < j_list.size(); ++idx) {
    double total = 0.0;
    double l1 = 0.0;
    for (std::size_t y = 0; y < k.m; ++y) {
      long c = 0;
      for (const auto& h : hits) c += h[idx * k.m + y];
      const double ph = static_cast<double>(c) / n_chains;
      total += ph;
      l1 += std::abs(ph - mu[y] / xi);
    }
    l1 += std::abs((1.0 - total) - (1.0 - 1.0 / xi));
    out.push_back({j_list[idx], total, 0.5 * l1});
  }
  return out;
}

GreenPartition green_partition(const ReturnKernel& kernel, double beta, long N_max) {
  const TiltedKernel t = build_tilted(kernel, beta);
  const RenewalKernel rk = RenewalKernel::from_tilted(t);
  const GreenSeries g = green_function(rk, N_max, {true, 0});
  const std::size_t m = t.m;
  GreenPartition gp;
  gp.F = t.F;
  gp.constrained.assign(N_max + 1, 0.0);
  gp.free.assign(N_max + 1, 0.0);
  gp.constrained[0] = 1.0;
  // c[N][j]: tilted constrained weight ending at node j
  std::vector<std::vector<double>> c(N_max + 1, std::vector<double>(m, 0.0));
  for (long N = 1; N <= N_max; ++N)
    for (std::size_t j = 0; j < m; ++j) {
      c[N][j] = g.Z[N][j] * t.v_origin / t.v[j];
      gp.constrained[N] += c[N][j];
    }
  std::vector<std::vector<double>> surv(m + 1, std::vector<double>(N_max + 1));
  for (long n = 0; n <= N_max; ++n) {
    const double tilt = std::exp(-t.F * static_cast<double>(n));
    for (std::size_t j = 0; j < m; ++j) surv[j][n] = kernel.survival_at(j, n) * tilt;
    surv[m][n] = kernel.survival_at(kernel.origin, n) * tilt;
  }
  for (long N = 0; N <= N_max; ++N) {
    double s = surv[m][N];
    for (long u = 1; u <= N; ++u)
      for (std::size_t j = 0; j < m; ++j) s += c[u][j] * surv[j][N - u];
    gp.free[N] = s;
  }
  return gp;
}

std::vector<AsymptoticRow> partition_asymptotics(AsymptoticKind kind, const IncrementLaw& law, double a,
                                                 double beta, const std::vector<long>& N_list,
                                                 const KernelOptions& opts) {
  std::vector<AsymptoticRow> rows;
  if (N_list.empty()) return rows;
  const long n_top = *std::max_element(N_list.begin(), N_list.end());
  auto scale = [&](long N) {
    const double n = static_cast<double>(N);
    switch (kind) {
      case AsymptoticKind::Localized: return 1.0;
      case AsymptoticKind::DelocConstrained: return n * std::sqrt(n);
      case AsymptoticKind::DelocFree: return std::sqrt(n);
    }
    return 1.0;
  };
  const ReturnKernel kernel = cached_kernel(law, a, opts);
  if (law.is_lattice()) {
    const double F = kind == AsymptoticKind::Localized ? free_energy(kernel, beta).F : 0.0;
    const Boundary b = kind == AsymptoticKind::DelocFree ? Boundary::Free : Boundary::Constrained;
    const PartitionDP dp = transfer_matrix_series(law.p(), static_cast<int>(a), beta, N_list, b, 0);
    for (std::size_t i = 0; i < N_list.size(); ++i)
      rows.push_back({N_list[i], std::exp(dp.log_z[i] - F * N_list[i]) * scale(N_list[i])});
    return rows;
  }
  const GreenPartition gp = green_partition(kernel, beta, n_top);
  for (long N : N_list) {
    const double z = kind == AsymptoticKind::DelocFree ? gp.free[N] : gp.constrained[N];
    rows.push_back({N, z * scale(N)});
  }
  return rows;
}

}  // namespace stripwet
