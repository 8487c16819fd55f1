#pragma once

#include "stripwet/increments.hpp"
#include "stripwet/matrix.hpp"
#include "stripwet/return_kernel.hpp"
#include "stripwet/rng.hpp"
#include "stripwet/spectral.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

namespace stripwet {

/// Markov renewal kernel on m states: K_ij(n) tabulated for n <= n_max and
/// tail_ij n^{-3/2} e^{-decay n} beyond. An optional initial row replaces the
/// start state for the first inter-arrival.
struct RenewalKernel {
  std::size_t m = 0;
  long n_max = 0;
  std::vector<double> values;  // [(i * m + j) * n_max + n - 1]
  Matrix tail;
  double decay = 0.0;
  std::vector<double> init_values;  // [j * n_max + n - 1]; empty if none
  std::vector<double> init_tail;

  static RenewalKernel from_table(std::size_t m, long n_max, std::vector<double> values);
  static RenewalKernel from_tilted(const TiltedKernel& t);

  bool has_init() const { return !init_values.empty(); }
  double K(std::size_t i, std::size_t j, long n) const;
  double K_init(std::size_t j, long n) const;
  double row_mass(std::size_t i) const;
  double init_mass() const;
};

/// Marker state for "no initial row": start from this state instead.
struct RenewalStart {
  bool use_init = false;
  std::size_t state = 0;
};

struct Renewal {
  long time;
  std::size_t state;
};

struct Trajectory {
  std::vector<Renewal> renewals;
  bool died = false;
};

/// Sampler of one inter-arrival (n, j) per call; n = 0 is death. Short
/// inter-arrivals come from a small alias table, the rest from a cumulative
/// table over the remaining cells, the tail buckets and death.
///
/// next_block draws a run of consecutive inter-arrivals at once. Each row owns
/// a tree of likely prefixes; a leaf is either a finished run or a run followed
/// by one draw from outside the common outcomes of its last state (open).
class RenewalSampler {
 public:
  struct Step {
    std::int32_t time;
    std::uint32_t state;
  };
  struct Block {
    std::int32_t time;    // sum over the run
    std::uint32_t state;  // state after the run
    std::uint32_t first;  // offset into steps()
    std::uint32_t len;
    bool open;
  };

  explicit RenewalSampler(const RenewalKernel& k);

  /// row = m selects the initial row.
  Renewal next(std::size_t row, Rng& rng) const { return draw(rows_[row].all, rng); }

  const Block& next_block(std::size_t row, Rng& rng) const {
    const BlockTable& b = rows_[row].blocks;
    const std::uint64_t bits = rng();
    const BlockCell& c = b.cells[((bits >> 32) * b.cells.size()) >> 32];
    return b.leaves[c.leaf[static_cast<std::uint32_t>(bits) >= c.threshold]];
  }

  /// Draw from row conditioned to avoid the outcomes covered by the block tree.
  Renewal next_outside(std::size_t row, Rng& rng) const { return draw(rows_[row].outside, rng); }

  const std::vector<Step>& steps() const { return steps_; }
  const RenewalKernel& kernel() const { return k_; }

 private:
  // time 0 marks the "rest" outcome, resolved by a second draw.
  struct Cell {
    std::uint32_t threshold;
    std::int32_t time[2];
    std::uint32_t state[2];
  };
  struct Alias {
    std::vector<Cell> cells;
    std::vector<double> rest_cum;
  };
  struct BlockCell {
    std::uint32_t threshold;
    std::uint32_t leaf[2];
  };
  struct BlockTable {
    std::vector<BlockCell> cells;
    std::vector<Block> leaves;
  };
  struct Row {
    Alias all;
    Alias outside;
    std::vector<Step> common;
    std::vector<double> common_prob;
    double outside_mass = 0.0;
    BlockTable blocks;
  };

  Renewal draw(const Alias& a, Rng& rng) const {
    const std::uint64_t bits = rng();
    const Cell& c = a.cells[((bits >> 32) * a.cells.size()) >> 32];
    const std::size_t side = static_cast<std::uint32_t>(bits) >= c.threshold;
    if (c.time[side] > 0) return {c.time[side], c.state[side]};
    return rest(a, rng);
  }
  Renewal rest(const Alias& a, Rng& rng) const;
  long sample_tail(Rng& rng) const;
  void build_blocks(std::size_t row);

  const RenewalKernel& k_;
  long head_n_ = 0;
  std::vector<Row> rows_;
  std::vector<Step> steps_;
};

Trajectory simulate(const RenewalKernel& k, long horizon, RenewalStart start, Rng& rng);
/// Same, reusing a sampler built once for many trajectories.
Trajectory simulate(const RenewalSampler& sampler, long horizon, RenewalStart start, Rng& rng);

/// Z[N][j] = P[some tau_k = N with J_k = j], N = 0..N_max.
struct GreenSeries {
  std::vector<std::vector<double>> Z;
};

GreenSeries green_function(const RenewalKernel& k, long N_max, RenewalStart start);

struct ForwardTV {
  long j;
  double renewal_prob;  // empirical P[A_j = 1]
  double tv;
};

/// Empirical law of (A_j = 1, J'_j) over n_chains, against mu / xi.
std::vector<ForwardTV> forward_chain_tv(const RenewalKernel& k, const std::vector<double>& mu, double xi,
                                        const std::vector<long>& j_list, long n_chains, RenewalStart start,
                                        std::uint64_t seed, unsigned threads = 1);

enum class AsymptoticKind { Localized, DelocConstrained, DelocFree };

struct AsymptoticRow {
  long N;
  double normalized;
};

/// Z e^{-F N} (localized), Z N^{3/2} (constrained) or Z N^{1/2} (free). Lattice
/// laws use the transfer-matrix DP, continuous laws the Green function.
std::vector<AsymptoticRow> partition_asymptotics(AsymptoticKind kind, const IncrementLaw& law, double a,
                                                 double beta, const std::vector<long>& N_list,
                                                 const KernelOptions& opts = {});

/// Constrained and free partition functions times e^{-F N} for N = 0..N_max
/// from the Green function of the tilted kernel.
struct GreenPartition {
  double F = 0.0;
  std::vector<double> constrained;
  std::vector<double> free;
};

GreenPartition green_partition(const ReturnKernel& kernel, double beta, long N_max);

}  // namespace stripwet
