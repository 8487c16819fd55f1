#pragma once

#include "stripwet/increments.hpp"
#include "stripwet/pq_exact.hpp"
#include "stripwet/return_kernel.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace stripwet {

/// Streaming statistics of one path S_0 = 0, S_1, ..., S_N. The contact set
/// A = {i in [0, N] : S_i in [0, a]} always contains 0.
struct PathSummary {
  long last_contact = 0;  // max A
  long L_A = 0;           // max(A n [0, N/2])
  long R_A = 0;           // min((A n [N/2, N]) u {N})
  long contacts = 0;      // #{1 <= i <= N : S_i in [0, a]}
  double sup = 0.0;       // max_i S_i
  double end_height = 0.0;
  std::vector<double> marginals;  // S_k at the requested k
};

struct PathSample {
  std::vector<double> heights;  // S_1..S_N
  std::vector<long> contact_set;
  long L_A = 0;
  long R_A = 0;
  Boundary boundary = Boundary::Free;
};

struct SampleOptions {
  std::vector<long> marginal_times;
  bool keep_paths = false;
  unsigned threads = 1;
};

struct SampleSet {
  long N = 0;
  double a = 0.0;
  double beta = 0.0;
  double sigma = 1.0;
  Boundary boundary = Boundary::Free;
  std::vector<PathSummary> summaries;
  std::vector<PathSample> paths;  // filled only with keep_paths
};

/// Exact sampler for walks with steps -1, 0, +1 of probabilities p, 1 - 2p, p
/// (p = 1/2 is the simple walk) under the weight e^{beta #contacts} on the
/// event S_1..S_N >= 0, with S_N in [0, a] when constrained. Suffix weights
/// are tabulated backwards once and shared read-only by all workers.
class LatticeSampler {
 public:
  LatticeSampler(double p, long a, double beta, long N, Boundary boundary);

  long height_cap() const { return cap_; }
  /// Log of the partition function from the DP, for cross-checks.
  double log_partition() const { return log_z_; }
  SampleSet sample(long n_paths, std::uint64_t seed, const SampleOptions& opts) const;

 private:
  double p_, q_;
  long a_;
  double beta_;
  long N_;
  Boundary boundary_;
  long cap_;
  std::vector<double> w_;  // (N + 1) x (cap + 1), column-rescaled
  double log_z_ = 0.0;
};

SampleSet sample_pq(double p, long a, double beta, long N, Boundary boundary, long n_paths,
                    std::uint64_t seed, const SampleOptions& opts = {});

struct ContinuousSampleOptions {
  SampleOptions base;
  KernelOptions kernel;
  long max_attempts = 1000000;
};

/// Contact set and contact heights from the Markov renewal law (contact
/// heights live on the kernel's strip nodes), then each excursion filled by
/// rejection: Gaussian bridges for Gaussian steps, free walks otherwise.
SampleSet sample_continuous(const IncrementLaw& law, double a, double beta, long N, Boundary boundary,
                            long n_paths, std::uint64_t seed, const ContinuousSampleOptions& opts = {});

/// X^N(t) = S_{floor(Nt)} / (sigma sqrt N) with linear interpolation.
class RescaledPath {
 public:
  RescaledPath(const std::vector<double>& heights, double sigma);
  double operator()(double t) const;
  long N() const { return static_cast<long>(values_.size()) - 1; }

 private:
  std::vector<double> values_;  // k = 0..N
};

RescaledPath rescale(const std::vector<double>& heights, double sigma);

struct ContactTailRow {
  long L;
  double p_last_contact;  // P[max A >= L]
  double p_left;          // P[L_A >= L]
  double p_right;         // P[N - R_A >= L]
};

std::vector<ContactTailRow> contact_stats(const SampleSet& samples, const std::vector<long>& L_grid);

enum class ReferenceKind { Meander, Excursion };

/// Simple random walk conditioned to stay nonnegative (and to end at 0 for
/// the excursion), exact by DP.
SampleSet reference_sampler(ReferenceKind kind, long N_ref, long n_paths, std::uint64_t seed,
                            const SampleOptions& opts = {});

struct ScalingResult {
  std::string regime;
  long n_paths = 0;
  std::vector<double> t;
  std::vector<double> ks;
  /// Supercritical: levels and quantiles of sup_t X^N_t.
  std::vector<double> sup_levels;
  std::vector<double> sup_quantiles;
};

/// KS distance between rescaled marginals of the samples and of a reference
/// set at each t. Lattice values are spread uniformly over their cell
/// (cell widths in unrescaled height units) before comparison.
ScalingResult scaling_test(const SampleSet& samples, double sample_cell, const SampleSet& reference,
                           double reference_cell, const std::vector<double>& t_grid, std::uint64_t seed);

/// Quantiles of sup_t X^N_t.
ScalingResult sup_quantiles(const SampleSet& samples, const std::vector<double>& levels);

/// Binary dump of kept paths: header "SWPATHS", version, N, path count, then
/// S_1..S_N of each path as little-endian doubles.
void save_paths(const SampleSet& set, const std::string& path);
std::vector<std::vector<double>> load_paths(const std::string& path);

/// Time indices k = round(t N).
std::vector<long> marginal_indices(const std::vector<double>& t_grid, long N);

}  // namespace stripwet
