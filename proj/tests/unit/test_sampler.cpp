#include "stripwet/path_sampler.hpp"
#include "stripwet/renewal.hpp"
#include "stripwet/return_kernel.hpp"
#include "stripwet/spectral.hpp"
#include "stripwet/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <stdexcept>
#include <vector>

using namespace stripwet;

TEST_CASE("one-step constrained paths") {
  const double beta = 0.3;
  const LatticeSampler s(0.3, 1, beta, 1, Boundary::Constrained);
  CHECK(s.log_partition() == doctest::Approx(beta + std::log(0.7)));
  SampleOptions o;
  o.keep_paths = true;
  const long n = 40000;
  const SampleSet set = s.sample(n, 5, o);
  long zero = 0;
  for (const PathSample& p : set.paths) {
    REQUIRE(p.heights.size() == 1);
    CHECK((p.heights[0] == 0.0 || p.heights[0] == 1.0));
    zero += p.heights[0] == 0.0;
  }
  const double prob = 4.0 / 7.0;
  CHECK(std::abs(zero / double(n) - prob) < binomial_band(prob, n, 4.0));
}

TEST_CASE("lattice sampler partition function") {
  CHECK(LatticeSampler(0.3, 1, 0.1, 2, Boundary::Constrained).log_partition() ==
        doctest::Approx(0.2 + std::log(0.49)));
  CHECK(LatticeSampler(0.3, 1, 0.5, 10, Boundary::Constrained).log_partition() ==
        doctest::Approx(2.05479616859578268).epsilon(1e-12));
  CHECK(LatticeSampler(0.3, 2, -0.4, 9, Boundary::Free).log_partition() ==
        doctest::Approx(-3.59614871525240089).epsilon(1e-12));
}

TEST_CASE("path statistics are consistent") {
  SampleOptions o;
  o.keep_paths = true;
  o.marginal_times = {0, 50, 100};
  const SampleSet set = sample_pq(0.3, 1, 0.4, 100, Boundary::Free, 500, 21, o);
  REQUIRE(set.paths.size() == 500);
  for (std::size_t i = 0; i < set.paths.size(); ++i) {
    const PathSample& p = set.paths[i];
    const PathSummary& s = set.summaries[i];
    double sup = 0.0;
    long contacts = 0;
    for (double h : p.heights) {
      CHECK(h >= 0.0);
      sup = std::max(sup, h);
      contacts += h <= 1.0;
    }
    CHECK(s.sup == sup);
    CHECK(s.contacts == contacts);
    CHECK(s.end_height == p.heights.back());
    CHECK(s.last_contact == p.contact_set.back());
    CHECK(p.contact_set.front() == 0);
    CHECK(s.L_A <= 50);
    CHECK(s.R_A >= 50);
    REQUIRE(s.marginals.size() == 3);
    CHECK(s.marginals[0] == 0.0);
    CHECK(s.marginals[1] == p.heights[49]);
    CHECK(s.marginals[2] == p.heights[99]);
  }
}

TEST_CASE("sampling is independent of the thread count") {
  SampleOptions one, three;
  three.threads = 3;
  const SampleSet a = sample_pq(0.3, 1, 0.2, 300, Boundary::Constrained, 700, 8, one);
  const SampleSet b = sample_pq(0.3, 1, 0.2, 300, Boundary::Constrained, 700, 8, three);
  REQUIRE(a.summaries.size() == b.summaries.size());
  for (std::size_t i = 0; i < a.summaries.size(); ++i) {
    CHECK(a.summaries[i].sup == b.summaries[i].sup);
    CHECK(a.summaries[i].last_contact == b.summaries[i].last_contact);
    CHECK(a.summaries[i].end_height <= 1.0);
  }
}

TEST_CASE("rescaled paths") {
  const RescaledPath x = rescale({1, 2, 3, 4}, 1.0);
  CHECK(x.N() == 4);
  CHECK(x(0.0) == 0.0);
  CHECK(x(0.5) == doctest::Approx(1.0));
  CHECK(x(0.625) == doctest::Approx(1.25));
  CHECK(x(1.0) == doctest::Approx(2.0));
  CHECK(rescale({2, 4}, 2.0)(1.0) == doctest::Approx(4.0 / (2.0 * std::sqrt(2.0))));
  CHECK(marginal_indices({0.0, 0.5, 1.0}, 10) == std::vector<long>{0, 5, 10});
}

TEST_CASE("reference walks match Brownian meander and excursion marginals") {
  const long N = 1024, n = 20000;
  SampleOptions o;
  o.marginal_times = {N / 2, N};
  Rng jitter(99);
  const double scale = std::sqrt(static_cast<double>(N));
  // a nonnegative walk is a positive walk started at 1; spread over the parity cell
  auto spread = [&](double h) { return (h + 2.0 * jitter.uniform()) / scale; };

  const SampleSet m = reference_sampler(ReferenceKind::Meander, N, n, 1, o);
  std::vector<double> end;
  for (const PathSummary& s : m.summaries) end.push_back(spread(s.marginals[1]));
  // meander endpoint is Rayleigh
  CHECK(ks_one_sample(end, [](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-x * x / 2); }) < 0.02);

  const SampleSet e = reference_sampler(ReferenceKind::Excursion, N, n, 2, o);
  std::vector<double> mid;
  for (const PathSummary& s : e.summaries) {
    CHECK(s.end_height == 0.0);
    mid.push_back(spread(s.marginals[0]));
  }
  // excursion at t = 1/2 is chi with 3 degrees of freedom scaled by 1/2
  auto chi3 = [](double x) {
    if (x <= 0) return 0.0;
    const double y = 2.0 * x;
    return std::erf(y / std::numbers::sqrt2) - std::sqrt(2.0 / std::numbers::pi) * y * std::exp(-y * y / 2);
  };
  CHECK(ks_one_sample(mid, chi3) < 0.02);
}

TEST_CASE("contact tail statistics") {
  SampleSet set;
  set.N = 40;
  for (long last : {10L, 5L, 0L, 40L}) {
    PathSummary s;
    s.last_contact = last;
    s.L_A = std::min(last, 20L);
    s.R_A = last >= 20 ? last : 40;
    set.summaries.push_back(s);
  }
  const auto rows = contact_stats(set, {5, 11});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].p_last_contact == doctest::Approx(0.75));
  CHECK(rows[1].p_last_contact == doctest::Approx(0.25));
  CHECK(rows[0].p_left == doctest::Approx(0.75));
  CHECK(rows[1].p_left == doctest::Approx(0.25));
  CHECK(rows[0].p_right == doctest::Approx(0.0));
}

TEST_CASE("path dump round trip") {
  SampleOptions o;
  o.keep_paths = true;
  const SampleSet set = sample_pq(0.3, 1, 0.0, 20, Boundary::Free, 7, 4, o);
  const auto file = std::filesystem::temp_directory_path() / "stripwet_unit_paths.bin";
  save_paths(set, file.string());
  const auto back = load_paths(file.string());
  std::filesystem::remove(file);
  REQUIRE(back.size() == 7);
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i] == set.paths[i].heights);
  CHECK_THROWS_AS(load_paths("/nonexistent/paths.bin"), std::runtime_error);
}

TEST_CASE("continuous sampler contact law matches the Green function") {
  const IncrementLaw g = IncrementLaw::gaussian(1.0);
  ContinuousSampleOptions o;
  o.kernel.n_max = 128;
  const ReturnKernel k = build_continuous(g, 1.0, o.kernel);
  const double beta = critical_beta(k) + 0.5;
  const long N = 64, n = 4000;
  const GreenPartition gp = green_partition(k, beta, N);
  const double prob = gp.constrained[N] / gp.free[N];
  const SampleSet set = sample_continuous(g, 1.0, beta, N, Boundary::Free, n, 31, o);
  long ends = 0;
  for (const PathSummary& s : set.summaries) ends += s.last_contact == N;
  CHECK(std::abs(ends / double(n) - prob) < binomial_band(prob, n, 4.0));

  const SampleSet c = sample_continuous(g, 1.0, beta, N, Boundary::Constrained, 200, 32, o);
  for (const PathSummary& s : c.summaries) {
    CHECK(s.last_contact == N);
    CHECK((s.end_height >= 0.0 && s.end_height <= 1.0));
  }
}
