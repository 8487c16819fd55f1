#include "stripwet/pq_exact.hpp"
#include "stripwet/renewal.hpp"
#include "stripwet/return_kernel.hpp"
#include "stripwet/spectral.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <utility>
#include <vector>

using namespace stripwet;

namespace {

// 0 -> 0 at n = 3 (0.3), 0 -> 1 at 5 (0.7), 1 -> 0 at 4 (0.5), 1 -> 1 at 7 (0.5)
RenewalKernel hand_kernel() {
  const long n_max = 7;
  std::vector<double> v(2 * 2 * n_max, 0.0);
  auto at = [&](std::size_t i, std::size_t j, long n) -> double& { return v[(i * 2 + j) * n_max + n - 1]; };
  at(0, 0, 3) = 0.3;
  at(0, 1, 5) = 0.7;
  at(1, 0, 4) = 0.5;
  at(1, 1, 7) = 0.5;
  return RenewalKernel::from_table(2, n_max, std::move(v));
}

}  // namespace

TEST_CASE("hand kernel Green function") {
  const RenewalKernel k = hand_kernel();
  CHECK(k.row_mass(0) == doctest::Approx(1.0));
  CHECK(k.row_mass(1) == doctest::Approx(1.0));
  CHECK_FALSE(k.has_init());
  const GreenSeries g = green_function(k, 2000, {false, 0});
  CHECK(g.Z[0][0] == 1.0);
  CHECK(g.Z[3][0] == doctest::Approx(0.3));
  CHECK(g.Z[5][1] == doctest::Approx(0.7));
  CHECK(g.Z[6][0] == doctest::Approx(0.09));
  CHECK(g.Z[8][1] == doctest::Approx(0.21));
  CHECK(g.Z[9][0] == doctest::Approx(0.377));
  CHECK(g.Z[12][0] == doctest::Approx(0.2181));
  CHECK(g.Z[12][1] == doctest::Approx(0.35));
  CHECK(g.Z[1][0] == 0.0);
  CHECK(g.Z[2][1] == 0.0);
  // Z[N][j] -> mu_j / Xi with mu = (5/12, 7/12), Xi = 121/24
  CHECK(g.Z[2000][0] == doctest::Approx(5.0 / 12.0 * 24.0 / 121.0).epsilon(1e-9));
  CHECK(g.Z[2000][1] == doctest::Approx(7.0 / 12.0 * 24.0 / 121.0).epsilon(1e-9));
}

TEST_CASE("single draws follow the kernel") {
  const RenewalKernel k = hand_kernel();
  const RenewalSampler s(k);
  Rng rng(3);
  const long n = 200000;
  std::map<std::pair<long, std::size_t>, long> count;
  for (long i = 0; i < n; ++i) {
    const Renewal r = s.next(1, rng);
    ++count[{r.time, r.state}];
  }
  CHECK(count.size() == 2);
  const double se = std::sqrt(0.25 / n);
  CHECK(std::abs(count[{4, 0}] / double(n) - 0.5) < 4 * se);
  CHECK(std::abs(count[{7, 1}] / double(n) - 0.5) < 4 * se);
}

TEST_CASE("trajectories and forward chains") {
  const RenewalKernel k = hand_kernel();
  const RenewalSampler sampler(k);
  Rng rng(9);
  long first_short = 0;
  bool ordered = true;
  const long n = 20000;
  for (long i = 0; i < n; ++i) {
    const Trajectory t = simulate(sampler, 100, {false, 0}, rng);
    ordered &= !t.died && !t.renewals.empty();
    if (t.renewals.empty()) continue;
    long prev = 0;
    for (const Renewal& r : t.renewals) {
      ordered &= r.time > prev && r.time <= 100;
      prev = r.time;
    }
    first_short += t.renewals.front().time == 3;
  }
  CHECK(ordered);
  CHECK(std::abs(first_short / double(n) - 0.3) < 4 * std::sqrt(0.21 / n));

  const auto tv = forward_chain_tv(k, {5.0 / 12.0, 7.0 / 12.0}, 121.0 / 24.0, {200, 1000}, 50000, {false, 0}, 17);
  REQUIRE(tv.size() == 2);
  for (const ForwardTV& row : tv) {
    CHECK(row.tv < 0.02);
    CHECK(row.renewal_prob == doctest::Approx(24.0 / 121.0).epsilon(0.05));
  }
}

TEST_CASE("tilted Green function reproduces the lattice partition function") {
  const ReturnKernel k = build_pq(0.3, 1, 1024);
  const GreenPartition gp = green_partition(k, 0.5, 40);
  CHECK(std::log(gp.constrained[10]) + gp.F * 10 == doctest::Approx(2.05479616859578268).epsilon(1e-9));
  CHECK(std::log(gp.free[10]) + gp.F * 10 == doctest::Approx(2.35574698147028701).epsilon(1e-9));
  for (long N : {1L, 7L, 40L}) {
    CHECK(std::log(gp.constrained[N]) + gp.F * N ==
          doctest::Approx(transfer_matrix_log_z(0.3, 1, 0.5, N, Boundary::Constrained)).epsilon(1e-9));
    CHECK(std::log(gp.free[N]) + gp.F * N ==
          doctest::Approx(transfer_matrix_log_z(0.3, 1, 0.5, N, Boundary::Free)).epsilon(1e-9));
  }
}

TEST_CASE("tilted renewal kernel has an initial row") {
  const ReturnKernel k = build_pq(0.3, 1, 1024);
  const TiltedKernel t = build_tilted(k, 0.6);
  const RenewalKernel rk = RenewalKernel::from_tilted(t);
  CHECK(rk.has_init());
  CHECK(rk.init_mass() == doctest::Approx(1.0).epsilon(1e-9));
  for (std::size_t i = 0; i < rk.m; ++i) CHECK(rk.row_mass(i) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rk.K(1, 1, 2) == doctest::Approx(t.K(1, 1, 2)));
}
