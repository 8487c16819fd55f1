// Acceptance checks. One line per criterion: "criterion NN PASS|FAIL <detail>".

#include "stripwet/increments.hpp"
#include "stripwet/ladder.hpp"
#include "stripwet/path_sampler.hpp"
#include "stripwet/pq_exact.hpp"
#include "stripwet/renewal.hpp"
#include "stripwet/return_kernel.hpp"
#include "stripwet/spectral.hpp"
#include "stripwet/stats.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace stripwet;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string g(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, x);
  return buf;
}

constexpr double kP = 0.3;

// Closed-form strip critical points and their ordering.
Outcome criterion1() {
  Clock clock;
  Outcome o;
  const PQConstants c = pq_constants(kP);
  const double b1 = critical_beta(build_pq(kP, 1));
  const double b2 = critical_beta(build_pq(kP, 2));
  const double e1 = std::abs(b1 - c.beta_c_1);
  const double e2 = std::abs(b2 - c.beta_c_2);
  o.pass = e1 < 1e-6 && e2 < 1e-6;
  bool ordered = true;
  for (int i = 1; i <= 9; ++i) {
    const double p = 0.05 * i;
    const double c0 = pq_constants(p).beta_c_0;
    const double c1 = critical_beta(build_pq(p, 1, 1024));
    const double c2 = critical_beta(build_pq(p, 2, 1024));
    ordered = ordered && c0 > c1 && c1 > c2;
  }
  const double t = clock.seconds();
  o.pass = o.pass && ordered && t < 1.0;
  o.detail = "beta_c^1=" + g(b1, 10) + " (closed form " + g(c.beta_c_1, 10) + ", err " + g(e1, 3) +
             ") beta_c^2=" + g(b2, 10) + " (closed form " + g(c.beta_c_2, 10) + ", err " + g(e2, 3) +
             ") printed 0.121703 off by " + g(std::abs(b1 - 0.121703), 3) + "; ordering " +
             (ordered ? "strict" : "violated") + "; " + g(t, 3) + " s";
  return o;
}

// Free energy from the spectral root against (1/N) log Z of the DP.
Outcome criterion2() {
  Clock clock;
  const ReturnKernel k = build_pq(kP, 1);
  const double beta = critical_beta(k) + 0.5;
  const double F = free_energy(k, beta).F;
  const long N = 4000;
  const double dc = std::abs(transfer_matrix_log_z(kP, 1, beta, N, Boundary::Constrained) / N - F);
  const double df = std::abs(transfer_matrix_log_z(kP, 1, beta, N, Boundary::Free) / N - F);
  const double t = clock.seconds();
  Outcome o;
  o.pass = dc < 1e-4 && df < 1e-4 && t < 10.0;
  o.detail = "F=" + g(F, 10) + " |dF| constrained " + g(dc, 3) + " free " + g(df, 3) + "; " + g(t, 3) + " s";
  return o;
}

// Quadratic vanishing of F at the critical point.
Outcome criterion3() {
  Clock clock;
  const ReturnKernel k = build_pq(kP, 1);
  const double bc = critical_beta(k);
  const int n = 10;
  std::vector<double> lx, ly;
  for (int i = 0; i < n; ++i) {
    const double eps = 1e-3 * std::pow(10.0, static_cast<double>(i) / (n - 1));
    lx.push_back(std::log(eps));
    ly.push_back(std::log(free_energy(k, bc + eps).F));
  }
  const double mx = mean(lx), my = mean(ly);
  double sxy = 0.0, sxx = 0.0;
  for (int i = 0; i < n; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = sxy / sxx;
  // amplitude with the exponent held at 2
  double la = 0.0;
  for (int i = 0; i < n; ++i) la += ly[i] - 2.0 * lx[i];
  const double amplitude = std::exp(la / n);
  const double C1 = 5.0 * (3.0 + std::sqrt(5.0)) / kP;
  const double t = clock.seconds();
  const bool exponent_ok = std::abs(slope - 2.0) <= 0.15;
  const bool amplitude_ok = std::abs(amplitude / C1 - 1.0) <= 0.2;
  Outcome o;
  o.pass = exponent_ok && amplitude_ok && t < 30.0;
  o.detail = "exponent " + g(slope, 5) + (exponent_ok ? " ok" : " out of 2+-0.15") + "; amplitude " +
             g(amplitude, 5) + " vs C_1=" + g(C1, 5) + (amplitude_ok ? " ok" : " (off by more than 20%)") + "; " +
             g(t, 3) + " s";
  return o;
}

// Tilted-kernel row mass min(1, e^{beta - beta_c}).
Outcome criterion4() {
  Outcome o;
  std::ostringstream d;
  double worst = 0.0;
  const std::vector<std::pair<std::string, ReturnKernel>> kernels = {
      {"pq", build_pq(kP, 1)}, {"gauss", build_continuous(IncrementLaw::gaussian(1.0), 1.0)}};
  for (const auto& [name, k] : kernels) {
    const double bc = critical_beta(k);
    double dev = 0.0;
    for (double off : {-0.1, 0.0, 0.3}) {
      const TiltedKernel t = build_tilted(k, bc + off);
      const double want = std::min(1.0, std::exp(off));
      for (double m : t.row_mass) dev = std::max(dev, std::abs(m - want));
      if (!t.init_values.empty()) dev = std::max(dev, std::abs(t.init_row_mass - want));
    }
    d << name << " max dev " << g(dev, 3) << "; ";
    worst = std::max(worst, dev);
  }
  o.pass = worst < 1e-6;
  o.detail = d.str();
  return o;
}

// Localized plateau of Z^c e^{-FN} and convergence of the Green function.
Outcome criterion5() {
  const ReturnKernel k = build_pq(kP, 1);
  const double beta = critical_beta(k) + 0.5;
  const double F = free_energy(k, beta).F;
  const PartitionDP dp = transfer_matrix_series(kP, 1, beta, {1000, 2000}, Boundary::Constrained);
  const double z1 = std::exp(dp.log_z[0] - F * 1000.0);
  const double z2 = std::exp(dp.log_z[1] - F * 2000.0);
  const double plateau = std::abs(z2 / z1 - 1.0);
  const TiltedKernel t = build_tilted(k, beta);
  const RenewalKernel rk = RenewalKernel::from_tilted(t);
  const GreenSeries gs = green_function(rk, 2000, {false, k.origin});
  std::vector<double> target(t.m);
  for (std::size_t j = 0; j < t.m; ++j) target[j] = t.mu[j] / t.C_beta;
  const double tv = tv_distance(gs.Z[2000], target);
  Outcome o;
  o.pass = plateau < 1e-3 && tv < 1e-3;
  o.detail = "relative change " + g(plateau, 3) + "; Green TV " + g(tv, 3);
  return o;
}

// Delocalized decay exponents 3/2 (constrained) and 1/2 (free).
Outcome criterion6() {
  Clock clock;
  const double beta = critical_beta(build_pq(kP, 1)) - 0.15;
  const PartitionDP c = transfer_matrix_series(kP, 1, beta, {4000, 8000}, Boundary::Constrained);
  const PartitionDP f = transfer_matrix_series(kP, 1, beta, {4000, 8000}, Boundary::Free);
  const double rc = std::exp(c.log_z[1] - c.log_z[0]) / std::pow(2.0, -1.5);
  const double rf = std::exp(f.log_z[1] - f.log_z[0]) / std::pow(2.0, -0.5);
  const double t = clock.seconds();
  Outcome o;
  o.pass = std::abs(rc - 1.0) <= 0.05 && std::abs(rf - 1.0) <= 0.05 && t < 20.0;
  o.detail = "Z^c ratio / 2^-3/2 = " + g(rc, 6) + ", Z^f ratio / 2^-1/2 = " + g(rf, 6) + "; " + g(t, 3) + " s";
  return o;
}

// n^{3/2} f(n) against the ladder constant.
Outcome criterion7() {
  Outcome o;
  const IncrementLaw pq = IncrementLaw::pq(kP);
  ReturnKernel kp = build_pq(kP, 1, 4096);
  attach_ladder_theta(kp, estimate_ladder(pq, 1, 2.0, 1));
  const double fp = std::pow(4096.0, 1.5) * kp.f(1, 1, 4096);
  const double rp = fp / kp.theta_defph(1, 1);
  const double rl = fp / lattice_tail_constant(kP);

  const IncrementLaw gl = IncrementLaw::gaussian(1.0);
  KernelOptions ko;
  ko.n_max = 512;
  ReturnKernel kg = build_continuous(gl, 1.0, ko);
  attach_ladder_theta(kg, estimate_ladder(gl, 200000, 2.0, 7));
  const Matrix r = tail_ratio(kg, 512);
  // node nearest to a stands in for x = y = a
  std::size_t top = 0;
  for (std::size_t i = 0; i < kg.n_nodes(); ++i)
    if (kg.nodes[i] > kg.nodes[top]) top = i;
  const double rg = r(top, top);
  double worst = 0.0;
  for (std::size_t i = 0; i < kg.n_nodes(); ++i)
    for (std::size_t j = 0; j < kg.n_nodes(); ++j)
      if (!std::isnan(r(i, j))) worst = std::max(worst, std::abs(r(i, j) - 1.0));

  o.pass = std::abs(rp - 1.0) <= 0.05 && std::abs(rg - 1.0) <= 0.2;
  o.detail = "pq n=4096 ratio " + g(rp, 5) + " (Theta " + g(kp.theta_defph(1, 1), 6) + "; lattice constant " +
             g(lattice_tail_constant(kP), 6) + " gives " + g(rl, 5) + "); gauss n=512 ratio at x=y=" +
             g(kg.nodes[top], 4) + " " + g(rg, 4) + ", max deviation over nodes " + g(worst, 3);
  return o;
}

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

// Forward chains converge to mu / Xi.
Outcome criterion8() {
  Clock clock;
  const long chains = 1000000;
  // stationary law (5/12, 7/12), mean return 121/24
  const auto hand = forward_chain_tv(hand_kernel(), {5.0 / 12.0, 7.0 / 12.0}, 121.0 / 24.0, {10000}, chains,
                                     {false, 0}, 8);
  const ReturnKernel k = build_pq(kP, 1);
  const TiltedKernel t = build_tilted(k, critical_beta(k) + 0.5);
  const RenewalKernel rk = RenewalKernel::from_tilted(t);
  const auto tilted = forward_chain_tv(rk, t.mu, t.C_beta, {10000}, chains, {false, k.origin}, 9);
  const double time = clock.seconds();
  Outcome o;
  o.pass = hand[0].tv < 0.02 && tilted[0].tv < 0.02 && time < 120.0;
  o.detail = "TV hand " + g(hand[0].tv, 3) + ", tilted pq " + g(tilted[0].tv, 3) + " at j=10^4; " + g(time, 3) + " s";
  return o;
}

// Subcritical contact tails.
Outcome criterion9() {
  const double beta = critical_beta(build_pq(kP, 1)) - 0.1;
  const long paths = 100000;
  const long L = 50;
  std::vector<double> last, left, right;
  for (long N : {512L, 1024L, 2048L}) {
    const SampleSet f = sample_pq(kP, 1, beta, N, Boundary::Free, paths, 100 + N);
    const SampleSet c = sample_pq(kP, 1, beta, N, Boundary::Constrained, paths, 200 + N);
    last.push_back(contact_stats(f, {L})[0].p_last_contact);
    const ContactTailRow rc = contact_stats(c, {L})[0];
    left.push_back(rc.p_left);
    right.push_back(rc.p_right);
  }
  // non-increasing up to 3 standard errors of the difference
  auto monotone = [&](const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
      const double se = std::sqrt((v[i] * (1 - v[i]) + v[i - 1] * (1 - v[i - 1])) / paths);
      if (v[i] > v[i - 1] + 3.0 * se) return false;
    }
    return true;
  };
  const bool small = last[2] < 0.05 && left[2] < 0.05 && right[2] < 0.05;
  const bool mono = monotone(last) && monotone(left) && monotone(right);
  Outcome o;
  o.pass = small && mono;
  auto seq = [](const std::vector<double>& v) { return g(v[0], 4) + "," + g(v[1], 4) + "," + g(v[2], 4); };
  o.detail = "N=512,1024,2048: P[max A>=50] " + seq(last) + "; P[L_A>=50] " + seq(left) + "; P[N-R_A>=50] " +
             seq(right) + (small ? "" : "; above 0.05") + (mono ? "" : "; increasing in N");
  return o;
}

// Subcritical scaling limits: meander (free) and excursion (constrained).
Outcome criterion10() {
  Clock clock;
  const double beta = critical_beta(build_pq(kP, 1)) - 0.15;
  const long N = 2048, N_ref = 4096, paths = 100000;
  const std::vector<double> ts{0.25, 0.5, 1.0};
  SampleOptions so;
  so.marginal_times = marginal_indices(ts, N);
  SampleOptions ro;
  ro.marginal_times = marginal_indices(ts, N_ref);
  const SampleSet free_s = sample_pq(kP, 1, beta, N, Boundary::Free, paths, 31, so);
  const SampleSet meander = reference_sampler(ReferenceKind::Meander, N_ref, paths, 32, ro);
  const ScalingResult rf = scaling_test(free_s, 1.0, meander, 2.0, ts, 33);

  SampleOptions so_half;
  so_half.marginal_times = marginal_indices({0.5}, N);
  SampleOptions ro_half;
  ro_half.marginal_times = marginal_indices({0.5}, N_ref);
  const SampleSet con_s = sample_pq(kP, 1, beta, N, Boundary::Constrained, paths, 34, so_half);
  const SampleSet excursion = reference_sampler(ReferenceKind::Excursion, N_ref, paths, 35, ro_half);
  const ScalingResult rc = scaling_test(con_s, 1.0, excursion, 2.0, {0.5}, 36);
  const double t = clock.seconds();

  double worst = rc.ks[0];
  for (double k : rf.ks) worst = std::max(worst, k);
  Outcome o;
  o.pass = worst < 0.03 && t < 300.0;
  o.detail = "free KS " + g(rf.ks[0], 3) + "," + g(rf.ks[1], 3) + "," + g(rf.ks[2], 3) + " at t=.25,.5,1; constrained KS " +
             g(rc.ks[0], 3) + " at t=.5; " + g(t, 3) + " s";
  return o;
}

// Supercritical collapse of sup_t S^N_t.
Outcome criterion11() {
  const double beta = critical_beta(build_pq(kP, 1)) + 0.5;
  const long paths = 20000;
  const double m512 = sup_quantiles(sample_pq(kP, 1, beta, 512, Boundary::Free, paths, 41), {0.5}).sup_quantiles[0];
  const double m2048 = sup_quantiles(sample_pq(kP, 1, beta, 2048, Boundary::Free, paths, 42), {0.5}).sup_quantiles[0];
  Outcome o;
  o.pass = m2048 < 0.6 * m512;
  o.detail = "median sup N=512 " + g(m512, 4) + ", N=2048 " + g(m2048, 4) + ", ratio " + g(m2048 / m512, 4);
  return o;
}

// Brute-force enumeration of all paths with steps -1, 0, +1.
struct Enumeration {
  std::map<std::vector<double>, double> weight;  // heights S_1..S_N -> Boltzmann weight
  double total = 0.0;
};

Enumeration enumerate(double p, long a, double beta, long N, Boundary b) {
  Enumeration e;
  long count = 1;
  for (long i = 0; i < N; ++i) count *= 3;
  for (long code = 0; code < count; ++code) {
    long c = code;
    long h = 0;
    double w = 1.0;
    std::vector<double> path;
    bool ok = true;
    for (long i = 0; i < N && ok; ++i) {
      const long step = c % 3 - 1;
      c /= 3;
      h += step;
      w *= step == 0 ? 1.0 - 2.0 * p : p;
      if (h < 0) ok = false;
      if (h <= a) w *= std::exp(beta);
      path.push_back(static_cast<double>(h));
    }
    if (!ok) continue;
    if (b == Boundary::Constrained && h > a) continue;
    e.weight[path] = w;
    e.total += w;
  }
  return e;
}

Outcome criterion12() {
  Outcome o;
  std::ostringstream d;
  const long a = 1;
  // sampler frequencies within 4 sigma multinomial bands
  long bands = 0, outside = 0;
  for (double beta : {-0.5, 0.7})
    for (Boundary b : {Boundary::Free, Boundary::Constrained})
      for (long N = 1; N <= 8; ++N) {
        const Enumeration e = enumerate(kP, a, beta, N, b);
        SampleOptions so;
        so.keep_paths = true;
        const long n = 100000;
        const SampleSet s = sample_pq(kP, a, beta, N, b, n, 1000 + N + (b == Boundary::Free ? 0 : 50), so);
        std::map<std::vector<double>, long> counts;
        for (const auto& p : s.paths) {
          if (!e.weight.count(p.heights)) {
            ++outside;
            continue;
          }
          ++counts[p.heights];
        }
        for (const auto& [path, w] : e.weight) {
          const double pi = w / e.total;
          const double expected = n * pi;
          const double band = 4.0 * std::sqrt(n * pi * (1.0 - pi));
          ++bands;
          if (std::abs(counts[path] - expected) > band + 1e-9) ++outside;
        }
      }
  d << "sampler: " << outside << " of " << bands << " path frequencies outside 4 sigma; ";
  const bool sampler_ok = outside == 0;

  // Green recursion against the direct sum of convolution powers
  double green_err = 0.0;
  const ReturnKernel k = build_pq(kP, 1);
  const TiltedKernel t = build_tilted(k, critical_beta(k) + 0.5);
  for (const RenewalKernel& rk : {RenewalKernel::from_tilted(t), hand_kernel()}) {
    const long top = 30;
    const std::size_t m = rk.m;
    const GreenSeries gs = green_function(rk, top, {false, 0});
    // conv[N][j] = K^{*k}(0 -> j, N) for the current k
    std::vector<std::vector<double>> conv(top + 1, std::vector<double>(m, 0.0)), sum = conv;
    for (long N = 1; N <= top; ++N)
      for (std::size_t j = 0; j < m; ++j) conv[N][j] = rk.K(0, j, N);
    for (long power = 1; power <= top; ++power) {
      for (long N = 1; N <= top; ++N)
        for (std::size_t j = 0; j < m; ++j) sum[N][j] += conv[N][j];
      std::vector<std::vector<double>> next(top + 1, std::vector<double>(m, 0.0));
      for (long N = 1; N <= top; ++N)
        for (long u = 1; u < N; ++u)
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) next[N][j] += conv[u][i] * rk.K(i, j, N - u);
      conv = std::move(next);
    }
    for (long N = 1; N <= top; ++N)
      for (std::size_t j = 0; j < m; ++j) green_err = std::max(green_err, std::abs(gs.Z[N][j] - sum[N][j]));
  }
  d << "Green vs convolution powers " << g(green_err, 3) << "; ";
  const bool green_ok = green_err <= 1e-12;

  // constrained partition function equals the free enumeration restricted to S_N in [0, a]
  double cond_err = 0.0;
  for (double beta : {-0.5, 0.7})
    for (long N = 1; N <= 8; ++N) {
      const Enumeration fe = enumerate(kP, a, beta, N, Boundary::Free);
      double restricted = 0.0;
      for (const auto& [path, w] : fe.weight)
        if (path.back() <= a) restricted += w;
      const double dp = std::exp(transfer_matrix_log_z(kP, a, beta, N, Boundary::Constrained));
      const double sampler = std::exp(LatticeSampler(kP, a, beta, N, Boundary::Constrained).log_partition());
      cond_err = std::max({cond_err, std::abs(dp / restricted - 1.0), std::abs(sampler / restricted - 1.0)});
    }
  d << "constrained vs conditioned free " << g(cond_err, 3);
  const bool cond_ok = cond_err <= 1e-12;
  o.pass = sampler_ok && green_ok && cond_ok;
  o.detail = d.str();
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-12"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion")->check(CLI::Range(1, 12));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3,  criterion4,
                                                           criterion5, criterion6, criterion7,  criterion8,
                                                           criterion9, criterion10, criterion11, criterion12};
  bool all = true;
  for (int i = 1; i <= 12; ++i) {
    if (only != 0 && i != only) continue;
    Outcome o;
    try {
      o = criteria[i - 1]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    std::printf("criterion %02d %s %s\n", i, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
