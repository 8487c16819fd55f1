#include "cli.hpp"

#include "stripwet/increments.hpp"
#include "stripwet/ladder.hpp"
#include "stripwet/path_sampler.hpp"
#include "stripwet/pq_exact.hpp"
#include "stripwet/renewal.hpp"
#include "stripwet/return_kernel.hpp"
#include "stripwet/spectral.hpp"
#include "stripwet/stats.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace stripwet::cli {

using nlohmann::json;

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

namespace {

struct Invalid : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// JSON numbers carry the same 12 significant digits as the CSV files.
json num(double x) {
  if (!std::isfinite(x)) return nullptr;
  return std::stod(fmt(x));
}

json num_array(const std::vector<double>& xs) {
  json a = json::array();
  for (double x : xs) a.push_back(num(x));
  return a;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << text;
  f.close();
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

// key=value lines become --key=value tokens placed right after the
// subcommand, so that flags on the command line take precedence.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw Invalid("--config needs a file");
      file = args[i + 1];
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
      args.erase(args.begin() + static_cast<long>(i));
      break;
    }
  }
  if (file.empty()) return args;
  std::ifstream in(file);
  if (!in) throw Invalid("cannot read config file '" + file + "'");
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  std::vector<std::string> tokens;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Invalid(file + ":" + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw Invalid(file + ":" + std::to_string(line_no) + ": empty key");
    tokens.push_back("--" + key + "=" + value);
  }
  const std::size_t at = !args.empty() && args[0].rfind('-', 0) != 0 ? 1 : 0;
  args.insert(args.begin() + static_cast<long>(at), tokens.begin(), tokens.end());
  return args;
}

struct Common {
  std::string law;
  double a = 1.0;
  unsigned threads = 1;
  int nodes = 16;
  long nmax = 0;
  double truncation = 0.0;
  double grid_step = 0.0;
  std::string out;

  KernelOptions kernel_options() const {
    KernelOptions o;
    o.nodes = nodes;
    o.n_max = nmax;
    o.truncation_height = truncation;
    o.grid_step = grid_step;
    o.threads = threads;
    return o;
  }
  IncrementLaw increment_law() const { return IncrementLaw::parse(law); }
};

void add_law(CLI::App* app, Common& c, bool with_a = true) {
  app->add_option("--law", c.law, "Step law: pq:p=0.3, gauss:sigma=1.0 or unif:hw=1.0")->required();
  if (with_a) app->add_option("--a", c.a, "Strip width");
  app->add_option("--nodes", c.nodes, "Gauss-Legendre strip nodes (continuous laws)");
  app->add_option("--nmax", c.nmax, "Tabulated return times (0: 8192 lattice, 512 otherwise)");
  app->add_option("--truncation", c.truncation, "Height truncation of the excursion grid (0: automatic)");
  app->add_option("--grid-step", c.grid_step, "Excursion grid spacing (0: sigma/5)");
}

void add_threads(CLI::App* app, Common& c) { app->add_option("--threads", c.threads, "Worker threads"); }

struct BetaChoice {
  std::optional<double> beta;
  std::optional<double> offset;

  void add(CLI::App* app) {
    auto* b = app->add_option("--beta", beta, "Pinning reward");
    auto* o = app->add_option("--beta-offset", offset, "Pinning reward relative to the critical point");
    b->excludes(o);
  }
  double resolve(const ReturnKernel& kernel) const {
    if (beta) return *beta;
    if (offset) return critical_beta(kernel) + *offset;
    throw Invalid("one of --beta or --beta-offset is required");
  }
  void require() const {
    if (!beta && !offset) throw Invalid("one of --beta or --beta-offset is required");
  }
};

Boundary parse_boundary(const std::string& s) {
  if (s == "free") return Boundary::Free;
  if (s == "constrained") return Boundary::Constrained;
  throw Invalid("boundary must be free or constrained");
}

long lattice_width(double a) {
  if (!(a >= 0.0) || a != std::floor(a)) throw Invalid("the lattice needs an integer strip width");
  return static_cast<long>(a);
}

struct PathRun {
  Common c;
  BetaChoice beta;
  long N = 1024;
  long paths = 10000;
  std::string boundary = "free";
  std::uint64_t seed = 0;

  void add(CLI::App* app) {
    add_law(app, c);
    add_threads(app, c);
    beta.add(app);
    app->add_option("--N", N, "Path length");
    app->add_option("--paths", paths, "Number of sampled paths");
    app->add_option("--boundary", boundary, "free or constrained")->check(CLI::IsMember({"free", "constrained"}));
    app->add_option("--seed", seed, "Random seed")->required();
  }

  /// Samples with the given marginal times; also reports the resolved beta
  /// and the critical point.
  SampleSet sample(const std::vector<long>& marginals, bool keep, double& beta_out, double& beta_c) const {
    beta.require();
    const IncrementLaw law = c.increment_law();
    const KernelOptions ko = c.kernel_options();
    const ReturnKernel kernel = cached_kernel(law, c.a, ko);
    beta_c = critical_beta(kernel);
    beta_out = beta.resolve(kernel);
    SampleOptions so;
    so.marginal_times = marginals;
    so.keep_paths = keep;
    so.threads = c.threads;
    const Boundary b = parse_boundary(boundary);
    if (law.is_lattice()) return sample_pq(law.p(), lattice_width(c.a), beta_out, N, b, paths, seed, so);
    ContinuousSampleOptions co;
    co.base = so;
    co.kernel = ko;
    return sample_continuous(law, c.a, beta_out, N, b, paths, seed, co);
  }
};

std::vector<double> parse_grid(const std::string& spec, bool log_spacing) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 3) throw Invalid("--beta-grid expects lo:hi:n");
  double lo, hi;
  long n;
  try {
    lo = std::stod(parts[0]);
    hi = std::stod(parts[1]);
    n = std::stol(parts[2]);
  } catch (const std::exception&) {
    throw Invalid("--beta-grid expects lo:hi:n");
  }
  if (n < 1) throw Invalid("--beta-grid needs n >= 1");
  if (log_spacing && !(lo > 0.0 && hi > 0.0)) throw Invalid("log spacing needs a positive grid");
  std::vector<double> g;
  for (long i = 0; i < n; ++i) {
    const double s = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    g.push_back(log_spacing ? lo * std::pow(hi / lo, s) : lo + (hi - lo) * s);
  }
  return g;
}

RenewalKernel hand_kernel() {
  // two states: 0 -> (0 at n=3, .3), (1 at n=5, .7); 1 -> (0 at n=4, .5), (1 at n=7, .5)
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

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Strip wetting model: kernels, free energy, renewal checks and exact path sampling", "stripwet"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  app.footer("--config FILE reads key=value lines mirroring the flags; flags override the file.\n"
             "Exit codes: 0 success, 2 invalid configuration, 1 runtime failure.\n"
             "STRIPWET_CACHE_DIR caches return kernels between runs.");

  // kernel
  Common kc;
  auto* kernel_cmd = app.add_subcommand("kernel", "Tabulate the return kernel to a binary cache file");
  add_law(kernel_cmd, kc);
  add_threads(kernel_cmd, kc);
  kernel_cmd->add_option("--out", kc.out, "Output file")->required();

  // ladder
  Common lc;
  long ladder_samples = 100000;
  double ladder_xmax = 5.0;
  int ladder_grid = 201;
  std::uint64_t ladder_seed = 0;
  auto* ladder_cmd = app.add_subcommand(
      "ladder", "Ladder renewal functions and ladder-height tails.\n"
                "CSV columns: x,U,V,asc_tail,desc_tail,U_stderr,V_stderr,asc_stderr,desc_stderr");
  add_law(ladder_cmd, lc, false);
  add_threads(ladder_cmd, lc);
  ladder_cmd->add_option("--samples", ladder_samples, "Monte Carlo ladder epochs");
  ladder_cmd->add_option("--xmax", ladder_xmax, "Grid upper end");
  ladder_cmd->add_option("--grid", ladder_grid, "Grid points");
  ladder_cmd->add_option("--seed", ladder_seed, "Random seed")->required();
  ladder_cmd->add_option("--out", lc.out, "CSV file (default: standard output)");

  // free-energy
  Common fc;
  std::vector<double> fe_betas;
  std::string fe_grid;
  bool fe_relative = false;
  std::string fe_spacing = "linear";
  auto* fe_cmd = app.add_subcommand("free-energy",
                                    "Free energy F(beta) from delta(F) = e^{-beta}.\n"
                                    "CSV columns: beta,F,delta_residual");
  add_law(fe_cmd, fc);
  add_threads(fe_cmd, fc);
  auto* fe_beta_opt = fe_cmd->add_option("--beta", fe_betas, "Comma-separated beta values")->delimiter(',');
  auto* fe_grid_opt = fe_cmd->add_option("--beta-grid", fe_grid, "Grid lo:hi:n");
  fe_beta_opt->excludes(fe_grid_opt);
  fe_cmd->add_flag("--relative", fe_relative, "Grid values are offsets beta - beta_c");
  fe_cmd->add_option("--spacing", fe_spacing, "linear or log")->check(CLI::IsMember({"linear", "log"}));
  fe_cmd->add_option("--out", fc.out, "CSV file (default: standard output)");

  // critical-point
  Common cc;
  auto* cp_cmd = app.add_subcommand("critical-point",
                                    "beta_c = -log delta(0). JSON keys: beta_c, nodes, refinement_delta,\n"
                                    "the last being the change under doubled nodes (doubled n_max on the lattice)");
  add_law(cp_cmd, cc);
  add_threads(cp_cmd, cc);
  cp_cmd->add_option("--out", cc.out, "JSON file (default: standard output)");

  // simulate
  PathRun sim;
  std::vector<double> sim_marginals;
  std::string sim_paths_out;
  auto* sim_cmd = app.add_subcommand("simulate",
                                     "Exact path sampling. CSV columns: path,last_contact,L_A,R_A,contacts,\n"
                                     "sup,end_height, then S_<t> for each --marginals entry");
  sim.add(sim_cmd);
  sim_cmd->add_option("--marginals", sim_marginals, "Times t in [0,1] whose heights S_round(tN) are reported")
      ->delimiter(',');
  sim_cmd->add_option("--paths-out", sim_paths_out, "Binary dump of full paths");
  sim_cmd->add_option("--out", sim.c.out, "CSV file (default: standard output)");

  // scaling-test
  PathRun sc;
  std::vector<double> sc_t{0.25, 0.5, 1.0};
  std::string sc_reference;
  long sc_nref = 4096;
  long sc_ref_paths = 0;
  std::vector<double> sc_levels{0.5};
  auto* sc_cmd = app.add_subcommand(
      "scaling-test",
      "Rescaled marginals against the Brownian meander/excursion reference (subcritical) or\n"
      "quantiles of sup_t S^N_t (supercritical). JSON keys: t, ks, n_paths, regime,\n"
      "beta, beta_c, N, and for the supercritical regime sup_levels, sup_quantiles");
  sc.add(sc_cmd);
  sc_cmd->add_option("--t", sc_t, "Comma-separated times")->delimiter(',');
  sc_cmd->add_option("--reference", sc_reference, "meander or excursion (default from --boundary)")
      ->check(CLI::IsMember({"meander", "excursion"}));
  sc_cmd->add_option("--nref", sc_nref, "Reference walk length");
  sc_cmd->add_option("--ref-paths", sc_ref_paths, "Reference paths (default: --paths)");
  sc_cmd->add_option("--levels", sc_levels, "Quantile levels of the supremum")->delimiter(',');
  sc_cmd->add_option("--out", sc.c.out, "JSON file (default: standard output)");

  // contact-stats
  PathRun cs;
  std::vector<long> cs_L{10, 20, 50, 100};
  auto* cs_cmd = app.add_subcommand("contact-stats",
                                    "Tails of the contact set. CSV columns: L,p_last_contact,p_left,p_right\n"
                                    "(P[max A >= L], P[L_A >= L], P[N - R_A >= L])");
  cs.add(cs_cmd);
  cs_cmd->add_option("--L", cs_L, "Comma-separated levels")->delimiter(',');
  cs_cmd->add_option("--out", cs.c.out, "CSV file (default: standard output)");

  // renewal-check
  Common rc;
  BetaChoice rc_beta;
  bool rc_hand = false;
  std::vector<long> rc_j{100, 1000, 10000};
  long rc_chains = 100000;
  std::uint64_t rc_seed = 0;
  auto* rc_cmd = app.add_subcommand(
      "renewal-check",
      "Forward Markov renewal chains against mu/Xi. CSV columns: N,normalized,tv where N is\n"
      "the time j, normalized = Xi P[renewal at j] and tv the total variation distance");
  rc_cmd->add_option("--law", rc.law, "Step law of the tilted kernel");
  rc_cmd->add_option("--a", rc.a, "Strip width");
  rc_cmd->add_option("--nodes", rc.nodes, "Gauss-Legendre strip nodes (continuous laws)");
  rc_cmd->add_option("--nmax", rc.nmax, "Tabulated return times");
  add_threads(rc_cmd, rc);
  rc_beta.add(rc_cmd);
  rc_cmd->add_flag("--hand", rc_hand, "Use the two-state test kernel instead of a tilted kernel");
  rc_cmd->add_option("--j", rc_j, "Comma-separated times")->delimiter(',');
  rc_cmd->add_option("--chains", rc_chains, "Number of chains");
  rc_cmd->add_option("--seed", rc_seed, "Random seed")->required();
  rc_cmd->add_option("--out", rc.out, "CSV file (default: standard output)");

  // asymptotics
  Common ac;
  BetaChoice ac_beta;
  std::string ac_kind = "localized";
  std::vector<long> ac_N{1000, 2000};
  auto* as_cmd = app.add_subcommand(
      "asymptotics",
      "Normalized partition functions: Z^c e^{-FN} (localized), Z^c N^{3/2} (constrained),\n"
      "Z^f N^{1/2} (free). CSV columns: N,normalized,tv; tv is the Green-function distance\n"
      "to mu/C_beta in the localized regime and nan otherwise");
  add_law(as_cmd, ac);
  add_threads(as_cmd, ac);
  ac_beta.add(as_cmd);
  as_cmd->add_option("--kind", ac_kind, "localized, constrained or free")
      ->check(CLI::IsMember({"localized", "constrained", "free"}));
  as_cmd->add_option("--N", ac_N, "Comma-separated lengths")->delimiter(',');
  as_cmd->add_option("--out", ac.out, "CSV file (default: standard output)");

  // pq-exact
  double pe_p = 0.3;
  bool pe_json = false;
  std::string pe_out;
  auto* pe_cmd = app.add_subcommand("pq-exact", "Closed-form constants of the (p,q) walk");
  pe_cmd->add_option("--p", pe_p, "Step probability")->required();
  pe_cmd->add_flag("--json", pe_json, "JSON instead of key=value lines");
  pe_cmd->add_option("--out", pe_out, "Output file (default: standard output)");

  // pq-z
  double pz_p = 0.3;
  long pz_a = 1;
  double pz_beta = 0.0;
  long pz_N = 100;
  std::string pz_boundary = "constrained";
  auto* pz_cmd = app.add_subcommand("pq-z", "log Z of the (p,q) walk by transfer-matrix DP");
  pz_cmd->add_option("--p", pz_p, "Step probability")->required();
  pz_cmd->add_option("--a", pz_a, "Strip width");
  pz_cmd->add_option("--beta", pz_beta, "Pinning reward")->required();
  pz_cmd->add_option("--N", pz_N, "Length")->required();
  pz_cmd->add_option("--boundary", pz_boundary, "free or constrained")
      ->check(CLI::IsMember({"free", "constrained"}));

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  } catch (const Invalid& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*kernel_cmd) {
      const ReturnKernel k = build_kernel(kc.increment_law(), kc.a, kc.kernel_options());
      save_kernel(k, kc.out);
      out << "kernel " << k.law.to_string() << " a=" << fmt(k.a) << " nodes=" << k.n_nodes()
          << " n_max=" << k.n_max << " origin_return_mass=" << fmt(k.total_return_mass(k.origin))
          << " -> " << kc.out << "\n";
    } else if (*ladder_cmd) {
      LadderOptions lo;
      lo.grid_points = ladder_grid;
      lo.threads = lc.threads;
      const LadderTables t = estimate_ladder(lc.increment_law(), ladder_samples, ladder_xmax, ladder_seed, lo);
      auto at = [](const std::vector<double>& v, std::size_t i) { return i < v.size() ? v[i] : 0.0; };
      std::ostringstream csv;
      csv << "x,U,V,asc_tail,desc_tail,U_stderr,V_stderr,asc_stderr,desc_stderr\n";
      for (std::size_t i = 0; i < t.grid.size(); ++i)
        csv << fmt(t.grid[i]) << ',' << fmt(t.U[i]) << ',' << fmt(t.V[i]) << ',' << fmt(t.asc_tail[i]) << ','
            << fmt(t.desc_tail[i]) << ',' << fmt(at(t.U_stderr, i)) << ',' << fmt(at(t.V_stderr, i)) << ','
            << fmt(at(t.asc_stderr, i)) << ',' << fmt(at(t.desc_stderr, i)) << '\n';
      emit(lc.out, csv.str(), out);
      if (!lc.out.empty())
        out << "ladder " << lc.law << " samples=" << t.sample_count << " unresolved=" << t.unresolved
            << (t.exact ? " exact" : "") << " -> " << lc.out << "\n";
    } else if (*fe_cmd) {
      if (fe_betas.empty() && fe_grid.empty()) throw Invalid("one of --beta or --beta-grid is required");
      std::vector<double> grid = fe_grid.empty() ? fe_betas : parse_grid(fe_grid, fe_spacing == "log");
      const ReturnKernel k = cached_kernel(fc.increment_law(), fc.a, fc.kernel_options());
      const double bc = critical_beta(k);
      std::ostringstream csv;
      csv << "beta,F,delta_residual\n";
      for (double g : grid) {
        const double beta = fe_relative ? bc + g : g;
        const FreeEnergy fe = free_energy(k, beta);
        csv << fmt(beta) << ',' << fmt(fe.F) << ',' << fmt(fe.delta_residual) << '\n';
      }
      emit(fc.out, csv.str(), out);
      if (!fc.out.empty())
        out << "free-energy " << fc.law << " a=" << fmt(fc.a) << " beta_c=" << fmt(bc) << " rows=" << grid.size()
            << " -> " << fc.out << "\n";
    } else if (*cp_cmd) {
      const IncrementLaw law = cc.increment_law();
      KernelOptions ko = cc.kernel_options();
      const ReturnKernel k = cached_kernel(law, cc.a, ko);
      const double bc = critical_beta(k);
      if (law.is_lattice())
        ko.n_max = 2 * k.n_max;
      else
        ko.nodes *= 2;
      const double bc2 = critical_beta(cached_kernel(law, cc.a, ko));
      json j;
      j["beta_c"] = num(bc);
      j["nodes"] = k.n_nodes();
      j["refinement_delta"] = num(std::abs(bc2 - bc));
      j["law"] = law.to_string();
      j["a"] = num(cc.a);
      emit(cc.out, j.dump(2) + "\n", out);
      if (!cc.out.empty()) out << "critical-point " << cc.law << " beta_c=" << fmt(bc) << " -> " << cc.out << "\n";
    } else if (*sim_cmd) {
      const auto marginals = marginal_indices(sim_marginals, sim.N);
      double beta, bc;
      const SampleSet s = sim.sample(marginals, !sim_paths_out.empty(), beta, bc);
      std::ostringstream csv;
      csv << "path,last_contact,L_A,R_A,contacts,sup,end_height";
      for (double t : sim_marginals) csv << ",S_" << fmt(t);
      csv << '\n';
      double contacts = 0.0;
      for (std::size_t i = 0; i < s.summaries.size(); ++i) {
        const PathSummary& p = s.summaries[i];
        csv << i << ',' << p.last_contact << ',' << p.L_A << ',' << p.R_A << ',' << p.contacts << ',' << fmt(p.sup)
            << ',' << fmt(p.end_height);
        for (double m : p.marginals) csv << ',' << fmt(m);
        csv << '\n';
        contacts += static_cast<double>(p.contacts);
      }
      emit(sim.c.out, csv.str(), out);
      if (!sim_paths_out.empty()) save_paths(s, sim_paths_out);
      if (!sim.c.out.empty())
        out << "simulate " << sim.c.law << " N=" << sim.N << " paths=" << s.summaries.size() << " beta=" << fmt(beta)
            << " beta_c=" << fmt(bc) << " mean_contacts=" << fmt(contacts / static_cast<double>(s.summaries.size()))
            << " -> " << sim.c.out << "\n";
    } else if (*sc_cmd) {
      double beta, bc;
      const SampleSet s = sc.sample(marginal_indices(sc_t, sc.N), false, beta, bc);
      ScalingResult r;
      if (beta > bc) {
        r = sup_quantiles(s, sc_levels);
      } else {
        const bool excursion =
            sc_reference.empty() ? parse_boundary(sc.boundary) == Boundary::Constrained : sc_reference == "excursion";
        SampleOptions ro;
        ro.marginal_times = marginal_indices(sc_t, sc_nref);
        ro.threads = sc.c.threads;
        Rng streams(sc.seed, 1);
        const std::uint64_t ref_seed = streams();
        const std::uint64_t ks_seed = streams();
        const SampleSet ref = reference_sampler(excursion ? ReferenceKind::Excursion : ReferenceKind::Meander,
                                                sc_nref, sc_ref_paths > 0 ? sc_ref_paths : sc.paths, ref_seed, ro);
        const bool lattice = IncrementLaw::parse(sc.c.law).is_lattice();
        r = scaling_test(s, lattice ? 1.0 : 0.0, ref, 2.0, sc_t, ks_seed);
      }
      json j;
      j["t"] = num_array(r.t);
      j["ks"] = num_array(r.ks);
      j["n_paths"] = r.n_paths;
      j["regime"] = r.regime;
      j["beta"] = num(beta);
      j["beta_c"] = num(bc);
      j["N"] = sc.N;
      if (r.regime == "supercritical") {
        j["sup_levels"] = num_array(r.sup_levels);
        j["sup_quantiles"] = num_array(r.sup_quantiles);
      }
      emit(sc.c.out, j.dump(2) + "\n", out);
      if (!sc.c.out.empty()) {
        double worst = 0.0;
        for (double k : r.ks) worst = std::max(worst, k);
        out << "scaling-test " << r.regime << " N=" << sc.N << " paths=" << r.n_paths;
        if (r.regime == "supercritical" && !r.sup_quantiles.empty())
          out << " sup_q=" << fmt(r.sup_quantiles.front());
        else
          out << " max_ks=" << fmt(worst);
        out << " -> " << sc.c.out << "\n";
      }
    } else if (*cs_cmd) {
      double beta, bc;
      const SampleSet s = cs.sample({}, false, beta, bc);
      const auto rows = contact_stats(s, cs_L);
      std::ostringstream csv;
      csv << "L,p_last_contact,p_left,p_right\n";
      for (const auto& r : rows)
        csv << r.L << ',' << fmt(r.p_last_contact) << ',' << fmt(r.p_left) << ',' << fmt(r.p_right) << '\n';
      emit(cs.c.out, csv.str(), out);
      if (!cs.c.out.empty())
        out << "contact-stats " << cs.c.law << " N=" << cs.N << " paths=" << s.summaries.size()
            << " beta=" << fmt(beta) << " -> " << cs.c.out << "\n";
    } else if (*rc_cmd) {
      RenewalKernel k;
      std::vector<double> mu;
      double xi;
      RenewalStart start{false, 0};
      std::optional<TiltedKernel> tilted;
      if (rc_hand) {
        if (!rc.law.empty()) throw Invalid("--hand and --law are exclusive");
        k = hand_kernel();
        mu = {5.0 / 12.0, 7.0 / 12.0};
        xi = 121.0 / 24.0;
      } else {
        if (rc.law.empty()) throw Invalid("--law (or --hand) is required");
        rc_beta.require();
        const ReturnKernel kernel = cached_kernel(rc.increment_law(), rc.a, rc.kernel_options());
        tilted = build_tilted(kernel, rc_beta.resolve(kernel));
        if (!tilted->localized) throw Invalid("renewal-check needs a localized beta (beta > beta_c)");
        k = RenewalKernel::from_tilted(*tilted);
        mu = tilted->mu;
        xi = tilted->C_beta;
        start = {k.has_init(), 0};
      }
      const auto rows = forward_chain_tv(k, mu, xi, rc_j, rc_chains, start, rc_seed, rc.threads);
      std::ostringstream csv;
      csv << "N,normalized,tv\n";
      double worst = 0.0;
      for (const auto& r : rows) {
        csv << r.j << ',' << fmt(r.renewal_prob * xi) << ',' << fmt(r.tv) << '\n';
        worst = std::max(worst, r.tv);
      }
      emit(rc.out, csv.str(), out);
      if (!rc.out.empty())
        out << "renewal-check " << (rc_hand ? std::string("hand") : rc.law) << " chains=" << rc_chains
            << " xi=" << fmt(xi) << " max_tv=" << fmt(worst) << " -> " << rc.out << "\n";
    } else if (*as_cmd) {
      ac_beta.require();
      const IncrementLaw law = ac.increment_law();
      const KernelOptions ko = ac.kernel_options();
      const ReturnKernel kernel = cached_kernel(law, ac.a, ko);
      const double beta = ac_beta.resolve(kernel);
      const AsymptoticKind kind = ac_kind == "localized"     ? AsymptoticKind::Localized
                                  : ac_kind == "constrained" ? AsymptoticKind::DelocConstrained
                                                             : AsymptoticKind::DelocFree;
      const auto rows = partition_asymptotics(kind, law, ac.a, beta, ac_N, ko);
      std::vector<double> tv(rows.size(), std::numeric_limits<double>::quiet_NaN());
      if (kind == AsymptoticKind::Localized && !ac_N.empty()) {
        const TiltedKernel t = build_tilted(kernel, beta);
        if (!t.localized) throw Invalid("the localized kind needs beta > beta_c");
        const RenewalKernel rk = RenewalKernel::from_tilted(t);
        const long top = *std::max_element(ac_N.begin(), ac_N.end());
        const GreenSeries g = green_function(rk, top, {rk.has_init(), 0});
        std::vector<double> target(t.m);
        for (std::size_t j = 0; j < t.m; ++j) target[j] = t.mu[j] / t.C_beta;
        for (std::size_t i = 0; i < rows.size(); ++i) tv[i] = tv_distance(g.Z[rows[i].N], target);
      }
      std::ostringstream csv;
      csv << "N,normalized,tv\n";
      for (std::size_t i = 0; i < rows.size(); ++i)
        csv << rows[i].N << ',' << fmt(rows[i].normalized) << ',' << fmt(tv[i]) << '\n';
      emit(ac.out, csv.str(), out);
      if (!ac.out.empty())
        out << "asymptotics " << ac_kind << " " << ac.law << " beta=" << fmt(beta) << " rows=" << rows.size()
            << " -> " << ac.out << "\n";
    } else if (*pe_cmd) {
      const PQConstants c = pq_constants(pe_p);
      const std::vector<std::pair<std::string, double>> fields = {
          {"p", c.p},           {"q", c.q},       {"beta_c_0", c.beta_c_0}, {"beta_c_1", c.beta_c_1},
          {"beta_c_2", c.beta_c_2}, {"r", c.r},   {"c_K", c.c_K},           {"sumK", c.sumK},
          {"C_1", c.C_1},       {"Delta_q", c.Delta_q}};
      std::ostringstream text;
      if (pe_json) {
        json j = json::object();
        for (const auto& [key, v] : fields) j[key] = num(v);
        j["cubic"] = num_array({c.cubic.begin(), c.cubic.end()});
        j["rho_M1"] = num(spectral_radius_Ma(pe_p, 1));
        j["rho_M2"] = num(spectral_radius_Ma(pe_p, 2));
        text << j.dump(2) << "\n";
      } else {
        for (const auto& [key, v] : fields) text << key << '=' << fmt(v) << '\n';
        text << "cubic=" << fmt(c.cubic[0]) << ',' << fmt(c.cubic[1]) << ',' << fmt(c.cubic[2]) << ','
             << fmt(c.cubic[3]) << '\n';
      }
      emit(pe_out, text.str(), out);
      if (!pe_out.empty()) out << "pq-exact p=" << fmt(pe_p) << " -> " << pe_out << "\n";
    } else if (*pz_cmd) {
      const double lz = transfer_matrix_log_z(pz_p, static_cast<int>(pz_a), pz_beta, pz_N, parse_boundary(pz_boundary));
      out << fmt(lz) << "\n";
    }
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace stripwet::cli
