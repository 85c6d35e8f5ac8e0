// Batch front-end for the dHYM laboratory: continuity-method solves,
// verification suites, and plot-ready exports of run artifacts.
//
// Exit codes: 0 success, 1 assertion/violation or nonconvergence,
// 2 usage, configuration, or precondition errors.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "dhym/audit.hpp"
#include "dhym/config.hpp"
#include "dhym/mollify.hpp"
#include "dhym/solver.hpp"

namespace fs = std::filesystem;
using namespace dhym;
using namespace dhym::torus;
using dhym::audit::SuiteOptions;
using dhym::audit::SuiteReport;

namespace {

std::map<std::string, std::string> parse_kv(const std::vector<std::string>& toks,
                                            std::size_t from) {
  std::map<std::string, std::string> out;
  for (std::size_t i = from; i < toks.size(); ++i) {
    auto eq = toks[i].find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got " + toks[i]);
    out[toks[i].substr(0, eq)] = toks[i].substr(eq + 1);
  }
  return out;
}

double kv_num(const std::map<std::string, std::string>& kv, const std::string& k, double dflt) {
  auto it = kv.find(k);
  return it == kv.end() ? dflt : std::stod(it->second);
}

// ---------------------------------------------------------------------------
// solve

PeriodicField star_field(const std::string& id, double amp, const std::vector<int>& dims) {
  const int d = static_cast<int>(dims.size());
  if (id == "trig") {
    if (d == 1)
      return field_from(dims, [&](const std::vector<double>& c) {
        return amp * (std::cos(c[0]) + 0.3 * std::sin(2 * c[0]));
      });
    return field_from(dims, [&](const std::vector<double>& c) {
      return amp * (std::cos(c[0]) + 0.8 * std::sin(c[1]) + 0.35 * std::cos(c[0] + c[1]));
    });
  }
  if (id == "trig2") {
    if (d == 1)
      return field_from(dims, [&](const std::vector<double>& c) {
        return amp * (std::sin(c[0]) + 0.5 * std::cos(3 * c[0]));
      });
    return field_from(dims, [&](const std::vector<double>& c) {
      return amp * (std::sin(c[0]) * std::cos(c[1]) + 0.4 * std::cos(2 * c[0]));
    });
  }
  throw ConfigError("unknown field expression id: " + id);
}

/// Class-compatible mean of the user twist for a background.
double required_user_mean(const FlatBackground& bg) {
  double m = expected_internal_mean(bg);
  if (bg.n == 3) m *= 2.0 * bg.phase.csc() * bg.phase.csc();
  return m;
}

struct TwistSetup {
  PeriodicField f;
  bool manufactured = false;
  PeriodicField phi_star;  // when manufactured
};

TwistSetup build_twist(const std::vector<std::string>& toks, const FlatBackground& bg,
                       const std::vector<int>& dims) {
  if (toks.empty()) throw ConfigError("twist specification is empty");
  TwistSetup out;
  const std::string kind = toks[0];
  if (kind == "zero") {
    out.f = PeriodicField::zeros(dims);
  } else if (kind == "manufactured") {
    if (toks.size() < 2) throw ConfigError("manufactured twist wants an expression id");
    auto kv = parse_kv(toks, 2);
    out.manufactured = true;
    out.phi_star = star_field(toks[1], kv_num(kv, "amp", 0.2), dims);
    out.phi_star.subtract_mean();
    out.f = manufactured_twist(out.phi_star, bg);
  } else if (kind == "expr") {
    if (toks.size() < 2) throw ConfigError("expr twist wants an expression id");
    auto kv = parse_kv(toks, 2);
    out.f = star_field(toks[1], kv_num(kv, "amp", 0.1), dims);
    out.f.subtract_mean();  // centered on the compatible class mean
    double m = required_user_mean(bg);
    for (double& x : out.f.v) x += m;
  } else if (kind == "csv") {
    if (toks.size() < 2) throw ConfigError("csv twist wants a path");
    out.f = read_field_csv(toks[1]);
    if (out.f.dims != dims) throw ConfigError("twist grid does not match the solve grid");
  } else if (kind == "concentration") {
    auto kv = parse_kv(toks, 1);
    double delta_c = kv_num(kv, "delta", 0.02);
    double tparam = kv_num(kv, "t", 0.2);
    auto psi = field_from(dims, [&](const std::vector<double>& c) {
      double s = std::sin(0.5 * c[0]);
      return std::log(s * s + tparam * tparam);
    });
    out.f = concentration_twist(psi, delta_c, bg).f;
  } else {
    throw ConfigError("unknown twist kind: " + kind);
  }
  return out;
}

void write_path_log(const std::vector<PathEntry>& path, const std::string& file) {
  std::ofstream o(file);
  o << std::setprecision(17);
  o << "t,d_t,residual,cone_margin,newton_iters\n";
  for (const auto& e : path)
    o << e.t << "," << e.d_t << "," << e.residual << "," << e.cone_margin << ","
      << e.newton_iters << "\n";
}

int cmd_solve(const std::string& cfg_path) {
  Config cfg = Config::load(cfg_path);
  if (cfg.has("mode") && cfg.str("mode") != "solve")
    throw ConfigError("config mode is not 'solve'");
  const int n = static_cast<int>(cfg.integer("n", 0));
  PhaseSpec phase = cfg.has("Theta") ? PhaseSpec(cfg.num("theta"), cfg.num("Theta"))
                                     : PhaseSpec(cfg.num("theta"));
  ActiveCoords active;
  for (const auto& t : cfg.tokens("active")) active.coords.push_back(parse_real_coord(t));
  auto grid_nums = cfg.numbers("grid");
  std::vector<int> dims;
  for (double g : grid_nums) dims.push_back(static_cast<int>(g));
  if (dims.size() != active.coords.size())
    throw ConfigError("grid and active coordinate counts differ");
  FlatBackground bg(n, cfg.matrix("chi0", n), cfg.matrix("H0", n), phase, active);

  SolverConfig scfg;
  scfg.newton_tol = cfg.num("newton_tol", scfg.newton_tol);
  scfg.t_step_init = cfg.num("t_step_init", scfg.t_step_init);
  scfg.t_step_min = cfg.num("t_step_min", scfg.t_step_min);
  scfg.t_step_max = cfg.num("t_step_max", scfg.t_step_max);
  scfg.max_newton = static_cast<int>(cfg.integer("max_newton", scfg.max_newton));
  scfg.t0_ramp_steps = static_cast<int>(cfg.integer("t0_ramp_steps", scfg.t0_ramp_steps));
  scfg.compat_tol = cfg.num("compat_tol", scfg.compat_tol);

  fs::path out_dir = cfg.str("out_dir", ".");
  fs::create_directories(out_dir);

  std::vector<int> sweep;
  if (cfg.has("grid_sweep"))
    for (double g : cfg.numbers("grid_sweep")) sweep.push_back(static_cast<int>(g));

  auto run_once = [&](const std::vector<int>& run_dims, double* sup_err) -> SolveReport {
    TwistSetup tw = build_twist(cfg.tokens("twist"), bg, run_dims);
    write_field_csv(tw.f, active, (out_dir / "twist.csv").string());
    SolveReport rep = continuity_run(tw.f, bg, scfg);
    if (rep.converged && tw.manufactured && sup_err) {
      double e = 0.0;
      for (std::size_t p = 0; p < rep.phi.size(); ++p)
        e = std::max(e, std::abs(rep.phi.v[p] - tw.phi_star.v[p]));
      *sup_err = e;
    }
    return rep;
  };

  SolveReport rep;
  std::vector<std::pair<int, double>> errors;
  if (!sweep.empty()) {
    for (int N : sweep) {
      std::vector<int> rd(dims.size(), N);
      double err = -1.0;
      rep = run_once(rd, &err);
      if (!rep.converged) break;
      errors.push_back({N, err});
    }
  } else {
    double err = -1.0;
    rep = run_once(dims, &err);
    if (err >= 0.0) errors.push_back({dims[0], err});
  }

  if (!errors.empty()) {
    std::ofstream o(out_dir / "error_table.csv");
    o << std::setprecision(17) << "grid,sup_error\n";
    for (auto& [N, e] : errors) o << N << "," << e << "\n";
  }
  write_path_log(rep.path, (out_dir / "path_log.csv").string());
  if (rep.converged) {
    write_field_csv(rep.phi, active, (out_dir / "phi_final.csv").string());
    write_field_csv(rep.phase_sum, active, (out_dir / "phase_field.csv").string());
  }
  if (!rep.diagnostics.empty() || !rep.converged) {
    std::ofstream o(out_dir / "diagnostics.txt");
    o << (rep.converged ? "" : "solve did not converge\n") << rep.diagnostics;
  }
  bool ok = rep.converged && (!phase.Theta || rep.in_theta_Theta);
  std::cout << (rep.converged ? "converged" : "failed") << ", final residual "
            << rep.final_residual;
  if (phase.Theta) std::cout << ", phase interval " << (rep.in_theta_Theta ? "ok" : "violated");
  std::cout << "\n";
  for (auto& [N, e] : errors) std::cout << "grid " << N << ": sup error vs target " << e << "\n";
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// verify

std::vector<double> theta_sweep(int count, double lo = 0.1, double hi = pi - 0.1) {
  std::vector<double> t(count);
  for (int i = 0; i < count; ++i) t[i] = lo + (hi - lo) * (i + 0.5) / count;
  return t;
}

SuiteReport kernel_suite(const SuiteOptions& opt) {
  SuiteReport rep;
  rep.name = "kernel";
  rep.seed = opt.seed;
  for (int n = 1; n <= 3; ++n) {
    auto k = mollify::build_kernel(n);
    double gap = std::abs(mollify::kernel_normalization(k) - 1.0);
    ++rep.trials;
    rep.observe(1e-10 - gap, dhym::audit::violated(gap > 1e-10, opt));
    rep.note("a_" + std::to_string(n), k.a_n);
  }
  return rep;
}

SuiteReport lelong_suite(const SuiteOptions& opt) {
  SuiteReport rep;
  rep.name = "lelong";
  rep.seed = opt.seed;
  auto k = mollify::build_kernel(1);
  const double spacing = 1.25e-3, r = 0.44;
  auto pole = [&](double c, double clamp) {
    return sample_potential(1, 0.47, spacing, [&](const std::vector<double>& x) {
      return std::max(c * std::log(std::hypot(x[0], x[1])), clamp);
    });
  };
  for (double c : {1.0, 2.5}) {
    auto p = pole(c, -40.0);
    for (double delta : {0.1, 0.01}) {
      auto e = mollify::lelong_level(p, {0.0, 0.0}, delta, r);
      double gap = std::abs(e.nu_level - c);
      ++rep.trials;
      rep.observe(1e-3 * c - gap, dhym::audit::violated(gap > 1e-3 * c, opt));
    }
  }
  // both level inequalities across the model family
  std::vector<PotentialSample> models;
  models.push_back(pole(1.0, -4.0));
  models.push_back(pole(2.0, -8.0));
  models.push_back(sample_potential(1, 0.47, spacing, [](const std::vector<double>& x) {
    return 0.8 * (x[0] * x[0] + x[1] * x[1]) + 0.1 * x[1];
  }));
  for (const auto& p : models)
    for (double delta : {0.1, 0.03}) {
      auto ineq = mollify::lelong_inequalities(p, k, {0.0, 0.0}, delta, r, {1.0, 2.0, 4.0});
      ++rep.trials;
      bool ok = ineq.all_hold(1e-6);
      double worst = std::min(ineq.lower_margin_mollify, ineq.upper_margin_mollify);
      for (double v : ineq.lower_margin_scale) worst = std::min(worst, v);
      for (double v : ineq.upper_margin_scale) worst = std::min(worst, v);
      rep.observe(worst, dhym::audit::violated(!ok, opt));
    }
  return rep;
}

SuiteReport regmax_suite(const SuiteOptions& opt) {
  SuiteReport rep;
  rep.name = "regmax";
  rep.seed = opt.seed;
  Rng rng(opt.seed);
  for (long long i = 0; i < std::max<long long>(opt.trials, 1000); ++i) {
    double eta = rng.uniform(0.01, 1.0);
    double a = rng.uniform(-3, 3), b = rng.uniform(-3, 3);
    double m = mollify::regularized_max_scalar(a, b, eta);
    double mx = std::max(a, b);
    bool bad = m < mx - 1e-12 || m > mx + eta + 1e-12;
    if (std::abs(a - b) >= 2 * eta && std::abs(m - mx) > 1e-12) bad = true;
    if (std::abs(m - mollify::regularized_max_scalar(b, a, eta)) > 1e-13) bad = true;
    ++rep.trials;
    rep.observe(std::min(m - mx, mx + eta - m), dhym::audit::violated(bad, opt));
  }
  return rep;
}

using SuiteFn = std::function<std::vector<SuiteReport>(const Config&, const SuiteOptions&)>;

std::map<std::string, SuiteFn> suite_registry() {
  using dhym::audit::SuiteReport;
  std::map<std::string, SuiteFn> reg;
  reg["sinelem"] = [](const Config& c, const SuiteOptions& o) {
    return std::vector{dhym::audit::verify_sine_subsets(
        static_cast<int>(c.integer("sinelem.kmax", 4)), o)};
  };
  reg["perturb"] = [](const Config& c, const SuiteOptions& o) {
    std::vector<SuiteReport> out;
    int n = static_cast<int>(c.integer("perturb.n", 3));
    for (double theta : {pi / 3, pi / 2, 3 * pi / 4})
      for (double eps1 : {0.05, 0.2}) {
        auto b = dhym::audit::perturbation_budget(theta, eps1, n);
        auto r = dhym::audit::verify_perturbation(b, o);
        std::ostringstream nm;
        nm << "perturb[theta=" << theta << ",eps1=" << eps1 << "]";
        r.name = nm.str();
        out.push_back(std::move(r));
      }
    return out;
  };
  reg["boundconst"] = [](const Config& c, const SuiteOptions& o) {
    std::vector<SuiteReport> out;
    double delta = c.num("boundconst.delta", 0.25);
    for (double theta : {pi / 3, pi / 2, 2.2}) {
      auto r = dhym::audit::verify_bound_constants(theta, delta, 3, o);
      r.name = "boundconst[theta=" + std::to_string(theta) + "]";
      out.push_back(std::move(r));
    }
    return out;
  };
  reg["discpos"] = [](const Config& c, const SuiteOptions& o) {
    std::vector<SuiteReport> out;
    int count = static_cast<int>(c.integer("discpos.theta_count", 20));
    for (double theta : theta_sweep(count)) {
      auto r = dhym::audit::verify_g_positive(theta, o);
      std::ostringstream nm;
      nm << "discpos[theta=" << theta << "]";
      r.name = nm.str();
      out.push_back(std::move(r));
    }
    return out;
  };
  reg["quadmin"] = [](const Config& c, const SuiteOptions& o) {
    std::vector<SuiteReport> out;
    for (double theta : {1.1, pi / 2, 2.0}) {
      auto r = dhym::audit::verify_quadratic_minimum(theta, o, c.num("quadmin.fmax", 2.0));
      r.name = "quadmin[theta=" + std::to_string(theta) + "]";
      out.push_back(std::move(r));
    }
    return out;
  };
  reg["numbound"] = [](const Config& c, const SuiteOptions& o) {
    return std::vector{dhym::audit::verify_numerator_bound(c.num("numbound.theta", 1.2), o)};
  };
  reg["sumbound"] = [](const Config& c, const SuiteOptions& o) {
    std::vector<SuiteReport> out;
    double delta = c.num("sumbound.delta", 0.1);
    for (double theta : {1.0, pi / 2, 2.0}) {
      auto r = dhym::audit::verify_sum_bound(theta, delta, o);
      r.name = "sumbound[theta=" + std::to_string(theta) + "]";
      out.push_back(std::move(r));
    }
    return out;
  };
  reg["degen"] = [](const Config& c, const SuiteOptions& o) {
    return std::vector{dhym::audit::verify_degenerate_cone(
        c.num("degen.theta", 1.1), static_cast<int>(c.integer("degen.m", 2)),
        c.num("degen.A", 2.0), c.num("degen.a", 0.5), c.num("degen.N", 4.0), o)};
  };
  reg["phaselift"] = [](const Config&, const SuiteOptions& o) {
    std::vector<SuiteReport> out;
    for (auto [theta, Theta] : {std::pair{pi / 2, 3 * pi / 4}, std::pair{1.9, 2.6}})
      for (int n : {2, 3}) {
        auto r = dhym::audit::verify_phase_lift(theta, Theta, n, o);
        std::ostringstream nm;
        nm << "phaselift[theta=" << theta << ",n=" << n << "]";
        r.name = nm.str();
        out.push_back(std::move(r));
      }
    return out;
  };
  reg["coneeq"] = [](const Config& c, const SuiteOptions& o) {
    std::vector<SuiteReport> out;
    int thetas = static_cast<int>(c.integer("coneeq.theta_count", 10));
    for (int n : {2, 3}) {
      auto r = dhym::audit::verify_cone_equivalence(n, thetas, o);
      r.name = "coneeq[n=" + std::to_string(n) + "]";
      out.push_back(std::move(r));
    }
    return out;
  };
  reg["binom"] = [](const Config&, const SuiteOptions& o) {
    return std::vector{dhym::audit::verify_binomial_identities(o)};
  };
  reg["kernel"] = [](const Config&, const SuiteOptions& o) {
    return std::vector{kernel_suite(o)};
  };
  reg["lelong"] = [](const Config&, const SuiteOptions& o) {
    return std::vector{lelong_suite(o)};
  };
  reg["regmax"] = [](const Config&, const SuiteOptions& o) {
    return std::vector{regmax_suite(o)};
  };
  return reg;
}

int cmd_verify(const std::string& cfg_path, std::vector<std::string> suites, bool negate) {
  Config cfg = Config::load(cfg_path);
  if (cfg.has("mode") && cfg.str("mode") != "verify")
    throw ConfigError("config mode is not 'verify'");
  if (suites.empty() && cfg.has("suites")) suites = cfg.tokens("suites");
  auto reg = suite_registry();
  if (suites.empty())
    for (auto& [k, v] : reg) suites.push_back(k);
  SuiteOptions opt;
  opt.trials = cfg.integer("trials", 10000);
  opt.seed = static_cast<uint64_t>(cfg.integer("seed", 42));
  opt.negate = negate;

  std::vector<SuiteReport> rows;
  for (const auto& s : suites) {
    auto it = reg.find(s);
    if (it == reg.end()) throw ConfigError("unknown suite name: " + s);
    auto part = it->second(cfg, opt);
    rows.insert(rows.end(), part.begin(), part.end());
  }

  fs::path out = cfg.str("out", "verify_report.csv");
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream o(out);
  o << std::setprecision(17);
  o << "suite,trials,violations,worst_margin,seed,extras\n";
  long long total_violations = 0;
  for (const auto& r : rows) {
    o << r.name << "," << r.trials << "," << r.violations << "," << r.worst_margin << ","
      << r.seed << ",";
    for (std::size_t i = 0; i < r.extras.size(); ++i)
      o << (i ? ";" : "") << r.extras[i].first << "=" << r.extras[i].second;
    o << "\n";
    std::cout << std::left << std::setw(34) << r.name << " trials " << std::setw(8) << r.trials
              << " violations " << r.violations << " worst margin " << r.worst_margin << "\n";
    if (!r.reported_only) total_violations += r.violations;
  }
  std::cout << (total_violations == 0 ? "all suites clean" : "violations found") << ", report "
            << out.string() << "\n";
  return total_violations == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// report

int cmd_report(const std::string& dir_s) {
  fs::path dir(dir_s);
  if (!fs::exists(dir)) throw ConfigError("artifact directory does not exist: " + dir_s);
  int produced = 0;

  if (fs::exists(dir / "path_log.csv")) {
    std::ifstream in(dir / "path_log.csv");
    std::string line;
    std::getline(in, line);  // header
    std::ofstream r1(dir / "residual_vs_t.dat"), r2(dir / "cone_margin_vs_t.dat");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream is(line);
      double t, dt, res, margin;
      int iters;
      is >> t >> dt >> res >> margin >> iters;
      r1 << t << " " << res << "\n";
      r2 << t << " " << margin << "\n";
    }
    produced += 2;
  }
  if (fs::exists(dir / "error_table.csv")) {
    std::ifstream in(dir / "error_table.csv");
    std::string line;
    std::getline(in, line);
    std::ofstream o(dir / "error_vs_grid.dat");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      o << line << "\n";
    }
    ++produced;
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().filename().string().find("report") == std::string::npos ||
        entry.path().extension() != ".csv")
      continue;
    std::ifstream in(entry.path());
    std::string line;
    std::getline(in, line);
    if (line.rfind("suite,", 0) != 0) continue;
    std::vector<std::pair<double, double>> gpts;
    while (std::getline(in, line)) {
      if (line.rfind("discpos[theta=", 0) != 0) continue;
      double theta = std::stod(line.substr(14));
      auto fields = line;
      // worst_margin is the 4th comma field
      std::size_t pos = 0;
      for (int c = 0; c < 3; ++c) pos = fields.find(',', pos) + 1;
      double margin = std::stod(fields.substr(pos));
      gpts.push_back({theta, margin});
    }
    if (!gpts.empty()) {
      std::sort(gpts.begin(), gpts.end());
      std::ofstream o(dir / "inf_g_vs_theta.dat");
      for (auto& [t, g] : gpts) o << t << " " << g << "\n";
      ++produced;
    }
  }
  if (produced == 0) throw ConfigError("no run artifacts found in " + dir_s);
  std::cout << "wrote " << produced << " plot data files into " << dir_s << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dhym_lab: numerical laboratory for the supercritical dHYM equation"};
  app.require_subcommand(1);

  std::string solve_cfg, verify_cfg, report_dir;
  std::vector<std::string> suites;
  bool negate = false;

  auto* solve = app.add_subcommand("solve", "run a continuity-method solve from a config");
  solve->add_option("config", solve_cfg, "flat key = value config file")->required();

  auto* verify = app.add_subcommand("verify", "run verification suites from a config");
  verify->add_option("config", verify_cfg, "flat key = value config file")->required();
  verify->add_option("--suite", suites, "suite name (repeatable; overrides the config)");
  verify->add_flag("--self-test-negate", negate, "negate predicates (harness self test)")
      ->group("");

  auto* report = app.add_subcommand("report", "emit gnuplot-ready data from run artifacts");
  report->add_option("dir", report_dir, "artifact directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (solve->parsed()) return cmd_solve(solve_cfg);
    if (verify->parsed()) return cmd_verify(verify_cfg, suites, negate);
    return cmd_report(report_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "precondition rejected: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
