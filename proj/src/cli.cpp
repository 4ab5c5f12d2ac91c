#include "slowfast/cli.hpp"

#include "slowfast/bsde.hpp"
#include "slowfast/config.hpp"
#include "slowfast/control.hpp"
#include "slowfast/experiments.hpp"
#include "slowfast/hamiltonian.hpp"
#include "slowfast/hjb.hpp"
#include "slowfast/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <thread>

namespace slowfast {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct Common {
  std::string preset = "scalar-riesz";
  std::string config;
  std::optional<std::size_t> paths;
  std::optional<int> steps;
  std::string eps;
  std::optional<std::uint64_t> seed;
  std::string n_schedule;
  std::string basis;
  std::string out;
  bool deterministic = true;
  bool svg = false;
  unsigned threads = 1;
  std::string mode = "reduced";
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--preset", c.preset, "named problem (scalar-riesz, wz-sine, fastfast-diag)");
  app->add_option("--config", c.config, "INI problem file (overrides --preset)");
  app->add_option("--paths", c.paths, "Monte Carlo paths");
  app->add_option("--steps", c.steps, "time steps");
  app->add_option("--eps", c.eps, "comma-separated eps list");
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--n-schedule", c.n_schedule, "comma-separated localization levels");
  app->add_option("--basis", c.basis, "regression basis, e.g. poly:4 or pwl:12");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--deterministic-reduce", c.deterministic, "tree reductions independent of thread count (default true)");
  app->add_flag("--svg", c.svg, "also write SVG plots");
  app->add_option("--threads", c.threads, "worker threads")->check(CLI::Range(1u, 1024u));
}

struct Resolved {
  ProblemSpec spec;
  RunSettings run;
  std::size_t paths;
  int steps;
  std::vector<double> eps;
  std::uint64_t seed;
  std::vector<double> n_schedule;
  BasisSpec basis;
  ParallelOptions par;
};

Resolved resolve(const Common& c, std::size_t default_paths, int default_steps, std::vector<double> default_eps) {
  Resolved r;
  if (!c.config.empty()) {
    LoadedConfig lc = load_config(c.config);
    r.spec = std::move(lc.spec);
    r.run = lc.run;
  } else {
    r.spec = load_preset(c.preset);
  }
  r.paths = c.paths.value_or(r.run.paths.value_or(default_paths));
  r.steps = c.steps.value_or(r.run.steps.value_or(default_steps));
  r.eps = !c.eps.empty() ? parse_double_list(c.eps) : r.run.eps.value_or(std::move(default_eps));
  r.seed = c.seed.value_or(r.run.seed.value_or(1));
  r.n_schedule = !c.n_schedule.empty() ? parse_double_list(c.n_schedule)
                                        : r.run.n_schedule.value_or(default_n_schedule());
  r.basis = BasisSpec::parse(!c.basis.empty() ? c.basis : r.run.basis.value_or("poly:4"));
  r.par.workers = c.threads;
  r.par.deterministic_reduce = c.deterministic;
  if (r.paths < 2) throw Error(ErrorCode::InvalidArgument, "--paths must be at least 2");
  if (r.steps < 1) throw Error(ErrorCode::InvalidArgument, "--steps must be positive");
  return r;
}

json snapshot(const std::string& command, const Common& c, const Resolved& r) {
  json j;
  j["command"] = command;
  j["problem"] = r.spec.name;
  j["config_file"] = c.config;
  j["T"] = r.spec.T;
  j["x0"] = std::vector<double>(r.spec.x0.data(), r.spec.x0.data() + r.spec.x0.size());
  j["paths"] = r.paths;
  j["steps"] = r.steps;
  j["eps"] = r.eps;
  j["seed"] = r.seed;
  j["n_schedule"] = r.n_schedule;
  j["basis"] = r.basis.str();
  j["deterministic_reduce"] = r.par.deterministic_reduce;
  j["threads"] = r.par.workers;
  j["mode"] = c.mode;
  return j;
}

json versions() {
  json v;
  v["slowfast"] = kVersion;
  v["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
#if defined(__clang__)
  v["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  v["compiler"] = std::string("gcc ") + __VERSION__;
#endif
  v["cxx_standard"] = __cplusplus;
  return v;
}

class Outputs {
 public:
  explicit Outputs(std::string dir) : dir_(std::move(dir)) {}
  bool enabled() const { return !dir_.empty(); }
  void write(const std::string& name, const std::string& content) {
    if (!enabled()) return;
    write_atomic(fs::path(dir_) / name, content);
    files_.push_back(name);
  }
  const std::vector<std::string>& files() const { return files_; }

 private:
  std::string dir_;
  std::vector<std::string> files_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json nan_safe(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

DynamicsMode parse_mode(const std::string& m) {
  if (m == "reduced") return DynamicsMode::reduced;
  if (m == "eps") return DynamicsMode::eps;
  throw Error(ErrorCode::InvalidArgument, "--mode must be 'reduced' or 'eps'");
}

// eps-mode ensembles: OU fast input driven by the shared noise
SlowPathEnsemble forward_for(const Resolved& r, DynamicsMode mode, std::shared_ptr<const WienerEnsemble> W) {
  if (mode == DynamicsMode::reduced) return solve_forward_reduced(r.spec, *W, {}, r.par);
  const SemimartingalePath input = wiener_semimartingale(W, r.spec.coeffs.lambda);
  auto fast = std::make_shared<const FastPathEnsemble>(
      r.spec.coeffs.q ? gamma_ou_quadratic(input, r.eps.front(), *r.spec.coeffs.q, r.par)
                      : gamma_ou(input, r.eps.front(), r.par));
  return solve_forward_eps(r.spec, fast, r.par);
}

int finish(Outputs& outputs, json manifest, std::chrono::steady_clock::time_point t0, int code, std::ostream& out) {
  manifest["wall_time_s"] = seconds_since(t0);
  manifest["exit_code"] = code;
  if (outputs.enabled()) {
    manifest["outputs"] = outputs.files();
    outputs.write("manifest.json", manifest.dump(2) + "\n");
  }
  out << "verdict: " << (code == 0 ? "PASS" : "FAIL") << '\n';
  return code;
}

}  // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"slowfast: slow-fast stochastic control experiments", "slowfast"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough(false);

  Common c;
  auto* validate = app.add_subcommand("validate", "probe the standing assumptions of a problem");
  auto* simulate = app.add_subcommand("simulate-forward", "simulate slow paths (reduced or eps dynamics)");
  auto* htable = app.add_subcommand("hamiltonian-table", "tabulate psi and the optimal feedback on an (x, z) grid");
  auto* bsde = app.add_subcommand("solve-bsde", "solve the backward equation along simulated paths");
  auto* cost = app.add_subcommand("evaluate-cost", "weak and strong cost of the BSDE feedback");
  auto* sweep = app.add_subcommand("sweep-epsilon", "eps-sweep of values and optimal controls");
  auto* wz = app.add_subcommand("wong-zakai", "Wong-Zakai strong-error experiment");
  auto* ff = app.add_subcommand("fast-fast", "fast-fast quadratic interaction experiment");
  auto* hjb = app.add_subcommand("hjb-oracle", "finite-difference value function (one dimension)");
  for (auto* s : {validate, simulate, htable, bsde, cost, sweep, wz, ff, hjb}) add_common(s, c);
  for (auto* s : {simulate, bsde, cost}) s->add_option("--mode", c.mode, "reduced or eps (uses the first --eps)");
  int n_probe = 1000;
  validate->add_option("--probes", n_probe, "random probes per assumption");
  double x_min = -3, x_max = 3, z_min = -4, z_max = 4;
  int nx_table = 13, nz_table = 9;
  htable->add_option("--x-min", x_min);
  htable->add_option("--x-max", x_max);
  htable->add_option("--z-min", z_min);
  htable->add_option("--z-max", z_max);
  htable->add_option("--nx", nx_table)->check(CLI::PositiveNumber);
  htable->add_option("--nz", nz_table)->check(CLI::PositiveNumber);
  HjbOptions hjb_opts;
  hjb->add_option("--nx", hjb_opts.n_x, "space intervals");
  hjb->add_option("--nt", hjb_opts.n_t, "time steps (0 = smallest CFL-stable count)");
  int picard = 1;
  double clip_multiplier = 10.0;
  ZEstimator z_estimator = ZEstimator::joint;
  for (auto* s : {bsde, cost, sweep}) {
    s->add_option("--picard", picard, "Picard sweeps of the backward scheme")->check(CLI::PositiveNumber);
    s->add_option("--clip-multiplier", clip_multiplier, "Z clip level in units of (M_h + M_psi T) / sqrt(T)");
    s->add_option("--z-estimator", z_estimator, "joint or increment")
        ->transform(CLI::CheckedTransformer(std::map<std::string, ZEstimator>{{"joint", ZEstimator::joint},
                                                                              {"increment", ZEstimator::increment}}));
  }

  if (!args.empty() && !args[0].empty() && args[0][0] != '-' && !app.get_subcommand_no_throw(args[0])) {
    err << "error: unknown subcommand '" << args[0] << "'\n" << app.help();
    return 1;
  }

  std::vector<const char*> argv{"slowfast"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return 1;
  }

  const auto t0 = std::chrono::steady_clock::now();
  Outputs outputs(c.out);
  try {
    if (validate->parsed()) {
      const Resolved r = resolve(c, 0 + 2, 1, {0.1});
      const ValidationReport rep = validate_spec(r.spec, n_probe, r.seed);
      CsvTable t({"check", "worst_ratio", "probes"});
      for (const auto& ch : rep.checks) t.add_row({ch.name, format_double(ch.worst_ratio), std::to_string(ch.n_probes)});
      out << t.str();
      for (const auto& f : rep.failures) out << "violation: " << f << '\n';
      if (std::isfinite(rep.measured_L_ubar))
        out << "measured feedback Lipschitz constant " << format_double(rep.measured_L_ubar) << " (declared "
            << format_double(r.spec.constants.L_ubar) << ")\n";
      outputs.write("validate.csv", t.str());
      json m{{"config", snapshot("validate", c, r)}, {"versions", versions()}, {"passed", rep.passed},
             {"failures", rep.failures}};
      const DerivedConstants dc = r.spec.derived();
      m["derived"] = {{"c", dc.confinement_c}, {"M_psi", dc.M_psi}, {"L_psi", dc.L_psi}, {"C_ubar", dc.C_ubar},
                      {"y_bound", r.spec.y_bound()}};
      m["measured_L_ubar"] = nan_safe(rep.measured_L_ubar);
      return finish(outputs, m, t0, rep.passed ? 0 : 2, out);
    }

    if (htable->parsed()) {
      const Resolved r = resolve(c, 2, 1, {0.1});
      if (r.spec.dims.n_slow != 1 || r.spec.dims.n_fast != 1)
        throw Error(ErrorCode::InvalidArgument, "hamiltonian-table needs a one-dimensional problem");
      CsvTable t({"x", "z", "psi", "u_min", "method"});
      for (int i = 0; i < nx_table; ++i)
        for (int j = 0; j < nz_table; ++j) {
          const double x = nx_table == 1 ? x_min : x_min + (x_max - x_min) * i / (nx_table - 1);
          const double z = nz_table == 1 ? z_min : z_min + (z_max - z_min) * j / (nz_table - 1);
          const HamiltonianEval h = hamiltonian(r.spec, Vec::Constant(1, x), Vec::Constant(1, z));
          t.add_row({format_double(x), format_double(z), format_double(h.psi), format_double(h.u_min[0]),
                     to_string(h.method)});
        }
      if (outputs.enabled())
        outputs.write("hamiltonian.csv", t.str());
      else
        out << t.str();
      return finish(outputs, {{"config", snapshot("hamiltonian-table", c, r)}, {"versions", versions()}}, t0, 0, out);
    }

    if (hjb->parsed()) {
      const Resolved r = resolve(c, 2, 1, {0.1});
      const HjbResult h = hjb_oracle(r.spec, hjb_opts);
      out << "v(0, x0) = " << format_double(h.value) << "  richardson = " << format_double(h.richardson)
          << "  grid = " << h.grid.n_x << " x " << h.grid.n_t << '\n';
      CsvTable t({"x", "v0"});
      for (std::size_t i = 0; i < h.x.size(); ++i) t.add_numbers({h.x[i], h.v0[i]});
      outputs.write("hjb.csv", t.str());
      json m{{"config", snapshot("hjb-oracle", c, r)},
             {"versions", versions()},
             {"value", h.value},
             {"richardson", h.richardson},
             {"widening_change", h.widening_change},
             {"grid", {{"x_lo", h.grid.x_lo}, {"x_hi", h.grid.x_hi}, {"n_x", h.grid.n_x}, {"n_t", h.grid.n_t},
                       {"boundary", h.grid.boundary}}}};
      return finish(outputs, m, t0, 0, out);
    }

    if (simulate->parsed() || bsde->parsed() || cost->parsed()) {
      const std::string name = simulate->parsed() ? "simulate-forward" : bsde->parsed() ? "solve-bsde" : "evaluate-cost";
      const Resolved r = resolve(c, 10000, 100, {0.1});
      const DynamicsMode mode = parse_mode(c.mode);
      const TimeGrid grid(r.spec.T, r.steps);
      auto W = std::make_shared<const WienerEnsemble>(sample_wiener(grid, r.paths, r.spec.dims.n_fast, r.seed, r.par));
      const SlowPathEnsemble X = forward_for(r, mode, W);
      json m{{"config", snapshot(name, c, r)}, {"versions", versions()}, {"overflow_paths", X.overflow_paths}};

      if (simulate->parsed()) {
        std::vector<std::string> header{"t"};
        for (int i = 0; i < X.n_slow; ++i) {
          header.push_back("mean_x" + std::to_string(i));
          header.push_back("sd_x" + std::to_string(i));
        }
        CsvTable t(header);
        for (int k = 0; k <= grid.n_steps; ++k) {
          std::vector<double> row{grid.time(k)};
          for (int i = 0; i < X.n_slow; ++i) {
            std::vector<double> v(X.n_paths);
            for (std::size_t p = 0; p < X.n_paths; ++p) v[p] = X.at(p, k)[i];
            const MeanSe s = mean_se(v, r.par);
            row.push_back(s.mean);
            row.push_back(s.stddev);
          }
          t.add_numbers(row);
        }
        outputs.write("forward.csv", t.str());
        out << "scheme " << X.scheme << ", " << X.n_paths << " paths, overflow " << X.overflow_paths << '\n';
        return finish(outputs, m, t0, 0, out);
      }

      BsdeOptions bo;
      bo.basis = r.basis;
      bo.picard_sweeps = picard;
      bo.clip_multiplier = clip_multiplier;
      bo.z_estimator = z_estimator;
      auto sol = std::make_shared<const BsdeSolution>(solve_bsde(X, *W, r.spec, bo, r.par));
      const double y0 = y0_value(*sol);
      const MeanSe y0s = mean_se(pathwise_y0(*sol, X, r.spec), r.par);
      m["bsde"] = {{"y0", y0},
                   {"se_y0", y0s.se},
                   {"y_bound", sol->y_bound},
                   {"z_clip", sol->z_clip},
                   {"y_violation_rate", sol->y_violation_rate},
                   {"z_clipped", sol->z_clipped},
                   {"ridge_steps", sol->ridge_steps},
                   {"max_condition", nan_safe(sol->max_condition)},
                   {"bmo", sol->bmo.max},
                   {"basis", sol->basis.str()}};
      out << "Y0 = " << format_double(y0) << " (se " << format_double(y0s.se) << "), violation rate "
          << format_double(sol->y_violation_rate) << ", BMO " << format_double(sol->bmo.max) << '\n';

      if (bsde->parsed()) {
        CsvTable t({"t", "mean_y", "mean_abs_z", "bmo"});
        for (int k = 0; k <= grid.n_steps; ++k) {
          double my = 0, mz = 0;
          for (std::size_t p = 0; p < sol->n_paths; ++p) {
            my += sol->y(p, k);
            if (k < grid.n_steps) mz += Eigen::Map<const Vec>(sol->z(p, k), sol->n_fast).norm();
          }
          t.add_numbers({grid.time(k), my / sol->n_paths, mz / sol->n_paths, sol->bmo.profile[k]});
        }
        outputs.write("bsde.csv", t.str());
        return finish(outputs, m, t0, 0, out);
      }

      const ControlProcess u = control_from_bsde(r.spec, X, *sol, r.par);
      const CostEstimate weak = cost_weak(X, u, *W, r.spec, r.n_schedule, r.par);
      const CostEstimate strong =
          cost_strong(r.spec, optimal_feedback(r.spec, sol), mode, r.eps.front(), *W, {}, r.par);
      CsvTable t({"n", "value", "se", "ess", "energy", "se_energy", "weight_mean", "se_weight"});
      for (const auto& row : weak.table)
        t.add_numbers({row.level, row.value, row.std_error, row.ess, row.energy, row.energy_se, row.weight_mean,
                       row.weight_se});
      outputs.write("cost.csv", t.str());
      out << t.str();
      out << "cost_weak = " << format_double(weak.value) << " (se " << format_double(weak.std_error)
          << "), cost_strong = " << format_double(strong.value) << " (se " << format_double(strong.std_error)
          << "), stabilized " << (weak.stabilized ? "yes" : "no") << '\n';
      m["cost"] = {{"weak", weak.value},          {"se_weak", weak.std_error},
                   {"strong", strong.value},      {"se_strong", strong.std_error},
                   {"stabilized", weak.stabilized}, {"degenerate_weights", weak.degenerate_weights},
                   {"ess", weak.ess}};
      return finish(outputs, m, t0, 0, out);
    }

    if (sweep->parsed()) {
      const Resolved r = resolve(c, 20000, 400, {0.2, 0.1, 0.05, 0.025});
      SweepConfig sc;
      sc.spec = r.spec;
      sc.eps = r.eps;
      sc.n_paths = r.paths;
      sc.n_steps = r.steps;
      sc.seed = r.seed;
      sc.n_schedule = r.n_schedule;
      sc.bsde.basis = r.basis;
      sc.bsde.picard_sweeps = picard;
      sc.bsde.clip_multiplier = clip_multiplier;
      sc.bsde.z_estimator = z_estimator;
      sc.par = r.par;
      const SweepResult res = epsilon_sweep(sc);
      const CsvTable table = sweep_table(res);
      outputs.write("sweep.csv", table.str());
      CsvTable fg({"eps", "forward_gap", "se_forward_gap", "y0_gap", "se_y0_gap", "y_violation_rate"});
      for (const auto& row : res.rows)
        fg.add_numbers({row.eps, row.forward_gap, row.se_forward_gap, row.y0_gap, row.se_y0_gap, row.y_violation_rate});
      outputs.write("forward_gap.csv", fg.str());
      if (c.svg) {
        std::vector<double> e, y0g, cg;
        for (const auto& row : res.rows) {
          e.push_back(row.eps);
          y0g.push_back(row.y0_gap);
          cg.push_back(row.ctrl_l2_gap);
        }
        outputs.write("y0_gap.svg", svg_line_chart("|Y0_eps - Y0_hat|", "eps", "gap", {{"y0 gap", e, y0g}}, true));
        outputs.write("ctrl_gap.svg",
                      svg_line_chart("control L2 gap", "eps", "E int |u_eps - u_hat|^2 dt", {{"ctrl gap", e, cg}}, true));
      }
      out << table.str();
      json m{{"config", snapshot("sweep-epsilon", c, r)}, {"versions", versions()}};
      m["verdict"] = res.pass ? "PASS" : "FAIL";
      m["reason"] = res.reason;
      m["bmo_hat"] = res.bmo_hat;
      m["y_violation_rate_hat"] = res.y_violation_rate_hat;
      json rows = json::array();
      for (const auto& row : res.rows)
        rows.push_back({{"eps", row.eps},
                        {"forward_gap", nan_safe(row.forward_gap)},
                        {"se_forward_gap", nan_safe(row.se_forward_gap)},
                        {"y0_gap", nan_safe(row.y0_gap)},
                        {"se_y0_gap", nan_safe(row.se_y0_gap)},
                        {"cost_stabilized", row.cost_stabilized},
                        {"stiffness_warning", row.stiffness_warning},
                        {"error", row.error}});
      m["rows"] = rows;
      out << "reason: " << res.reason << '\n';
      return finish(outputs, m, t0, res.pass ? 0 : 2, out);
    }

    if (wz->parsed()) {
      Common cc = c;
      if (c.config.empty() && c.preset == "scalar-riesz") cc.preset = "wz-sine";
      const Resolved r = resolve(cc, 4000, 2000, {0.2, 0.1, 0.05, 0.025});
      WzConfig wc;
      wc.spec = r.spec;
      wc.eps = r.eps;
      wc.n_paths = r.paths;
      wc.n_steps = r.steps;
      wc.seed = r.seed;
      wc.par = r.par;
      const WzResult res = wong_zakai_experiment(wc);
      CsvTable t({"eps", "strong_error", "se_strong_error", "ablated_error", "se_ablated_error", "mean_gap",
                  "se_mean_gap"});
      for (const auto& row : res.rows)
        t.add_numbers({row.eps, row.strong_error, row.se_strong_error, row.ablated_error, row.se_ablated_error,
                       row.mean_gap, row.se_mean_gap});
      outputs.write("wong_zakai.csv", t.str());
      if (c.svg) {
        SvgSeries a{"Stratonovich-corrected", {}, {}}, b{"uncorrected", {}, {}};
        for (const auto& row : res.rows) {
          a.x.push_back(row.eps);
          a.y.push_back(row.strong_error);
          b.x.push_back(row.eps);
          b.y.push_back(row.ablated_error);
        }
        outputs.write("wong_zakai.svg", svg_line_chart("E|X_eps(T) - X_hat(T)|", "eps", "strong error", {a, b}, true));
      }
      out << t.str() << "reason: " << res.reason << '\n';
      json m{{"config", snapshot("wong-zakai", cc, r)}, {"versions", versions()}, {"verdict", res.pass ? "PASS" : "FAIL"},
             {"reason", res.reason}};
      return finish(outputs, m, t0, res.pass ? 0 : 2, out);
    }

    if (ff->parsed()) {
      Common cc = c;
      if (c.config.empty() && c.preset == "scalar-riesz") cc.preset = "fastfast-diag";
      const Resolved r = resolve(cc, 4000, 1000, {0.2, 0.1, 0.05, 0.025});
      FastFastConfig fc;
      fc.spec = r.spec;
      fc.eps = r.eps;
      fc.n_paths = r.paths;
      fc.n_steps = r.steps;
      fc.seed = r.seed;
      fc.par = r.par;
      const FastFastResult res = fast_fast_experiment(fc);
      CsvTable t({"eps", "strong_error", "se_strong_error", "overflow_paths"});
      for (const auto& row : res.rows)
        t.add_numbers({row.eps, row.strong_error, row.se_strong_error, static_cast<double>(row.overflow_paths)});
      outputs.write("fast_fast.csv", t.str());
      if (c.svg) {
        SvgSeries a{"strong error", {}, {}};
        for (const auto& row : res.rows) {
          a.x.push_back(row.eps);
          a.y.push_back(row.strong_error);
        }
        outputs.write("fast_fast.svg", svg_line_chart("E|X_eps(T) - X_hat(T)|", "eps", "strong error", {a}, true));
      }
      out << t.str() << "q_hat = " << res.q_hat.transpose() << (res.q_hat_exact ? " (exact)" : " (Monte Carlo)") << '\n'
          << "reason: " << res.reason << '\n';
      json m{{"config", snapshot("fast-fast", cc, r)},
             {"versions", versions()},
             {"q_hat", std::vector<double>(res.q_hat.data(), res.q_hat.data() + res.q_hat.size())},
             {"q_hat_exact", res.q_hat_exact},
             {"verdict", res.pass ? "PASS" : "FAIL"},
             {"reason", res.reason}};
      return finish(outputs, m, t0, res.pass ? 0 : 2, out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << app.help();
  return 1;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_run(args, std::cout, std::cerr);
}

}  // namespace slowfast
