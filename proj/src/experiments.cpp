#include "slowfast/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace slowfast {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

MeanSe stats(const std::vector<double>& v, const ParallelOptions& par) { return mean_se(v, par); }

std::vector<double> difference(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

std::vector<double> terminal_abs_gap(const SlowPathEnsemble& a, const SlowPathEnsemble& b, bool cap_at_one) {
  const int N = a.grid.n_steps;
  std::vector<double> g(a.n_paths);
  for (std::size_t p = 0; p < a.n_paths; ++p) {
    const double v = (a.state(p, N) - b.state(p, N)).norm();
    g[p] = cap_at_one ? std::min(1.0, v) : v;
  }
  return g;
}

std::vector<double> terminal_signed_gap(const SlowPathEnsemble& a, const SlowPathEnsemble& b) {
  const int N = a.grid.n_steps;
  std::vector<double> g(a.n_paths);
  for (std::size_t p = 0; p < a.n_paths; ++p) g[p] = a.at(p, N)[0] - b.at(p, N)[0];
  return g;
}

void fail_row(SweepRow& row, const std::string& why) {
  row.verdict = "FAILED";
  row.error = why;
  for (double* f : {&row.y0_eps, &row.se_y0_eps, &row.cost_eps, &row.se_cost_eps, &row.ctrl_l2_gap,
                    &row.se_ctrl_l2_gap, &row.supy_gap, &row.se_supy_gap, &row.bmo_eps, &row.y0_gap, &row.se_y0_gap,
                    &row.forward_gap, &row.se_forward_gap})
    *f = kNaN;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

}  // namespace

bool nonincreasing_within(double prev, double se_prev, double next, double se_next) {
  return next <= prev + 2.0 * std::hypot(se_prev, se_next);
}

const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols{
      "eps",         "y0_eps",         "se_y0_eps", "y0_hat",      "se_y0_hat",     "cost_eps",     "se_cost_eps",
      "cost_hat",    "se_cost_hat",    "ctrl_l2_gap", "se_ctrl_l2_gap", "supy_gap", "se_supy_gap", "bmo_eps",
      "verdict"};
  return cols;
}

void validate_sweep_config(const SweepConfig& c) {
  if (c.eps.empty()) throw Error(ErrorCode::ConfigError, "eps list is empty");
  for (std::size_t i = 0; i < c.eps.size(); ++i) {
    if (!(c.eps[i] > 0.0)) throw Error(ErrorCode::NonPositiveEpsilon, "eps values must be positive");
    if (i > 0 && c.eps[i] > c.eps[i - 1]) throw Error(ErrorCode::ConfigError, "eps list must be nonincreasing");
  }
  if (c.n_paths < 2 || c.n_steps < 1) throw Error(ErrorCode::ConfigError, "need at least 2 paths and 1 step");
  const double dt = c.spec.T / c.n_steps;
  const double eps_min = *std::min_element(c.eps.begin(), c.eps.end());
  if (dt > eps_min / 5.0)
    throw Error(ErrorCode::ConfigError, "dt = " + std::to_string(dt) + " exceeds min(eps) / 5 = " +
                                            std::to_string(eps_min / 5.0) + "; increase n_steps");
}

SweepResult epsilon_sweep(const SweepConfig& config) {
  validate_sweep_config(config);
  const ProblemSpec& spec = config.spec;
  const auto& par = config.par;
  const TimeGrid grid(spec.T, config.n_steps);
  const int N = grid.n_steps;
  const double dt = grid.dt();
  auto W = std::make_shared<const WienerEnsemble>(
      sample_wiener(grid, config.n_paths, spec.dims.n_fast, config.seed, par));
  const std::size_t P = W->n_paths;

  SweepResult result;
  const SlowPathEnsemble x_hat = solve_forward_reduced(spec, *W, {}, par);
  const BsdeSolution sol_hat = solve_bsde(x_hat, *W, spec, config.bsde, par);
  const double y0_hat = y0_value(sol_hat);
  const auto s_hat = pathwise_y0(sol_hat, x_hat, spec);
  const MeanSe y0_hat_stats = stats(s_hat, par);
  const ControlProcess u_hat = control_from_bsde(spec, x_hat, sol_hat, par);
  CostEstimate cost_hat;
  if (config.compute_costs) cost_hat = cost_weak(x_hat, u_hat, *W, spec, config.n_schedule, par);
  result.bmo_hat = sol_hat.bmo.max;
  result.y_violation_rate_hat = sol_hat.y_violation_rate;

  const SemimartingalePath input = wiener_semimartingale(W, spec.coeffs.lambda);
  for (double eps : config.eps) {
    SweepRow row;
    row.eps = eps;
    row.y0_hat = y0_hat;
    row.se_y0_hat = y0_hat_stats.se;
    row.cost_hat = config.compute_costs ? cost_hat.value : kNaN;
    row.se_cost_hat = config.compute_costs ? cost_hat.std_error : kNaN;
    try {
      auto fast = std::make_shared<const FastPathEnsemble>(gamma_ou(input, eps, par));
      row.stiffness_warning = fast->stiffness_warning;
      const SlowPathEnsemble x_eps = solve_forward_eps(spec, fast, par);
      if (x_eps.overflow())
        throw Error(ErrorCode::InvalidArgument, std::to_string(x_eps.overflow_paths) + " paths overflowed");
      const BsdeSolution sol = solve_bsde(x_eps, *W, spec, config.bsde, par);
      row.y0_eps = y0_value(sol);
      const auto s_eps = pathwise_y0(sol, x_eps, spec);
      row.se_y0_eps = stats(s_eps, par).se;
      row.y0_gap = std::abs(row.y0_eps - y0_hat);
      row.se_y0_gap = stats(difference(s_eps, s_hat), par).se;
      row.bmo_eps = sol.bmo.max;
      row.y_violation_rate = sol.y_violation_rate;

      const ControlProcess u_eps = control_from_bsde(spec, x_eps, sol, par);
      std::vector<double> l2(P), supy(P);
      for (std::size_t p = 0; p < P; ++p) {
        double acc = 0.0, sup = 0.0;
        for (int k = 0; k < N; ++k) {
          const double* a = u_eps.at(p, k);
          const double* b = u_hat.at(p, k);
          for (int i = 0; i < u_eps.n_control; ++i) acc += (a[i] - b[i]) * (a[i] - b[i]) * dt;
        }
        for (int k = 0; k <= N; ++k) sup = std::max(sup, std::abs(sol.y(p, k) - sol_hat.y(p, k)));
        l2[p] = acc;
        supy[p] = sup;
      }
      const MeanSe l2s = stats(l2, par), sups = stats(supy, par);
      row.ctrl_l2_gap = l2s.mean;
      row.se_ctrl_l2_gap = l2s.se;
      row.supy_gap = sups.mean;
      row.se_supy_gap = sups.se;
      const MeanSe fg = stats(terminal_abs_gap(x_eps, x_hat, true), par);
      row.forward_gap = fg.mean;
      row.se_forward_gap = fg.se;

      if (config.compute_costs) {
        const CostEstimate ce = cost_weak(x_eps, u_eps, *W, spec, config.n_schedule, par);
        row.cost_eps = ce.value;
        row.se_cost_eps = ce.std_error;
        row.cost_stabilized = ce.stabilized;
      } else {
        row.cost_eps = row.se_cost_eps = kNaN;
      }
    } catch (const std::exception& e) {
      fail_row(row, e.what());
    }
    result.rows.push_back(row);
  }

  // verdicts
  std::ostringstream why;
  bool pass = true;
  const SweepRow* prev = nullptr;
  for (auto& row : result.rows) {
    if (row.verdict == "FAILED") {
      pass = false;
      why << "row eps=" << row.eps << " failed: " << row.error << "; ";
      continue;
    }
    if (prev) {
      const bool ok = nonincreasing_within(prev->y0_gap, prev->se_y0_gap, row.y0_gap, row.se_y0_gap) &&
                      nonincreasing_within(prev->ctrl_l2_gap, prev->se_ctrl_l2_gap, row.ctrl_l2_gap, row.se_ctrl_l2_gap);
      if (!ok) {
        row.verdict = "FAIL";
        pass = false;
        why << "gap increases at eps=" << row.eps << "; ";
      }
    }
    prev = &row;
  }
  if (pass && !result.rows.empty()) {
    const auto& first = result.rows.front();
    const auto& last = result.rows.back();
    if (result.rows.size() > 1 && !(last.y0_gap <= config.final_ratio * first.y0_gap)) {
      pass = false;
      why << "final |Y0 gap| " << last.y0_gap << " above " << config.final_ratio << " x first " << first.y0_gap << "; ";
    }
    if (result.rows.size() > 1 && !(last.ctrl_l2_gap <= config.final_ratio * first.ctrl_l2_gap)) {
      pass = false;
      why << "final control gap " << last.ctrl_l2_gap << " above " << config.final_ratio << " x first "
          << first.ctrl_l2_gap << "; ";
    }
    if (!(last.y0_gap <= config.y0_gap_max) || !(last.ctrl_l2_gap <= config.ctrl_gap_max)) {
      pass = false;
      why << "final gap above the absolute threshold; ";
    }
  }
  result.pass = pass;
  result.reason = pass ? "gaps nonincreasing within 2 SE and below thresholds" : why.str();
  return result;
}

WzResult wong_zakai_experiment(const WzConfig& config) {
  const ProblemSpec& spec = config.spec;
  if (spec.dims.n_slow != 1) throw Error(ErrorCode::InvalidArgument, "the Wong-Zakai experiment is one-dimensional");
  for (double e : config.eps)
    if (!(e > 0.0)) throw Error(ErrorCode::NonPositiveEpsilon, "eps values must be positive");
  const auto& par = config.par;
  const TimeGrid grid(spec.T, config.n_steps);
  auto W = std::make_shared<const WienerEnsemble>(
      sample_wiener(grid, config.n_paths, spec.dims.n_fast, config.seed, par));
  const SemimartingalePath input = wiener_semimartingale(W, spec.coeffs.lambda);

  ReducedDrift strat;
  strat.use_bhat = false;
  strat.extra = stratonovich_correction(spec.coeffs.sigma, spec.coeffs.lambda);
  const SlowPathEnsemble x_hat = solve_forward_reduced(spec, *W, strat, par);
  ReducedDrift plain;
  plain.use_bhat = false;
  std::optional<SlowPathEnsemble> x_ito;
  if (config.ablation) x_ito = solve_forward_reduced(spec, *W, plain, par);

  const MollifierKernel kernel = MollifierKernel::polynomial_bump();
  WzResult result;
  for (double eps : config.eps) {
    auto fast = std::make_shared<const FastPathEnsemble>(gamma_mollify(input, eps, kernel, par));
    const SlowPathEnsemble x_eps = solve_forward_eps(spec, fast, par);
    WzRow row;
    row.eps = eps;
    const MeanSe se = mean_se(terminal_abs_gap(x_eps, x_hat, false), par);
    row.strong_error = se.mean;
    row.se_strong_error = se.se;
    const MeanSe mg = mean_se(terminal_signed_gap(x_eps, x_hat), par);
    row.mean_gap = mg.mean;
    row.se_mean_gap = mg.se;
    if (x_ito) {
      const MeanSe ab = mean_se(terminal_abs_gap(x_eps, *x_ito, false), par);
      row.ablated_error = ab.mean;
      row.se_ablated_error = ab.se;
    } else {
      row.ablated_error = row.se_ablated_error = kNaN;
    }
    result.rows.push_back(row);
  }

  std::vector<double> errs;
  for (const auto& r : result.rows) errs.push_back(r.strong_error);
  const bool decreasing = strictly_decreasing(errs);
  bool discriminates = true;
  if (config.ablation && !result.rows.empty()) {
    const auto& last = result.rows.back();
    discriminates = last.ablated_error > last.strong_error;
  }
  result.pass = decreasing && discriminates;
  std::ostringstream why;
  if (!decreasing) why << "strong error not decreasing across eps; ";
  if (!discriminates) why << "uncorrected reduced SDE not farther than the corrected one at the smallest eps; ";
  result.reason = result.pass ? "strong error decreasing; Stratonovich correction discriminated" : why.str();
  return result;
}

FastFastResult fast_fast_experiment(const FastFastConfig& config) {
  const ProblemSpec& spec = config.spec;
  for (double e : config.eps)
    if (!(e > 0.0)) throw Error(ErrorCode::NonPositiveEpsilon, "eps values must be positive");
  const auto& par = config.par;
  const int d = spec.dims.n_fast;
  const TimeGrid grid(spec.T, config.n_steps);
  auto W = std::make_shared<const WienerEnsemble>(sample_wiener(grid, config.n_paths, d, config.seed, par));
  const SemimartingalePath input = wiener_semimartingale(W, spec.coeffs.lambda);

  FastFastResult result;
  ReducedDrift drift;
  if (spec.coeffs.q) {
    const GaussianAverage avg =
        gaussian_average_q(*spec.coeffs.q, spec.coeffs.lambda, config.n_quad, config.seed, spec.coeffs.q_diagonal);
    result.q_hat = avg.value;
    result.q_hat_se = avg.std_error;
    result.q_hat_exact = avg.exact;
    drift.extra = qhat_correction(avg.value);
  } else {
    result.q_hat = Vec::Zero(d);
    result.q_hat_se = Vec::Zero(d);
    result.q_hat_exact = true;
  }
  const SlowPathEnsemble x_hat = solve_forward_reduced(spec, *W, drift, par);

  for (double eps : config.eps) {
    auto fast = std::make_shared<const FastPathEnsemble>(
        spec.coeffs.q ? gamma_ou_quadratic(input, eps, *spec.coeffs.q, par) : gamma_ou(input, eps, par));
    const SlowPathEnsemble x_eps = solve_forward_eps(spec, fast, par);
    std::vector<double> gaps;
    const int N = grid.n_steps;
    for (std::size_t p = 0; p < x_eps.n_paths; ++p) {
      if (x_eps.overflowed[p]) continue;
      gaps.push_back((x_eps.state(p, N) - x_hat.state(p, N)).norm());
    }
    FastFastRow row;
    row.eps = eps;
    row.overflow_paths = std::max(fast->overflow_paths, x_eps.overflow_paths);
    const MeanSe s = mean_se(gaps, par);
    row.strong_error = s.mean;
    row.se_strong_error = s.se;
    result.rows.push_back(row);
  }
  std::vector<double> errs;
  for (const auto& r : result.rows) errs.push_back(r.strong_error);
  result.pass = strictly_decreasing(errs);
  result.reason = result.pass ? "strong error decreasing across eps" : "strong error not decreasing across eps";
  return result;
}

}  // namespace slowfast
