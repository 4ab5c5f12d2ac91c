#include "slowfast/control.hpp"

#include "slowfast/hamiltonian.hpp"

#include <algorithm>
#include <cmath>

namespace slowfast {

ControlProcess control_from_controlled(const ControlledEnsemble& ens, std::string provenance) {
  ControlProcess c;
  c.grid = ens.paths.grid;
  c.n_paths = ens.paths.n_paths;
  c.n_control = ens.n_control;
  c.u = ens.controls;
  c.provenance = std::move(provenance);
  return c;
}

ControlProcess control_from_policy(const SlowPathEnsemble& forward, const FeedbackPolicy& policy, int n_control,
                                   const ParallelOptions& par) {
  ControlProcess c;
  c.grid = forward.grid;
  c.n_paths = forward.n_paths;
  c.n_control = n_control;
  c.u.assign(forward.n_paths * forward.grid.n_steps * n_control, 0.0);
  c.provenance = policy.description;
  parallel_for(forward.n_paths, par, [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p)
      for (int k = 0; k < forward.grid.n_steps; ++k) {
        const Vec u = policy.eval(k, forward.state(p, k), forward.fast_state(p, k));
        if (u.size() != n_control || !u.allFinite())
          throw Error(ErrorCode::PolicyEvaluationFailure, "policy returned a non-finite or mis-sized control");
        std::copy_n(u.data(), n_control, c.at(p, k));
      }
  });
  return c;
}

ControlProcess control_from_bsde(const ProblemSpec& spec, const SlowPathEnsemble& forward,
                                 const BsdeSolution& solution, const ParallelOptions& par) {
  if (!(forward.grid == solution.grid) || forward.n_paths != solution.n_paths)
    throw Error(ErrorCode::GridMismatch, "BSDE solution and paths differ in grid or path count");
  const int nu = spec.dims.n_control;
  const int d = solution.n_fast;
  ControlProcess c;
  c.grid = forward.grid;
  c.n_paths = forward.n_paths;
  c.n_control = nu;
  c.u.assign(forward.n_paths * forward.grid.n_steps * nu, 0.0);
  c.provenance = "ubar(X, -Z) pathwise";
  parallel_for(forward.n_paths, par, [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p)
      for (int k = 0; k < forward.grid.n_steps; ++k) {
        const Vec dual = -Eigen::Map<const Vec>(solution.z(p, k), d);
        const Vec u = feedback(spec, forward.state(p, k), dual);
        std::copy_n(u.data(), nu, c.at(p, k));
      }
  });
  return c;
}

LocalizedControl localize(const ControlProcess& u, double level, const Vec& u_star) {
  if (!(level > 0.0)) throw Error(ErrorCode::InvalidArgument, "localization level must be positive");
  if (u_star.size() != u.n_control) throw Error(ErrorCode::InvalidArgument, "u_star has the wrong dimension");
  const int N = u.grid.n_steps;
  const double dt = u.grid.dt();
  const int nu = u.n_control;
  LocalizedControl loc;
  loc.level = level;
  loc.tau.assign(u.n_paths, N);
  loc.u_n = u;
  loc.energy.assign(u.n_paths * (N + 1), 0.0);
  for (std::size_t p = 0; p < u.n_paths; ++p) {
    double* en = loc.energy.data() + p * (N + 1);
    for (int k = 0; k < N; ++k) {
      const double* uk = u.at(p, k);
      double s = 0.0;
      for (int i = 0; i < nu; ++i) s += uk[i] * uk[i];
      en[k + 1] = en[k] + s * dt;
    }
    int tau = N;
    for (int k = 0; k <= N; ++k)
      if (en[k] >= level) {
        tau = k;
        break;
      }
    loc.tau[p] = tau;
    for (int k = tau; k < N; ++k) std::copy_n(u_star.data(), nu, loc.u_n.at(p, k));
  }
  loc.u_n.provenance = u.provenance + " localized";
  return loc;
}

GirsanovWeight girsanov_weight(const SlowPathEnsemble& forward, const LocalizedControl& loc, const WienerEnsemble& wiener,
                               const ProblemSpec& spec, const ParallelOptions& par) {
  const auto& u = loc.u_n;
  if (!(forward.grid == wiener.grid) || !(forward.grid == u.grid) || forward.n_paths != wiener.n_paths ||
      forward.n_paths != u.n_paths)
    throw Error(ErrorCode::GridMismatch, "paths, noise and control disagree in grid or path count");
  const int N = forward.grid.n_steps;
  const double dt = forward.grid.dt();
  const int d = wiener.n_fast;
  GirsanovWeight w;
  w.grid = forward.grid;
  w.n_paths = forward.n_paths;
  w.log_weight.assign(forward.n_paths * (N + 1), 0.0);
  w.weight_T.assign(forward.n_paths, 1.0);
  parallel_for(forward.n_paths, par, [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      double* lw = w.log_weight.data() + p * (N + 1);
      for (int k = 0; k < N; ++k) {
        const Vec uk = Eigen::Map<const Vec>(u.at(p, k), u.n_control);
        const Vec r = spec.coeffs.r(forward.state(p, k), uk);
        const double* dW = wiener.step(p, k);
        double inc = 0.0;
        for (int i = 0; i < d; ++i) inc += r[i] * dW[i];
        lw[k + 1] = lw[k] + (inc - 0.5 * r.squaredNorm() * dt);
      }
      w.weight_T[p] = std::exp(lw[N]);
    }
  });
  return w;
}

std::vector<double> pathwise_cost(const SlowPathEnsemble& paths, const ControlProcess& u, const ProblemSpec& spec,
                                  const ParallelOptions& par) {
  if (!(paths.grid == u.grid) || paths.n_paths != u.n_paths)
    throw Error(ErrorCode::GridMismatch, "paths and control disagree in grid or path count");
  const int N = paths.grid.n_steps;
  const double dt = paths.grid.dt();
  std::vector<double> cost(paths.n_paths, 0.0);
  parallel_for(paths.n_paths, par, [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      double acc = 0.0;
      for (int k = 0; k < N; ++k)
        acc += spec.coeffs.l(paths.state(p, k), Eigen::Map<const Vec>(u.at(p, k), u.n_control)) * dt;
      cost[p] = acc + spec.coeffs.h(paths.state(p, N));
    }
  });
  return cost;
}

std::vector<double> default_n_schedule() { return {5.0, 10.0, 20.0, 40.0}; }

namespace {

void check_schedule(const std::vector<double>& s) {
  if (s.size() < 3) throw Error(ErrorCode::InvalidArgument, "n_schedule needs at least three levels");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "n_schedule levels must be positive");
    if (i > 0 && !(s[i] > s[i - 1])) throw Error(ErrorCode::InvalidArgument, "n_schedule must be increasing");
  }
}

bool stabilized(const std::vector<StabilizationRow>& rows, double (*get)(const StabilizationRow&),
                double (*get_se)(const StabilizationRow&)) {
  const auto& a = rows[rows.size() - 2];
  const auto& b = rows.back();
  const double se = std::hypot(get_se(a), get_se(b));
  return std::abs(get(b) - get(a)) < std::max(2.0 * se, 1e-3 * std::abs(get(b)));
}

StabilizationRow level_row(const SlowPathEnsemble& forward, const ControlProcess& u, const WienerEnsemble& wiener,
                           const ProblemSpec& spec, double level, const ParallelOptions& par,
                           std::vector<double>* samples) {
  const LocalizedControl loc = localize(u, level, spec.coeffs.u_star);
  const GirsanovWeight gw = girsanov_weight(forward, loc, wiener, spec, par);
  const std::size_t P = forward.n_paths;
  std::vector<double> weighted(P), energy(P);
  if (samples) {
    const auto cost = pathwise_cost(forward, loc.u_n, spec, par);
    for (std::size_t p = 0; p < P; ++p) weighted[p] = gw.weight_T[p] * cost[p];
  }
  double sw = 0.0, sw2 = 0.0;
  for (std::size_t p = 0; p < P; ++p) {
    energy[p] = gw.weight_T[p] * loc.energy_at(p, loc.tau[p]);
    sw += gw.weight_T[p];
    sw2 += gw.weight_T[p] * gw.weight_T[p];
  }
  StabilizationRow row;
  row.level = level;
  if (samples) {
    const MeanSe c = mean_se(weighted, par);
    row.value = c.mean;
    row.std_error = c.se;
    *samples = std::move(weighted);
  }
  const MeanSe en = mean_se(energy, par);
  row.energy = en.mean;
  row.energy_se = en.se;
  const MeanSe wm = mean_se(gw.weight_T, par);
  row.weight_mean = wm.mean;
  row.weight_se = wm.se;
  row.ess = sw2 > 0.0 ? sw * sw / sw2 : 0.0;
  return row;
}

}  // namespace

CostEstimate cost_weak(const SlowPathEnsemble& forward, const ControlProcess& u, const WienerEnsemble& wiener,
                       const ProblemSpec& spec, const std::vector<double>& n_schedule, const ParallelOptions& par) {
  check_schedule(n_schedule);
  CostEstimate est;
  for (double level : n_schedule) {
    std::vector<double> samples;
    est.table.push_back(level_row(forward, u, wiener, spec, level, par, &samples));
    est.pathwise = std::move(samples);
  }
  const auto& last = est.table.back();
  est.value = last.value;
  est.std_error = last.std_error;
  est.n_level = last.level;
  est.ess = last.ess;
  est.degenerate_weights = last.ess < 0.01 * static_cast<double>(forward.n_paths);
  est.stabilized = stabilized(
      est.table, [](const StabilizationRow& r) { return r.value; }, [](const StabilizationRow& r) { return r.std_error; });
  return est;
}

CostEstimate cost_strong(const ProblemSpec& spec, const FeedbackPolicy& policy, DynamicsMode mode, double epsilon,
                         const WienerEnsemble& wiener, const ReducedDrift& drift, const ParallelOptions& par) {
  const ControlledEnsemble ens = solve_controlled(spec, policy, mode, epsilon, wiener, drift, par);
  const ControlProcess u = control_from_controlled(ens);
  CostEstimate est;
  est.pathwise = pathwise_cost(ens.paths, u, spec, par);
  const MeanSe c = mean_se(est.pathwise, par);
  est.value = c.mean;
  est.std_error = c.se;
  est.ess = static_cast<double>(wiener.n_paths);
  return est;
}

AdmissibilityTable admissibility_diagnostic(const SlowPathEnsemble& forward, const ControlProcess& u,
                                            const WienerEnsemble& wiener, const ProblemSpec& spec,
                                            const std::vector<double>& n_schedule, const ParallelOptions& par) {
  check_schedule(n_schedule);
  AdmissibilityTable t;
  for (double level : n_schedule) t.rows.push_back(level_row(forward, u, wiener, spec, level, par, nullptr));
  for (const auto& r : t.rows) t.supremum = std::max(t.supremum, r.energy);
  t.stabilized = stabilized(
      t.rows, [](const StabilizationRow& r) { return r.energy; }, [](const StabilizationRow& r) { return r.energy_se; });
  return t;
}

}  // namespace slowfast
