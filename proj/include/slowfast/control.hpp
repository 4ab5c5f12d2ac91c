#pragma once

#include "slowfast/bsde.hpp"
#include "slowfast/forward.hpp"

#include <string>
#include <vector>

namespace slowfast {

/// Control values u, [path][step 0..N-1][coordinate].
struct ControlProcess {
  TimeGrid grid;
  std::size_t n_paths = 0;
  int n_control = 1;
  std::vector<double> u;
  std::string provenance;

  const double* at(std::size_t p, int k) const { return u.data() + (p * grid.n_steps + k) * n_control; }
  double* at(std::size_t p, int k) { return u.data() + (p * grid.n_steps + k) * n_control; }
};

ControlProcess control_from_controlled(const ControlledEnsemble& ens, std::string provenance = "solve_controlled");

/// Evaluates a feedback policy along given paths (u_k from X_k and Q_k).
ControlProcess control_from_policy(const SlowPathEnsemble& forward, const FeedbackPolicy& policy, int n_control,
                                   const ParallelOptions& par = {});

/// u_k = ubar(X_k, -Z_k) with the solution's pathwise Z values.
ControlProcess control_from_bsde(const ProblemSpec& spec, const SlowPathEnsemble& forward,
                                 const BsdeSolution& solution, const ParallelOptions& par = {});

struct LocalizedControl {
  double level = 0.0;
  std::vector<int> tau;  // first step with running energy >= level, or N
  ControlProcess u_n;    // u before tau, u_star from tau on

  /// sum_{j < k} |u_j|^2 dt of the base control.
  std::vector<double> energy;  // [path][step 0..N]
  double energy_at(std::size_t p, int k) const { return energy[p * (u_n.grid.n_steps + 1) + k]; }
};

LocalizedControl localize(const ControlProcess& u, double level, const Vec& u_star);

struct GirsanovWeight {
  TimeGrid grid;
  std::size_t n_paths = 0;
  std::vector<double> log_weight;  // [path][step 0..N]
  std::vector<double> weight_T;

  double log_at(std::size_t p, int k) const { return log_weight[p * (grid.n_steps + 1) + k]; }
};

/// log E_{k+1} = log E_k + <r_k, dW_k> - |r_k|^2 dt / 2, r_k = r(X_k, u_n at k).
GirsanovWeight girsanov_weight(const SlowPathEnsemble& forward, const LocalizedControl& loc, const WienerEnsemble& wiener,
                               const ProblemSpec& spec, const ParallelOptions& par = {});

struct StabilizationRow {
  double level = 0.0;
  double value = 0.0;
  double std_error = 0.0;
  double ess = 0.0;
  double energy = 0.0;  // E[E_T int_0^tau |u|^2]
  double energy_se = 0.0;
  double weight_mean = 0.0;
  double weight_se = 0.0;
};

struct CostEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double n_level = 0.0;
  std::vector<StabilizationRow> table;
  bool stabilized = true;
  bool degenerate_weights = false;
  double ess = 0.0;
  std::vector<double> pathwise;  // per-path cost samples at the reported level (weighted for cost_weak)
};

std::vector<double> default_n_schedule();

/// Weighted cost E[E_T (int l dt + h(X_T))] along uncontrolled paths, for
/// every level of the schedule.
CostEstimate cost_weak(const SlowPathEnsemble& forward, const ControlProcess& u, const WienerEnsemble& wiener,
                       const ProblemSpec& spec, const std::vector<double>& n_schedule,
                       const ParallelOptions& par = {});

/// Direct simulation of the controlled dynamics and the unweighted cost.
CostEstimate cost_strong(const ProblemSpec& spec, const FeedbackPolicy& policy, DynamicsMode mode, double epsilon,
                         const WienerEnsemble& wiener, const ReducedDrift& drift = {},
                         const ParallelOptions& par = {});

struct AdmissibilityTable {
  std::vector<StabilizationRow> rows;
  double supremum = 0.0;
  bool stabilized = false;
};

AdmissibilityTable admissibility_diagnostic(const SlowPathEnsemble& forward, const ControlProcess& u,
                                            const WienerEnsemble& wiener, const ProblemSpec& spec,
                                            const std::vector<double>& n_schedule, const ParallelOptions& par = {});

/// Pathwise running cost sum_k l(X_k, u_k) dt + h(X_N).
std::vector<double> pathwise_cost(const SlowPathEnsemble& paths, const ControlProcess& u, const ProblemSpec& spec,
                                  const ParallelOptions& par = {});

}  // namespace slowfast
