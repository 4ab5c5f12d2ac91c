#pragma once

#include "slowfast/forward.hpp"
#include "slowfast/regression.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace slowfast {

/// Driver evaluated as driver(x, dual) with dual = -Z; see solve_bsde.
using Driver = std::function<double(const Vec&, const Vec&)>;

/// How Z_k is estimated. Both target E[Y_{k+1} dW_k | state_k] / dt.
/// joint: one least-squares fit of Y_{k+1} on [phi, phi dW / sqrt(dt)].
/// increment: regress (Y_{k+1} - m_k) dW_k / dt on phi after fitting m_k.
enum class ZEstimator { joint, increment };

struct BsdeOptions {
  BasisSpec basis;
  double clip_multiplier = 10.0;
  std::optional<double> z_clip;   // overrides clip_multiplier * y_bound / sqrt(T)
  int picard_sweeps = 1;
  std::optional<double> y_bound;  // overrides M_h + M_psi T
  Driver driver;                  // overrides the Hamiltonian when set
  bool compute_bmo = true;
  ZEstimator z_estimator = ZEstimator::joint;
  // with a fast input, regress on (X + eps sigma(X) Q, Q) instead of (X, Q)
  bool fast_corrector = true;
};

struct BmoDiagnostics {
  std::vector<double> profile;  // max over paths of E[sum_{j>=k} |Z_j|^2 dt | state_k], k = 0..N
  double max = 0.0;
};

struct BsdeSolution {
  TimeGrid grid;
  std::size_t n_paths = 0;
  int n_fast = 1;
  int n_slow = 1;
  bool uses_fast_state = false;  // regression state is (X, Q)
  double corrector = 0.0;        // eps of the shifted slow coordinate, 0 = raw X
  MatrixField sigma;
  std::vector<double> Y;         // [path][step 0..N]
  std::vector<double> Z;         // [path][step 0..N-1][coordinate]
  double y0 = 0.0;
  BasisSpec basis;
  double z_clip = 0.0;
  double y_bound = 0.0;
  std::size_t y_violations = 0;  // un-clipped |Y| > y_bound, over (path, step) pairs
  double y_violation_rate = 0.0;
  std::size_t z_clipped = 0;
  int ridge_steps = 0;
  double max_condition = 1.0;
  int picard_sweeps = 1;
  std::vector<RegressionFit> y_fit;  // conditional mean of the next Y, per step
  std::vector<RegressionFit> z_fit;
  Driver driver;
  BmoDiagnostics bmo;

  double y(std::size_t p, int k) const { return Y[p * (grid.n_steps + 1) + k]; }
  const double* z(std::size_t p, int k) const { return Z.data() + (p * grid.n_steps + k) * n_fast; }

  /// Regression surfaces at step k, evaluated off-sample. fast is ignored
  /// unless the solution was fitted on (X, Q).
  Vec z_at(int k, const Vec& x, const Vec& fast) const;
  Vec regression_state(const Vec& x, const Vec& fast) const;
  double y_at(int k, const Vec& x, const Vec& fast) const;
};

/// Backward regression scheme for -dY = psi(X, -Z) dt - Z dW, Y_T = h(X_T).
///
/// The dual variable of the Hamiltonian is -Z: with the controlled drift
/// sigma G r and this sign of the martingale term, Y_0 is the optimal cost
/// and the optimal feedback is ubar(X, -Z).
BsdeSolution solve_bsde(const SlowPathEnsemble& forward, const WienerEnsemble& wiener, const ProblemSpec& spec,
                        const BsdeOptions& options = {}, const ParallelOptions& par = {});

BmoDiagnostics bmo_diagnostic(const BsdeSolution& solution, const SlowPathEnsemble& forward, const BasisSpec& basis,
                              const ParallelOptions& par = {});

/// Y at t = 0; throws NonDegenerateInitialValue if it varies across paths.
double y0_value(const BsdeSolution& solution);

/// h(X_N) + sum_k driver(X_k, -Z_k) dt per path. Its mean is Y_0 up to
/// regression error and its spread gives the Monte Carlo error of Y_0.
std::vector<double> pathwise_y0(const BsdeSolution& solution, const SlowPathEnsemble& forward, const ProblemSpec& spec);

/// u = ubar(x, -Z_k(x, q)) from the solution's regression surfaces.
FeedbackPolicy optimal_feedback(const ProblemSpec& spec, std::shared_ptr<const BsdeSolution> solution);

}  // namespace slowfast
