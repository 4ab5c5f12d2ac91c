#pragma once

#include "slowfast/common.hpp"
#include "slowfast/model.hpp"
#include "slowfast/parallel.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace slowfast {

/// Uniform grid t_k = k T / n_steps on [0, T].
struct TimeGrid {
  double T = 1.0;
  int n_steps = 1;

  TimeGrid() = default;
  TimeGrid(double horizon, int steps);

  double dt() const { return T / n_steps; }
  double time(int k) const { return k == n_steps ? T : k * dt(); }
  bool operator==(const TimeGrid& o) const { return T == o.T && n_steps == o.n_steps; }
};

/// Brownian increments, stored path-major as [path][step][coordinate].
/// Path p is drawn from its own substream seeded by (master_seed, p), so the
/// ensemble does not depend on how paths are distributed over workers.
struct WienerEnsemble {
  TimeGrid grid;
  std::size_t n_paths = 0;
  int n_fast = 1;
  std::uint64_t master_seed = 0;
  std::vector<double> increments;

  const double* step(std::size_t p, int k) const {
    return increments.data() + (p * grid.n_steps + k) * n_fast;
  }
  double* step(std::size_t p, int k) { return increments.data() + (p * grid.n_steps + k) * n_fast; }
  double dW(std::size_t p, int k, int i) const { return step(p, k)[i]; }
};

WienerEnsemble sample_wiener(const TimeGrid& grid, std::size_t n_paths, int n_fast,
                             std::uint64_t master_seed, const ParallelOptions& par = {});

/// Discretized Ito semimartingale dI = Phi dt + Psi dW with constant Psi.
struct SemimartingalePath {
  TimeGrid grid;
  std::size_t n_paths = 0;
  int n_fast = 1;
  std::vector<double> drift;  // Phi, [path][step][coordinate]; empty means zero
  Mat diffusion;              // Psi, n_fast x n_fast
  std::shared_ptr<const WienerEnsemble> wiener;

  /// dI_k = Phi_k dt + Psi dW_k, written into out (size n_fast).
  void increment(std::size_t p, int k, double* out) const;
};

/// I = G W for the given diagonal G.
SemimartingalePath wiener_semimartingale(std::shared_ptr<const WienerEnsemble> wiener, const Vec& lambda);

/// Phi = G r, Psi = G: the noise seen by a control shifting W by \int r ds.
SemimartingalePath shift_semimartingale(std::shared_ptr<const WienerEnsemble> base, const Vec& lambda,
                                        std::vector<double> r);

enum class FastGenerator { ou, mollifier, ou_quadratic };

struct FastPathEnsemble {
  TimeGrid grid;
  std::size_t n_paths = 0;
  int n_fast = 1;
  double epsilon = 1.0;
  FastGenerator generator = FastGenerator::ou;
  bool stiffness_warning = false;
  std::size_t overflow_paths = 0;
  std::vector<int> overflow_step;  // per path, first frozen step; empty or -1 when finite throughout
  std::vector<double> values;      // [path][step 0..n_steps][coordinate]

  bool frozen(std::size_t p, int k) const {
    return !overflow_step.empty() && overflow_step[p] >= 0 && k >= overflow_step[p];
  }

  const double* at(std::size_t p, int k) const { return values.data() + (p * (grid.n_steps + 1) + k) * n_fast; }
  double* at(std::size_t p, int k) { return values.data() + (p * (grid.n_steps + 1) + k) * n_fast; }
};

/// One exponential-Euler step of dQ = -(1/eps) Q dt + (1/eps) dI (+ q(Q,Q) dt),
/// exact for increments dI that are linear in time over the step.
class OuStepper {
 public:
  OuStepper(double epsilon, double dt);

  double decay() const { return decay_; }
  double input_gain() const { return gain_; }
  /// q(Q,Q) held at the left point and integrated against the linear part.
  double forcing_gain() const { return forcing_gain_; }

  void advance(double* q, const double* dI, int n) const {
    for (int i = 0; i < n; ++i) q[i] = decay_ * q[i] + gain_ * dI[i];
  }

 private:
  double decay_;
  double gain_;
  double forcing_gain_;
};

/// Stiffness threshold for the fast input: dt <= eps / 5.
bool is_stiff(double epsilon, double dt);

/// OU stochastic convolution (1/eps) \int e^{-(t-s)/eps} dI_s with Q_0 = 0.
FastPathEnsemble gamma_ou(const SemimartingalePath& input, double epsilon, const ParallelOptions& par = {});

/// Same as gamma_ou with the additional fast-fast drift q(Q,Q) dt.
FastPathEnsemble gamma_ou_quadratic(const SemimartingalePath& input, double epsilon, const BilinearMap& q,
                                    const ParallelOptions& par = {});

/// Unit-mass kernel rho supported in [support_lo, support_hi].
struct MollifierKernel {
  std::function<double(double)> rho;
  double support_lo = 0.0;
  double support_hi = 1.0;

  /// The polynomial bump 30 s^2 (1 - s)^2 on [0, 1].
  static MollifierKernel polynomial_bump();
};

/// Discrete weights rho_eps(m dt), m = 1..M, normalized to unit mass on the grid.
std::vector<double> mollifier_weights(const MollifierKernel& kernel, double epsilon, double dt);

/// Derivative of the adapted mollification rho_eps * I, i.e.
/// sum_j rho_eps(t_k - t_j) dI_j over increments strictly before t_k.
FastPathEnsemble gamma_mollify(const SemimartingalePath& input, double epsilon, const MollifierKernel& kernel,
                               const ParallelOptions& par = {});

}  // namespace slowfast
