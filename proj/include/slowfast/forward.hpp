#pragma once

#include "slowfast/model.hpp"
#include "slowfast/noise.hpp"
#include "slowfast/policy.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace slowfast {

/// Slow-state paths X, [path][step 0..n_steps][coordinate].
struct SlowPathEnsemble {
  TimeGrid grid;
  std::size_t n_paths = 0;
  int n_slow = 1;
  std::vector<double> values;
  std::string scheme;
  std::string provenance;
  std::size_t overflow_paths = 0;
  std::vector<char> overflowed;
  /// Fast component driving the paths (eps dynamics only); it completes the
  /// Markov state used by the backward regression.
  std::shared_ptr<const FastPathEnsemble> fast;

  const double* at(std::size_t p, int k) const { return values.data() + (p * (grid.n_steps + 1) + k) * n_slow; }
  double* at(std::size_t p, int k) { return values.data() + (p * (grid.n_steps + 1) + k) * n_slow; }
  Vec state(std::size_t p, int k) const { return Eigen::Map<const Vec>(at(p, k), n_slow); }
  Vec fast_state(std::size_t p, int k) const;
  bool overflow() const { return overflow_paths > 0; }
};

enum class CorrectionKind { ito_correction_bhat, stratonovich_sigma2, gaussian_qhat };

struct DriftCorrection {
  CorrectionKind kind = CorrectionKind::ito_correction_bhat;
  VectorField map;  // K -> K, for the first two kinds
  Vec constant;     // H-vector q_hat, entering as sigma(x) q_hat

  Vec apply(const Vec& x, const Mat& sigma_x) const;
};

constexpr double kDefaultFdStep = 1e-4;

/// x -> b(x) + 1/2 sum_m lambda_m^2 sum_j D_j sigma^{., m}(x) sigma^{j, m}(x),
/// derivatives by central differences with relative step fd_step.
VectorField corrected_drift(const VectorField& b, const MatrixField& sigma, const Vec& lambda,
                            double fd_step = kDefaultFdStep);

/// x -> sum_m grad(sigma(x) e_m) sigma(x) e_m, the trace of the Ito-Stratonovich correction map.
VectorField sigma2_trace(const MatrixField& sigma, double fd_step = kDefaultFdStep);

/// The problem's own b_hat if given, otherwise corrected_drift(b, sigma, lambda).
VectorField effective_bhat(const ProblemSpec& spec, double fd_step = kDefaultFdStep);

/// Stratonovich-to-Ito drift 1/2 Tr sigma_2 for the noise sigma(x) G dW.
DriftCorrection stratonovich_correction(const MatrixField& sigma, const Vec& lambda, double fd_step = kDefaultFdStep);

DriftCorrection qhat_correction(const Vec& q_hat);

enum class QuadratureMethod { automatic, monte_carlo, exact };

struct GaussianAverage {
  Vec value;
  Vec std_error;
  bool exact = false;
};

/// q_hat = \int q(w, w) N(0, G^2 / 2)(dw). The exact path uses
/// q_hat = sum_i (lambda_i^2 / 2) q(e_i, e_i), valid because the covariance
/// is diagonal; automatic selects it when the map is declared diagonal.
GaussianAverage gaussian_average_q(const BilinearMap& q, const Vec& lambda, int n_quad, std::uint64_t seed,
                                   bool declared_diagonal, QuadratureMethod method = QuadratureMethod::automatic);

/// Explicit Euler for dX/dt = A X + b(X) + sigma(X) Q_t, with Q held at its
/// left-point value over ceil(dt / (eps / 10)) substeps of each noise step.
SlowPathEnsemble solve_forward_eps(const ProblemSpec& spec, std::shared_ptr<const FastPathEnsemble> fast,
                                   const ParallelOptions& par = {});

struct ReducedDrift {
  bool use_bhat = true;  // drift A x + b_hat(x); otherwise A x + b(x)
  std::optional<DriftCorrection> extra;
};

/// Euler-Maruyama for dX = (A X + b_hat(X) [+ extra]) dt + sigma(X) G dW.
SlowPathEnsemble solve_forward_reduced(const ProblemSpec& spec, const WienerEnsemble& wiener,
                                       const ReducedDrift& drift = {}, const ParallelOptions& par = {});

enum class DynamicsMode { eps, reduced };

struct ControlledEnsemble {
  SlowPathEnsemble paths;
  int n_control = 1;
  std::vector<double> controls;  // [path][step][coordinate]

  const double* control(std::size_t p, int k) const {
    return controls.data() + (p * paths.grid.n_steps + k) * n_control;
  }
};

/// Controlled dynamics under state feedback evaluated at the left point.
/// reduced: adds sigma(X) G r(X, u) dt to the reduced drift.
/// eps: the OU fast variable is driven by G (dW + r(X, u) dt).
ControlledEnsemble solve_controlled(const ProblemSpec& spec, const FeedbackPolicy& policy, DynamicsMode mode,
                                    double epsilon, const WienerEnsemble& wiener, const ReducedDrift& drift = {},
                                    const ParallelOptions& par = {});

}  // namespace slowfast
