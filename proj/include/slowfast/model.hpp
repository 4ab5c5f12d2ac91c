#pragma once

#include "slowfast/common.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace slowfast {

/// Dimensions of the slow space K, the fast/noise space H and the control space U.
struct Dimensions {
  int n_slow = 1;
  int n_fast = 1;
  int n_control = 1;
};

using VectorField = std::function<Vec(const Vec&)>;                  // K -> K
using MatrixField = std::function<Mat(const Vec&)>;                  // K -> L(H, K) or L(U, H)
using ScalarField = std::function<double(const Vec&)>;               // K -> R
using ControlCoupling = std::function<Vec(const Vec&, const Vec&)>;  // (x, u) -> H
using RunningCost = std::function<double(const Vec&, const Vec&)>;   // (x, u) -> R
using BilinearMap = std::function<Vec(const Vec&, const Vec&)>;      // H x H -> H

/// Pieces of the quadratic structure l(x,u) = l0(x) + |u|^2, r(x,u) = r0(x) u,
/// for which the Hamiltonian has a closed form.
struct ClosedFormParts {
  ScalarField l0;
  MatrixField r0;  // n_fast x n_control
};

struct CoefficientSet {
  Mat A;                               // n_slow x n_slow
  VectorField b;
  std::optional<VectorField> b_hat;    // computed from b, sigma, lambda when absent
  MatrixField sigma;                   // n_slow x n_fast
  Vec lambda;                          // diagonal of G
  ControlCoupling r;
  Vec u_star;                          // r(x, u_star) = 0 for all x
  RunningCost l;
  ScalarField h;
  std::optional<BilinearMap> q;        // fast-fast interaction
  bool q_diagonal = false;             // q(v,w)_i = v_i w_i
  std::optional<ClosedFormParts> closed_form;
};

/// User-supplied constants of the standing assumptions on the coefficients.
struct AssumptionConstants {
  double L_b = 0, L_sigma = 0;
  double M_r = 0, L_r = 0;
  double m_l = 0, c_l = 0, M_l = 0, L_l = 0;
  double M_h = 0, L_h = 0;
  double L_ubar = 0;
};

/// Constants implied by the assumptions through the Hamiltonian growth bounds.
struct DerivedConstants {
  double confinement_c = 0;  // minimizers lie in |u| <= c (1 + |z|)
  double M_psi = 0;          // |psi(x,z)| <= M_psi (1 + |z|^2)
  double L_psi = 0;          // |psi(x,z) - psi(x,z')| <= L_psi (1 + |z| + |z'|) |z - z'|
  double C_ubar = 0;         // |ubar(x,z)| <= C_ubar (1 + |z|)
};

DerivedConstants derive_constants(const AssumptionConstants& c, double u_star_norm);

struct ProblemSpec {
  std::string name;
  Dimensions dims;
  CoefficientSet coeffs;
  AssumptionConstants constants;
  double T = 1.0;
  Vec x0;
  bool closed_form_hamiltonian = false;

  DerivedConstants derived() const;
  /// A priori band for the backward component: M_h + M_psi T.
  double y_bound() const;
  Mat G() const { return coeffs.lambda.asDiagonal(); }
};

struct AssumptionCheck {
  std::string name;
  double worst_ratio = 0.0;  // <= 1 means satisfied on every probe
  std::size_t n_probes = 0;
};

struct ValidationReport {
  std::vector<AssumptionCheck> checks;
  std::vector<std::string> failures;
  bool passed = false;
  /// Largest |u(x, z) - u(x, z')| / |z - z'| seen for the closed-form
  /// feedback; reported only, never a failure. NaN without a closed form.
  double measured_L_ubar = std::numeric_limits<double>::quiet_NaN();

  const AssumptionCheck* find(const std::string& name) const;
};

/// Probes every assumption inequality at n_probe random points of
/// [-10, 10]^n and reports the worst violation ratio of each. Throws
/// NonFiniteCoefficient or MissingUStar.
ValidationReport validate_spec(const ProblemSpec& spec, int n_probe, std::uint64_t seed);

/// Named benchmark problems: "scalar-riesz", "wz-sine", "fastfast-diag".
ProblemSpec load_preset(const std::string& name);

std::vector<std::string> preset_names();

}  // namespace slowfast
