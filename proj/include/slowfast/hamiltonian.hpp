#pragma once

#include "slowfast/model.hpp"

#include <string>

namespace slowfast {

enum class HamiltonianMethod { closed_form, numeric };

/// psi(x, z) = inf_u { l(x,u) - <z, r(x,u)> } and its minimizer.
struct HamiltonianEval {
  double psi = 0.0;
  Vec u_min;
  HamiltonianMethod method = HamiltonianMethod::closed_form;
  double search_radius = 0.0;
  bool stalled = false;  // numeric search still improving when the iteration cap hit
};

/// psi = l0(x) - |r0(x)^T z|^2 / 4, u_min = r0(x)^T z / 2.
HamiltonianEval psi_closed_form(const Vec& x, const Vec& z, const ScalarField& l0, const MatrixField& r0);

/// Multi-start coordinate descent inside |u| <= 2 c (1 + |z|).
HamiltonianEval psi_numeric(const Vec& x, const Vec& z, const RunningCost& l, const ControlCoupling& r,
                            const AssumptionConstants& constants, const Vec& u_star);

/// Closed form when the problem declares the quadratic structure, numeric otherwise.
HamiltonianEval hamiltonian(const ProblemSpec& spec, const Vec& x, const Vec& z);

Vec feedback(const ProblemSpec& spec, const Vec& x, const Vec& z);

/// psi(x, z) alone.
double psi_value(const ProblemSpec& spec, const Vec& x, const Vec& z);

const char* to_string(HamiltonianMethod m);

}  // namespace slowfast
