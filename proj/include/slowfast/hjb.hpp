#pragma once

#include "slowfast/model.hpp"

#include <string>
#include <vector>

namespace slowfast {

struct HjbGrid {
  double x_lo = 0.0;
  double x_hi = 1.0;
  int n_x = 2000;   // number of intervals
  int n_t = 0;      // 0 picks the smallest count satisfying the CFL bound
  std::string boundary = "linear-extrapolation";
};

struct HjbOptions {
  int n_x = 2000;
  int n_t = 0;
  double width_sd = 6.0;      // half-width in units of max|sigma g| sqrt(T)
  double cfl_safety = 0.45;
  bool richardson = true;
  bool widening_test = true;
  double widening_tolerance = 1e-3;
};

struct HjbResult {
  HjbGrid grid;
  double dt = 0.0;
  std::vector<double> x;
  std::vector<double> v0;  // v(0, x_i)
  double value = 0.0;      // v(0, x0)
  double richardson = 0.0; // |v - v_half| at x0
  double widening_change = 0.0;
};

/// One explicit backward march of
///   v_t + (A x + b_hat) v_x + (sigma g)^2 v_xx / 2 + psi(x, -sigma g v_x) = 0,  v(T) = h,
/// upwind in the drift, central elsewhere, linear extrapolation at both ends.
/// Throws CflViolation when a prescribed n_t is too small.
HjbResult hjb_solve(const ProblemSpec& spec, const HjbGrid& grid, double cfl_safety = 0.45);

/// Default domain x0 +- width_sd max|sigma g| sqrt(T), a half-resolution
/// Richardson estimate and the domain-widening self-test (BoundaryDominance).
HjbResult hjb_oracle(const ProblemSpec& spec, const HjbOptions& options = {});

HjbGrid default_hjb_grid(const ProblemSpec& spec, const HjbOptions& options = {});

}  // namespace slowfast
