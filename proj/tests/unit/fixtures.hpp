#pragma once

#include "slowfast/model.hpp"

#include <cmath>

namespace fixtures {

using slowfast::Mat;
using slowfast::Vec;

// dX = (a x + drift) dt + s g dW with control coupling r(x,u) = u and cost
// l = l0(x) + u^2; h given. Constants are loose but valid for the tests.
inline slowfast::ProblemSpec linear_1d(double a, double drift, double s, double g, double x0 = 0.0) {
  slowfast::ProblemSpec p;
  p.name = "linear-1d";
  p.dims = {1, 1, 1};
  auto& c = p.coeffs;
  c.A = Mat::Constant(1, 1, a);
  c.b = [drift](const Vec& x) -> Vec { return Vec::Constant(x.size(), drift); };
  c.b_hat = c.b;
  c.sigma = [s](const Vec&) -> Mat { return Mat::Constant(1, 1, s); };
  c.lambda = Vec::Constant(1, g);
  c.u_star = Vec::Zero(1);
  c.r = [](const Vec&, const Vec& u) -> Vec { return u; };
  c.l = [](const Vec& x, const Vec& u) { return 1.0 / (1.0 + x.squaredNorm()) + u.squaredNorm(); };
  c.h = [](const Vec& x) { return 1.0 / (1.0 + x.squaredNorm()); };
  c.closed_form = slowfast::ClosedFormParts{[](const Vec& x) { return 1.0 / (1.0 + x.squaredNorm()); },
                                            [](const Vec&) -> Mat { return Mat::Identity(1, 1); }};
  p.constants.L_b = 0.0;
  p.constants.L_sigma = 0.0;
  p.constants.M_r = 1.0;
  p.constants.L_r = 1.0;
  p.constants.m_l = 1.0;
  p.constants.M_l = 1.0;
  p.constants.L_l = 0.65;
  p.constants.M_h = 1.0;
  p.constants.L_h = 0.65;
  p.constants.L_ubar = 0.5;
  p.T = 1.0;
  p.x0 = Vec::Constant(1, x0);
  p.closed_form_hamiltonian = true;
  return p;
}

inline double sample_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace fixtures
