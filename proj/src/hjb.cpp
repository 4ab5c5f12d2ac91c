#include "slowfast/hjb.hpp"

#include "slowfast/forward.hpp"

#include <algorithm>
#include <cmath>

namespace slowfast {

namespace {

void check_scalar(const ProblemSpec& spec) {
  if (spec.dims.n_slow != 1 || spec.dims.n_fast != 1 || spec.dims.n_control != 1)
    throw Error(ErrorCode::InvalidArgument, "the HJB oracle is one-dimensional");
  if (!spec.closed_form_hamiltonian || !spec.coeffs.closed_form)
    throw Error(ErrorCode::InvalidArgument, "the HJB oracle needs the closed-form Hamiltonian");
}

Vec scalar(double x) { return Vec::Constant(1, x); }

double interpolate(const std::vector<double>& xs, const std::vector<double>& vs, double x) {
  const double dx = xs[1] - xs[0];
  const double s = std::clamp((x - xs.front()) / dx, 0.0, static_cast<double>(xs.size() - 1));
  const std::size_t i = std::min(static_cast<std::size_t>(s), xs.size() - 2);
  const double w = s - static_cast<double>(i);
  return (1.0 - w) * vs[i] + w * vs[i + 1];
}

}  // namespace

HjbGrid default_hjb_grid(const ProblemSpec& spec, const HjbOptions& options) {
  check_scalar(spec);
  const double x0 = spec.x0[0];
  const double g = std::abs(spec.coeffs.lambda[0]);
  double smax = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double x = x0 - 20.0 + 40.0 * i / 4000.0;
    smax = std::max(smax, std::abs(spec.coeffs.sigma(scalar(x))(0, 0)));
  }
  const double half = std::max(options.width_sd * smax * g * std::sqrt(spec.T), 1e-3);
  HjbGrid grid;
  grid.x_lo = x0 - half;
  grid.x_hi = x0 + half;
  grid.n_x = options.n_x;
  grid.n_t = options.n_t;
  return grid;
}

HjbResult hjb_solve(const ProblemSpec& spec, const HjbGrid& grid, double cfl_safety) {
  check_scalar(spec);
  if (grid.n_x < 4 || !(grid.x_hi > grid.x_lo)) throw Error(ErrorCode::InvalidArgument, "HJB grid is degenerate");
  const int M = grid.n_x;
  const double dx = (grid.x_hi - grid.x_lo) / M;
  const auto bhat = effective_bhat(spec);
  const auto& c = spec.coeffs;
  const double g = c.lambda[0];
  const double A = c.A(0, 0);

  std::vector<double> xs(M + 1), mu(M + 1), diff(M + 1), sg(M + 1), l0(M + 1), r0(M + 1);
  double rate = 0.0;
  for (int i = 0; i <= M; ++i) {
    xs[i] = grid.x_lo + i * dx;
    const Vec x = scalar(xs[i]);
    mu[i] = A * xs[i] + bhat(x)[0];
    sg[i] = c.sigma(x)(0, 0) * g;
    diff[i] = 0.5 * sg[i] * sg[i];
    l0[i] = c.closed_form->l0(x);
    r0[i] = c.closed_form->r0(x)(0, 0);
    rate = std::max(rate, 2.0 * diff[i] / (dx * dx) + std::abs(mu[i]) / dx);
  }
  const double dt_max = cfl_safety / std::max(rate, 1e-300);
  int n_t = grid.n_t;
  if (n_t <= 0) n_t = std::max(1, static_cast<int>(std::ceil(spec.T / dt_max)));
  const double dt = spec.T / n_t;
  if (dt * rate > 1.0)
    throw Error(ErrorCode::CflViolation, "dt * ((sigma g)^2 / dx^2 + |mu| / dx) = " + std::to_string(dt * rate) +
                                             " exceeds 1; use at least " +
                                             std::to_string(static_cast<int>(std::ceil(spec.T * rate))) + " time steps");

  std::vector<double> v(M + 1), next(M + 1);
  for (int i = 0; i <= M; ++i) v[i] = c.h(scalar(xs[i]));
  for (int n = 0; n < n_t; ++n) {
    for (int i = 1; i < M; ++i) {
      const double up = mu[i] >= 0.0 ? (v[i + 1] - v[i]) / dx : (v[i] - v[i - 1]) / dx;
      const double vx = (v[i + 1] - v[i - 1]) / (2.0 * dx);
      const double vxx = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (dx * dx);
      const double rz = r0[i] * sg[i] * vx;  // psi(x, -sigma g v_x) = l0 - (r0 sigma g v_x)^2 / 4
      next[i] = v[i] + dt * (mu[i] * up + diff[i] * vxx + l0[i] - 0.25 * rz * rz);
    }
    next[0] = 2.0 * next[1] - next[2];
    next[M] = 2.0 * next[M - 1] - next[M - 2];
    std::swap(v, next);
  }
  HjbResult out;
  out.grid = grid;
  out.grid.n_t = n_t;
  out.dt = dt;
  out.x = std::move(xs);
  out.v0 = std::move(v);
  out.value = interpolate(out.x, out.v0, spec.x0[0]);
  return out;
}

HjbResult hjb_oracle(const ProblemSpec& spec, const HjbOptions& options) {
  const HjbGrid grid = default_hjb_grid(spec, options);
  HjbResult full = hjb_solve(spec, grid, options.cfl_safety);
  if (options.richardson) {
    HjbGrid half = grid;
    half.n_x = std::max(4, grid.n_x / 2);
    half.n_t = std::max(1, full.grid.n_t / 2);
    full.richardson = std::abs(full.value - hjb_solve(spec, half, options.cfl_safety).value);
  }
  if (options.widening_test) {
    HjbGrid wide = grid;
    const double x0 = spec.x0[0];
    wide.x_lo = x0 - 1.5 * (x0 - grid.x_lo);
    wide.x_hi = x0 + 1.5 * (grid.x_hi - x0);
    wide.n_x = static_cast<int>(std::lround(1.5 * grid.n_x));
    wide.n_t = 0;
    const double v_wide = hjb_solve(spec, wide, options.cfl_safety).value;
    full.widening_change = std::abs(v_wide - full.value) / std::max(std::abs(full.value), 1e-12);
    if (full.widening_change > options.widening_tolerance)
      throw Error(ErrorCode::BoundaryDominance, "widening the domain by 50% moves v(0, x0) by " +
                                                    std::to_string(100.0 * full.widening_change) + "%");
  }
  return full;
}

}  // namespace slowfast
