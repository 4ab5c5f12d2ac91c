#include "slowfast/noise.hpp"

#include <cmath>
#include <random>

namespace slowfast {

TimeGrid::TimeGrid(double horizon, int steps) : T(horizon), n_steps(steps) {
  if (!(horizon > 0.0) || steps <= 0) throw Error(ErrorCode::InvalidArgument, "time grid needs T > 0 and n_steps > 0");
}

namespace {

std::mt19937_64 path_engine(std::uint64_t master_seed, std::size_t path) {
  const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(master_seed), hi(master_seed), lo(path), hi(path), 0x5eedu};
  return std::mt19937_64(seq);
}

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw Error(ErrorCode::NonPositiveEpsilon, "epsilon must be positive, got " + std::to_string(epsilon));
}

constexpr double kOverflow = 1e12;

}  // namespace

WienerEnsemble sample_wiener(const TimeGrid& grid, std::size_t n_paths, int n_fast, std::uint64_t master_seed,
                             const ParallelOptions& par) {
  if (n_paths < 1 || n_fast < 1) throw Error(ErrorCode::InvalidArgument, "sample_wiener needs n_paths >= 1 and n_fast >= 1");
  WienerEnsemble w;
  w.grid = grid;
  w.n_paths = n_paths;
  w.n_fast = n_fast;
  w.master_seed = master_seed;
  w.increments.resize(n_paths * grid.n_steps * n_fast);
  const double sqrt_dt = std::sqrt(grid.dt());
  const std::size_t per_path = static_cast<std::size_t>(grid.n_steps) * n_fast;
  parallel_for(n_paths, par, [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      auto engine = path_engine(master_seed, p);
      std::normal_distribution<double> normal(0.0, 1.0);
      double* out = w.increments.data() + p * per_path;
      for (std::size_t i = 0; i < per_path; ++i) out[i] = sqrt_dt * normal(engine);
    }
  });
  return w;
}

void SemimartingalePath::increment(std::size_t p, int k, double* out) const {
  const double* dW = wiener->step(p, k);
  const double dt = grid.dt();
  const double* phi = drift.empty() ? nullptr : drift.data() + (p * grid.n_steps + k) * n_fast;
  for (int i = 0; i < n_fast; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n_fast; ++j) acc += diffusion(i, j) * dW[j];
    out[i] = phi ? phi[i] * dt + acc : acc;
  }
}

SemimartingalePath wiener_semimartingale(std::shared_ptr<const WienerEnsemble> wiener, const Vec& lambda) {
  if (lambda.size() != wiener->n_fast) throw Error(ErrorCode::GridMismatch, "lambda size differs from the noise dimension");
  SemimartingalePath s;
  s.grid = wiener->grid;
  s.n_paths = wiener->n_paths;
  s.n_fast = wiener->n_fast;
  s.diffusion = lambda.asDiagonal();
  s.wiener = std::move(wiener);
  return s;
}

SemimartingalePath shift_semimartingale(std::shared_ptr<const WienerEnsemble> base, const Vec& lambda,
                                        std::vector<double> r) {
  const std::size_t expected = base->n_paths * base->grid.n_steps * base->n_fast;
  if (r.size() != expected)
    throw Error(ErrorCode::GridMismatch, "drift has " + std::to_string(r.size()) + " entries, ensemble needs " +
                                             std::to_string(expected));
  SemimartingalePath s = wiener_semimartingale(std::move(base), lambda);
  const int d = s.n_fast;
  for (std::size_t idx = 0; idx < r.size(); ++idx) r[idx] *= lambda[static_cast<int>(idx % d)];
  s.drift = std::move(r);
  return s;
}

OuStepper::OuStepper(double epsilon, double dt) {
  check_epsilon(epsilon);
  const double a = dt / epsilon;
  decay_ = std::exp(-a);
  gain_ = -std::expm1(-a) / dt;  // (1/eps) phi_1(-dt/eps)
  forcing_gain_ = -epsilon * std::expm1(-a);
}

bool is_stiff(double epsilon, double dt) { return dt > epsilon / 5.0; }

namespace {

FastPathEnsemble fast_shell(const SemimartingalePath& input, double epsilon, FastGenerator gen) {
  FastPathEnsemble out;
  out.grid = input.grid;
  out.n_paths = input.n_paths;
  out.n_fast = input.n_fast;
  out.epsilon = epsilon;
  out.generator = gen;
  out.stiffness_warning = is_stiff(epsilon, input.grid.dt());
  out.values.assign(input.n_paths * (input.grid.n_steps + 1) * input.n_fast, 0.0);
  return out;
}

}  // namespace

FastPathEnsemble gamma_ou(const SemimartingalePath& input, double epsilon, const ParallelOptions& par) {
  check_epsilon(epsilon);
  FastPathEnsemble out = fast_shell(input, epsilon, FastGenerator::ou);
  const OuStepper stepper(epsilon, input.grid.dt());
  const int d = input.n_fast;
  parallel_for(input.n_paths, par, [&](std::size_t b, std::size_t e) {
    std::vector<double> dI(d);
    for (std::size_t p = b; p < e; ++p) {
      for (int k = 0; k < input.grid.n_steps; ++k) {
        input.increment(p, k, dI.data());
        double* next = out.at(p, k + 1);
        std::copy_n(out.at(p, k), d, next);
        stepper.advance(next, dI.data(), d);
      }
    }
  });
  return out;
}

FastPathEnsemble gamma_ou_quadratic(const SemimartingalePath& input, double epsilon, const BilinearMap& q,
                                    const ParallelOptions& par) {
  check_epsilon(epsilon);
  FastPathEnsemble out = fast_shell(input, epsilon, FastGenerator::ou_quadratic);
  const OuStepper stepper(epsilon, input.grid.dt());
  const int d = input.n_fast;
  std::vector<char> overflowed(input.n_paths, 0);
  out.overflow_step.assign(input.n_paths, -1);
  parallel_for(input.n_paths, par, [&](std::size_t b, std::size_t e) {
    std::vector<double> dI(d);
    Vec state(d);
    for (std::size_t p = b; p < e; ++p) {
      for (int k = 0; k < input.grid.n_steps; ++k) {
        const double* cur = out.at(p, k);
        double* next = out.at(p, k + 1);
        if (overflowed[p]) {
          std::copy_n(cur, d, next);
          continue;
        }
        for (int i = 0; i < d; ++i) state[i] = cur[i];
        const Vec forcing = q(state, state);
        input.increment(p, k, dI.data());
        std::copy_n(cur, d, next);
        stepper.advance(next, dI.data(), d);
        for (int i = 0; i < d; ++i) next[i] += stepper.forcing_gain() * forcing[i];
        bool ok = true;
        for (int i = 0; i < d; ++i) ok = ok && std::isfinite(next[i]) && std::abs(next[i]) <= kOverflow;
        if (!ok) {
          overflowed[p] = 1;
          out.overflow_step[p] = k;
          std::copy_n(cur, d, next);
        }
      }
    }
  });
  for (char f : overflowed) out.overflow_paths += f ? 1 : 0;
  return out;
}

MollifierKernel MollifierKernel::polynomial_bump() {
  MollifierKernel k;
  k.rho = [](double s) { return (s <= 0.0 || s >= 1.0) ? 0.0 : 30.0 * s * s * (1.0 - s) * (1.0 - s); };
  k.support_lo = 0.0;
  k.support_hi = 1.0;
  return k;
}

std::vector<double> mollifier_weights(const MollifierKernel& kernel, double epsilon, double dt) {
  check_epsilon(epsilon);
  if (kernel.support_lo < 0.0)
    throw Error(ErrorCode::NonAdaptedKernel, "kernel support reaches negative lags; the convolution would look ahead");
  const int M = static_cast<int>(std::floor(epsilon * kernel.support_hi / dt + 1e-9));
  std::vector<double> w(M + 1, 0.0);  // w[0] is never used: lag 0 would see the current increment
  double mass = 0.0;
  for (int m = 1; m <= M; ++m) {
    w[m] = kernel.rho(m * dt / epsilon) / epsilon;
    mass += w[m] * dt;
  }
  if (!(mass > 0.0))
    throw Error(ErrorCode::InvalidArgument, "mollifier support is narrower than the time step; refine the grid");
  for (double& x : w) x /= mass;
  return w;
}

FastPathEnsemble gamma_mollify(const SemimartingalePath& input, double epsilon, const MollifierKernel& kernel,
                               const ParallelOptions& par) {
  const auto weights = mollifier_weights(kernel, epsilon, input.grid.dt());
  FastPathEnsemble out = fast_shell(input, epsilon, FastGenerator::mollifier);
  out.stiffness_warning = false;
  const int d = input.n_fast;
  const int N = input.grid.n_steps;
  const int M = static_cast<int>(weights.size()) - 1;
  parallel_for(input.n_paths, par, [&](std::size_t b, std::size_t e) {
    std::vector<double> dI(static_cast<std::size_t>(N) * d);
    for (std::size_t p = b; p < e; ++p) {
      for (int k = 0; k < N; ++k) input.increment(p, k, dI.data() + static_cast<std::size_t>(k) * d);
      for (int k = 1; k <= N; ++k) {
        double* o = out.at(p, k);
        const int m_max = std::min(M, k);
        for (int m = 1; m <= m_max; ++m) {
          const double wm = weights[m];
          const double* inc = dI.data() + static_cast<std::size_t>(k - m) * d;
          for (int i = 0; i < d; ++i) o[i] += wm * inc[i];
        }
      }
    }
  });
  return out;
}

}  // namespace slowfast
