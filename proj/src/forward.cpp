#include "slowfast/forward.hpp"

#include <cmath>
#include <random>

namespace slowfast {

namespace {

constexpr double kOverflow = 1e12;

// Jacobian columns of sigma: D[j] = d sigma / d x_j (n_slow x n_fast).
std::vector<Mat> sigma_jacobian(const MatrixField& sigma, const Vec& x, double fd_step) {
  std::vector<Mat> D(x.size());
  Vec xp = x, xm = x;
  for (int j = 0; j < x.size(); ++j) {
    const double h = fd_step * std::max(1.0, std::abs(x[j]));
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    D[j] = (sigma(xp) - sigma(xm)) / (2.0 * h);
    xp[j] = xm[j] = x[j];
    if (!D[j].allFinite()) throw Error(ErrorCode::NonFiniteDerivative, "sigma derivative is not finite");
  }
  return D;
}

// sum_m w_m sum_j D_j(., m) sigma(j, m)
Vec weighted_trace(const MatrixField& sigma, const Vec& weights, const Vec& x, double fd_step) {
  const Mat s = sigma(x);
  const auto D = sigma_jacobian(sigma, x, fd_step);
  Vec out = Vec::Zero(x.size());
  for (int m = 0; m < s.cols(); ++m)
    for (int j = 0; j < x.size(); ++j) out += weights[m] * D[j].col(m) * s(j, m);
  if (!out.allFinite()) throw Error(ErrorCode::NonFiniteDerivative, "correction term is not finite");
  return out;
}

void check_fd(double fd_step) {
  if (!(fd_step > 0.0)) throw Error(ErrorCode::InvalidArgument, "fd_step must be positive");
}

bool state_ok(const Vec& x) {
  for (int i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || std::abs(x[i]) > kOverflow) return false;
  return true;
}

SlowPathEnsemble slow_shell(const ProblemSpec& spec, const TimeGrid& grid, std::size_t n_paths) {
  if (spec.x0.size() != spec.dims.n_slow) throw Error(ErrorCode::InvalidArgument, "x0 has the wrong dimension");
  SlowPathEnsemble out;
  out.grid = grid;
  out.n_paths = n_paths;
  out.n_slow = spec.dims.n_slow;
  out.values.resize(n_paths * (grid.n_steps + 1) * out.n_slow);
  out.overflowed.assign(n_paths, 0);
  for (std::size_t p = 0; p < n_paths; ++p)
    for (int i = 0; i < out.n_slow; ++i) out.at(p, 0)[i] = spec.x0[i];
  return out;
}

void count_overflow(SlowPathEnsemble& out) {
  out.overflow_paths = 0;
  for (char f : out.overflowed) out.overflow_paths += f ? 1 : 0;
}

int eps_substeps(double epsilon, double dt) {
  return std::max(1, static_cast<int>(std::ceil(dt / (epsilon / 10.0) - 1e-12)));
}

// Euler substeps of dX/dt = A X + b(X) + sigma(X) q over one noise step, q frozen.
Vec eps_step(const ProblemSpec& spec, Vec x, const Vec& q, double dt, int n_sub) {
  const double h = dt / n_sub;
  const auto& c = spec.coeffs;
  for (int s = 0; s < n_sub; ++s) x += h * (c.A * x + c.b(x) + c.sigma(x) * q);
  return x;
}

Vec call_policy(const FeedbackPolicy& policy, int k, const Vec& x, const Vec& aux, int n_control) {
  Vec u;
  try {
    u = policy.eval(k, x, aux);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::PolicyEvaluationFailure, std::string("policy threw: ") + e.what());
  }
  if (u.size() != n_control || !u.allFinite())
    throw Error(ErrorCode::PolicyEvaluationFailure, "policy returned a non-finite or mis-sized control at step " +
                                                        std::to_string(k));
  return u;
}

}  // namespace

Vec SlowPathEnsemble::fast_state(std::size_t p, int k) const {
  if (!fast) return Vec();
  return Eigen::Map<const Vec>(fast->at(p, k), fast->n_fast);
}

Vec DriftCorrection::apply(const Vec& x, const Mat& sigma_x) const {
  if (kind == CorrectionKind::gaussian_qhat) return sigma_x * constant;
  return map(x);
}

VectorField corrected_drift(const VectorField& b, const MatrixField& sigma, const Vec& lambda, double fd_step) {
  check_fd(fd_step);
  const Vec w = lambda.array().square().matrix();
  return [b, sigma, w, fd_step](const Vec& x) -> Vec { return b(x) + 0.5 * weighted_trace(sigma, w, x, fd_step); };
}

VectorField sigma2_trace(const MatrixField& sigma, double fd_step) {
  check_fd(fd_step);
  return [sigma, fd_step](const Vec& x) -> Vec {
    const Vec ones = Vec::Ones(sigma(x).cols());
    return weighted_trace(sigma, ones, x, fd_step);
  };
}

VectorField effective_bhat(const ProblemSpec& spec, double fd_step) {
  if (spec.coeffs.b_hat) return *spec.coeffs.b_hat;
  return corrected_drift(spec.coeffs.b, spec.coeffs.sigma, spec.coeffs.lambda, fd_step);
}

DriftCorrection stratonovich_correction(const MatrixField& sigma, const Vec& lambda, double fd_step) {
  // Tr sigma_2 for the field x -> sigma(x) G
  const Vec g = lambda;
  MatrixField sg = [sigma, g](const Vec& x) -> Mat { return sigma(x) * g.asDiagonal(); };
  DriftCorrection c;
  c.kind = CorrectionKind::stratonovich_sigma2;
  auto tr = sigma2_trace(sg, fd_step);
  c.map = [tr](const Vec& x) -> Vec { return 0.5 * tr(x); };
  return c;
}

DriftCorrection qhat_correction(const Vec& q_hat) {
  DriftCorrection c;
  c.kind = CorrectionKind::gaussian_qhat;
  c.constant = q_hat;
  return c;
}

GaussianAverage gaussian_average_q(const BilinearMap& q, const Vec& lambda, int n_quad, std::uint64_t seed,
                                   bool declared_diagonal, QuadratureMethod method) {
  if (n_quad < 1000) throw Error(ErrorCode::InvalidArgument, "n_quad must be at least 1000");
  const int d = static_cast<int>(lambda.size());
  std::mt19937_64 rng(seed ^ 0xb11ea5ull);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);

  auto randn = [&] {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = normal(rng);
    return v;
  };
  for (int trial = 0; trial < 20; ++trial) {
    const Vec v1 = randn(), v2 = randn(), w = randn();
    const double a = coef(rng);
    const Vec l1 = q(a * v1 + v2, w), r1 = a * q(v1, w) + q(v2, w);
    const Vec l2 = q(w, a * v1 + v2), r2 = a * q(w, v1) + q(w, v2);
    const double scale = 1.0 + r1.norm() + r2.norm() + q(v1, w).norm() + q(w, v1).norm();
    if ((l1 - r1).norm() > 1e-9 * scale || (l2 - r2).norm() > 1e-9 * scale)
      throw Error(ErrorCode::NotBilinear, "q fails the bilinearity identity on a random probe");
  }

  GaussianAverage out;
  const bool exact = method == QuadratureMethod::exact || (method == QuadratureMethod::automatic && declared_diagonal);
  if (exact) {
    out.value = Vec::Zero(d);
    for (int i = 0; i < d; ++i) {
      const Vec e = Vec::Unit(d, i);
      out.value += 0.5 * lambda[i] * lambda[i] * q(e, e);
    }
    out.std_error = Vec::Zero(d);
    out.exact = true;
    return out;
  }

  const Vec scale = lambda / std::sqrt(2.0);
  Mat samples(d, n_quad);
  for (int s = 0; s < n_quad; ++s) {
    const Vec w = scale.cwiseProduct(randn());
    samples.col(s) = q(w, w);
  }
  out.value = samples.rowwise().mean();
  const Mat centered = samples.colwise() - out.value;
  const Vec var = centered.array().square().rowwise().sum() / (n_quad - 1);
  out.std_error = (var / n_quad).array().sqrt();
  return out;
}

SlowPathEnsemble solve_forward_eps(const ProblemSpec& spec, std::shared_ptr<const FastPathEnsemble> fast,
                                   const ParallelOptions& par) {
  if (!fast) throw Error(ErrorCode::InvalidArgument, "missing fast ensemble");
  if (fast->n_fast != spec.dims.n_fast) throw Error(ErrorCode::GridMismatch, "fast ensemble dimension differs from the spec");
  SlowPathEnsemble out = slow_shell(spec, fast->grid, fast->n_paths);
  out.scheme = "euler-substep";
  out.provenance = fast->generator == FastGenerator::ou             ? "gamma_ou"
                   : fast->generator == FastGenerator::mollifier    ? "gamma_mollify"
                                                                    : "gamma_ou_quadratic";
  const double dt = fast->grid.dt();
  const int n_sub = eps_substeps(fast->epsilon, dt);
  const int n = spec.dims.n_slow;
  parallel_for(out.n_paths, par, [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      Vec x = spec.x0;
      for (int k = 0; k < out.grid.n_steps; ++k) {
        // a blown-up fast input takes the slow path down with it
        if (fast->frozen(p, k)) out.overflowed[p] = 1;
        if (!out.overflowed[p]) {
          const Vec q = Eigen::Map<const Vec>(fast->at(p, k), fast->n_fast);
          const Vec next = eps_step(spec, x, q, dt, n_sub);
          if (state_ok(next))
            x = next;
          else
            out.overflowed[p] = 1;
        }
        for (int i = 0; i < n; ++i) out.at(p, k + 1)[i] = x[i];
      }
    }
  });
  count_overflow(out);
  out.fast = std::move(fast);
  return out;
}

SlowPathEnsemble solve_forward_reduced(const ProblemSpec& spec, const WienerEnsemble& wiener,
                                       const ReducedDrift& drift, const ParallelOptions& par) {
  if (wiener.n_fast != spec.dims.n_fast) throw Error(ErrorCode::GridMismatch, "noise dimension differs from the spec");
  SlowPathEnsemble out = slow_shell(spec, wiener.grid, wiener.n_paths);
  out.scheme = "euler-maruyama";
  out.provenance = "wiener";
  const auto& c = spec.coeffs;
  const VectorField bdrift = drift.use_bhat ? effective_bhat(spec) : c.b;
  const double dt = wiener.grid.dt();
  const int n = spec.dims.n_slow;
  const int d = spec.dims.n_fast;
  parallel_for(out.n_paths, par, [&](std::size_t b, std::size_t e) {
    Vec gdw(d);
    for (std::size_t p = b; p < e; ++p) {
      Vec x = spec.x0;
      for (int k = 0; k < out.grid.n_steps; ++k) {
        if (!out.overflowed[p]) {
          const Mat s = c.sigma(x);
          Vec mu = c.A * x + bdrift(x);
          if (drift.extra) mu += drift.extra->apply(x, s);
          for (int i = 0; i < d; ++i) gdw[i] = c.lambda[i] * wiener.step(p, k)[i];
          const Vec next = x + mu * dt + s * gdw;
          if (state_ok(next))
            x = next;
          else
            out.overflowed[p] = 1;
        }
        for (int i = 0; i < n; ++i) out.at(p, k + 1)[i] = x[i];
      }
    }
  });
  count_overflow(out);
  return out;
}

ControlledEnsemble solve_controlled(const ProblemSpec& spec, const FeedbackPolicy& policy, DynamicsMode mode,
                                    double epsilon, const WienerEnsemble& wiener, const ReducedDrift& drift,
                                    const ParallelOptions& par) {
  if (wiener.n_fast != spec.dims.n_fast) throw Error(ErrorCode::GridMismatch, "noise dimension differs from the spec");
  const auto& c = spec.coeffs;
  const int n = spec.dims.n_slow;
  const int d = spec.dims.n_fast;
  const int nu = spec.dims.n_control;
  const int N = wiener.grid.n_steps;
  const double dt = wiener.grid.dt();

  ControlledEnsemble out;
  out.paths = slow_shell(spec, wiener.grid, wiener.n_paths);
  out.n_control = nu;
  out.controls.assign(wiener.n_paths * N * nu, 0.0);

  std::shared_ptr<FastPathEnsemble> fast;
  std::optional<OuStepper> stepper;
  int n_sub = 1;
  VectorField bdrift = c.b;
  if (mode == DynamicsMode::eps) {
    stepper.emplace(epsilon, dt);
    n_sub = eps_substeps(epsilon, dt);
    fast = std::make_shared<FastPathEnsemble>();
    fast->grid = wiener.grid;
    fast->n_paths = wiener.n_paths;
    fast->n_fast = d;
    fast->epsilon = epsilon;
    fast->generator = FastGenerator::ou;
    fast->stiffness_warning = is_stiff(epsilon, dt);
    fast->values.assign(wiener.n_paths * (N + 1) * d, 0.0);
    out.paths.scheme = "euler-substep";
    out.paths.provenance = "gamma_ou(controlled)";
  } else {
    bdrift = drift.use_bhat ? effective_bhat(spec) : c.b;
    out.paths.scheme = "euler-maruyama";
    out.paths.provenance = "wiener(controlled)";
  }
  const Mat diffusion = c.lambda.asDiagonal();

  parallel_for(wiener.n_paths, par, [&](std::size_t b, std::size_t e) {
    Vec gdw(d), dI(d);
    for (std::size_t p = b; p < e; ++p) {
      Vec x = spec.x0;
      Vec q = Vec::Zero(mode == DynamicsMode::eps ? d : 0);
      for (int k = 0; k < N; ++k) {
        const double* dW = wiener.step(p, k);
        double* uk = out.controls.data() + (p * N + k) * nu;
        if (out.paths.overflowed[p]) {
          for (int i = 0; i < nu; ++i) uk[i] = c.u_star[i];
          for (int i = 0; i < n; ++i) out.paths.at(p, k + 1)[i] = x[i];
          if (fast)
            for (int i = 0; i < d; ++i) fast->at(p, k + 1)[i] = q[i];
          continue;
        }
        const Vec u = call_policy(policy, k, x, q, nu);
        for (int i = 0; i < nu; ++i) uk[i] = u[i];
        const Vec r = c.r(x, u);
        Vec next;
        if (mode == DynamicsMode::eps) {
          // same arithmetic as shift_semimartingale + gamma_ou
          for (int i = 0; i < d; ++i) {
            double acc = 0.0;
            for (int j = 0; j < d; ++j) acc += diffusion(i, j) * dW[j];
            dI[i] = c.lambda[i] * r[i] * dt + acc;
          }
          next = eps_step(spec, x, q, dt, n_sub);
          stepper->advance(q.data(), dI.data(), d);
          for (int i = 0; i < d; ++i) fast->at(p, k + 1)[i] = q[i];
        } else {
          const Mat s = c.sigma(x);
          Vec mu = c.A * x + bdrift(x);
          if (drift.extra) mu += drift.extra->apply(x, s);
          mu += s * c.lambda.cwiseProduct(r);
          for (int i = 0; i < d; ++i) gdw[i] = c.lambda[i] * dW[i];
          next = x + mu * dt + s * gdw;
        }
        if (state_ok(next))
          x = next;
        else
          out.paths.overflowed[p] = 1;
        for (int i = 0; i < n; ++i) out.paths.at(p, k + 1)[i] = x[i];
      }
    }
  });
  count_overflow(out.paths);
  out.paths.fast = fast;
  return out;
}

}  // namespace slowfast
