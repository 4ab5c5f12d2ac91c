#include "slowfast/bsde.hpp"

#include "slowfast/hamiltonian.hpp"

#include <algorithm>
#include <cmath>

namespace slowfast {

namespace {

Mat states_at(const SlowPathEnsemble& fw, const BsdeSolution& sol, int k) {
  const bool with_fast = sol.uses_fast_state && fw.fast;
  const int n = fw.n_slow;
  const int d = with_fast ? fw.fast->n_fast : 0;
  Mat S(n + d, static_cast<Eigen::Index>(fw.n_paths));
  for (std::size_t p = 0; p < fw.n_paths; ++p) {
    if (with_fast) {
      S.col(p) = sol.regression_state(fw.state(p, k), fw.fast_state(p, k));
    } else {
      const double* x = fw.at(p, k);
      for (int i = 0; i < n; ++i) S(i, p) = x[i];
    }
  }
  return S;
}

double clip_band(double y, double bound) { return std::clamp(y, -bound, bound); }

bool clip_norm(double* z, int d, double level) {
  double nrm2 = 0.0;
  for (int i = 0; i < d; ++i) nrm2 += z[i] * z[i];
  if (nrm2 <= level * level) return false;
  const double s = level / std::sqrt(nrm2);
  for (int i = 0; i < d; ++i) z[i] *= s;
  return true;
}

}  // namespace

Vec BsdeSolution::regression_state(const Vec& x, const Vec& fast) const {
  if (!uses_fast_state) return x;
  Vec s(x.size() + fast.size());
  // the fast input moves X by about eps sigma(X) Q over its relaxation time,
  // so the shifted coordinate separates what the next increment can change
  if (corrector > 0.0)
    s << x + corrector * (sigma(x) * fast), fast;
  else
    s << x, fast;
  return s;
}

Vec BsdeSolution::z_at(int k, const Vec& x, const Vec& fast) const {
  Vec z = z_fit.at(k).predict(regression_state(x, fast));
  clip_norm(z.data(), n_fast, z_clip);
  return z;
}

double BsdeSolution::y_at(int k, const Vec& x, const Vec& fast) const {
  if (k == grid.n_steps) throw Error(ErrorCode::InvalidArgument, "y_at is defined on steps 0..N-1");
  const Vec s = regression_state(x, fast);
  const double m = y_fit.at(k).predict(s)[0];
  return clip_band(m + grid.dt() * driver(x, -z_at(k, x, fast)), y_bound);
}

BsdeSolution solve_bsde(const SlowPathEnsemble& forward, const WienerEnsemble& wiener, const ProblemSpec& spec,
                        const BsdeOptions& options, const ParallelOptions& par) {
  if (!(forward.grid == wiener.grid) || forward.n_paths != wiener.n_paths)
    throw Error(ErrorCode::GridMismatch, "forward ensemble and noise do not share grid and paths");
  if (wiener.n_fast != spec.dims.n_fast) throw Error(ErrorCode::GridMismatch, "noise dimension differs from the spec");
  if (options.picard_sweeps < 1) throw Error(ErrorCode::InvalidArgument, "picard_sweeps must be at least 1");

  const int N = forward.grid.n_steps;
  const double dt = forward.grid.dt();
  const std::size_t P = forward.n_paths;
  const int d = wiener.n_fast;

  BsdeSolution sol;
  sol.grid = forward.grid;
  sol.n_paths = P;
  sol.n_fast = d;
  sol.n_slow = forward.n_slow;
  sol.uses_fast_state = static_cast<bool>(forward.fast);
  if (sol.uses_fast_state && options.fast_corrector) {
    sol.corrector = forward.fast->epsilon;
    sol.sigma = spec.coeffs.sigma;
  }
  sol.basis = options.basis;
  sol.picard_sweeps = options.picard_sweeps;
  sol.y_bound = options.y_bound ? *options.y_bound : spec.y_bound();
  sol.z_clip = options.z_clip ? *options.z_clip : options.clip_multiplier * sol.y_bound / std::sqrt(forward.grid.T);
  if (options.driver) {
    sol.driver = options.driver;
  } else {
    sol.driver = [spec](const Vec& x, const Vec& dual) { return psi_value(spec, x, dual); };
  }
  sol.Y.assign(P * (N + 1), 0.0);
  sol.Z.assign(P * N * d, 0.0);
  sol.y_fit.resize(N);
  sol.z_fit.resize(N);

  // terminal condition, exact
  Vec xi(static_cast<Eigen::Index>(P));
  for (std::size_t p = 0; p < P; ++p) {
    xi[p] = spec.coeffs.h(forward.state(p, N));
    sol.Y[p * (N + 1) + N] = xi[p];
  }

  // driver values of the previous sweep, [path][step]
  std::vector<double> f_prev;

  for (int sweep = 1; sweep <= options.picard_sweeps; ++sweep) {
    const bool first = sweep == 1;
    sol.y_violations = 0;
    sol.z_clipped = 0;
    sol.ridge_steps = 0;
    sol.max_condition = 1.0;
    // pathwise forward-looking target: Y_{k+1} on the first sweep,
    // xi + sum_{j>k} f_prev_j dt afterwards
    Vec target = xi;
    std::vector<double> f_new(P * N, 0.0);

    for (int k = N - 1; k >= 0; --k) {
      const Mat S = states_at(forward, sol, k);
      Mat m_fit, z_fitted;
      if (options.z_estimator == ZEstimator::joint) {
        Mat inc(d, static_cast<Eigen::Index>(P));
        for (std::size_t p = 0; p < P; ++p) {
          const double* dW = wiener.step(p, k);
          for (int i = 0; i < d; ++i) inc(i, p) = dW[i];
        }
        JointFit jf = regress_with_increments(options.basis, S, target, inc, dt, par);
        sol.y_fit[k] = std::move(jf.level);
        sol.z_fit[k] = std::move(jf.slope);
        m_fit = std::move(jf.level_fitted);
        z_fitted = std::move(jf.slope_fitted);
      } else {
        sol.y_fit[k] = regress(options.basis, S, target.transpose(), par, &m_fit);
        Mat zt(d, static_cast<Eigen::Index>(P));
        for (std::size_t p = 0; p < P; ++p) {
          const double resid = target[p] - m_fit(0, p);
          const double* dW = wiener.step(p, k);
          for (int i = 0; i < d; ++i) zt(i, p) = resid * dW[i] / dt;
        }
        sol.z_fit[k] = regress(options.basis, S, zt, par, &z_fitted);
      }
      for (const auto* f : {&sol.y_fit[k], &sol.z_fit[k]}) {
        sol.ridge_steps += f->ridge ? 1 : 0;
        sol.max_condition = std::max(sol.max_condition, f->condition);
      }

      std::vector<char> zc(P, 0), yv(P, 0);
      parallel_for(P, par, [&](std::size_t b, std::size_t e) {
        for (std::size_t p = b; p < e; ++p) {
          double* z = sol.Z.data() + (p * N + k) * d;
          for (int i = 0; i < d; ++i) z[i] = z_fitted(i, p);
          zc[p] = clip_norm(z, d, sol.z_clip);
          const Vec x = forward.state(p, k);
          const Vec dual = -Eigen::Map<const Vec>(z, d);
          const double f_now = sol.driver(x, dual);
          f_new[p * N + k] = f_now;
          const double f_use = first ? f_now : f_prev[p * N + k];
          const double y = m_fit(0, p) + dt * f_use;
          yv[p] = std::abs(y) > sol.y_bound;
          sol.Y[p * (N + 1) + k] = clip_band(y, sol.y_bound);
        }
      });
      for (std::size_t p = 0; p < P; ++p) {
        sol.z_clipped += zc[p];
        sol.y_violations += yv[p];
        if (first)
          target[p] = sol.Y[p * (N + 1) + k];
        else
          target[p] += dt * f_prev[p * N + k];
      }
    }
    f_prev = std::move(f_new);
  }
  sol.y_violation_rate = static_cast<double>(sol.y_violations) / static_cast<double>(P * N);

  double mean = 0.0;
  for (std::size_t p = 0; p < P; ++p) mean += sol.Y[p * (N + 1)];
  sol.y0 = mean / static_cast<double>(P);
  if (options.compute_bmo) sol.bmo = bmo_diagnostic(sol, forward, options.basis, par);
  return sol;
}

BmoDiagnostics bmo_diagnostic(const BsdeSolution& solution, const SlowPathEnsemble& forward, const BasisSpec& basis,
                              const ParallelOptions& par) {
  const int N = solution.grid.n_steps;
  const std::size_t P = solution.n_paths;
  const int d = solution.n_fast;
  const double dt = solution.grid.dt();
  BmoDiagnostics out;
  out.profile.assign(N + 1, 0.0);
  Vec tail = Vec::Zero(static_cast<Eigen::Index>(P));
  for (int k = N - 1; k >= 0; --k) {
    for (std::size_t p = 0; p < P; ++p) {
      const double* z = solution.z(p, k);
      double z2 = 0.0;
      for (int i = 0; i < d; ++i) z2 += z[i] * z[i];
      tail[p] += z2 * dt;
    }
    const Mat S = states_at(forward, solution, k);
    Mat fitted;
    regress(basis, S, tail.transpose(), par, &fitted);
    out.profile[k] = std::max(0.0, fitted.maxCoeff());
  }
  out.max = *std::max_element(out.profile.begin(), out.profile.end());
  return out;
}

double y0_value(const BsdeSolution& solution) {
  const int N = solution.grid.n_steps;
  const std::size_t P = solution.n_paths;
  double mean = 0.0;
  for (std::size_t p = 0; p < P; ++p) mean += solution.Y[p * (N + 1)];
  mean /= static_cast<double>(P);
  double var = 0.0;
  for (std::size_t p = 0; p < P; ++p) var += std::pow(solution.Y[p * (N + 1)] - mean, 2);
  const double sd = P > 1 ? std::sqrt(var / static_cast<double>(P - 1)) : 0.0;
  if (!(sd < 1e-8))
    throw Error(ErrorCode::NonDegenerateInitialValue, "Y at t = 0 varies across paths (std " + std::to_string(sd) + ")");
  return mean;
}

std::vector<double> pathwise_y0(const BsdeSolution& solution, const SlowPathEnsemble& forward, const ProblemSpec& spec) {
  const int N = solution.grid.n_steps;
  const double dt = solution.grid.dt();
  const int d = solution.n_fast;
  std::vector<double> out(solution.n_paths);
  for (std::size_t p = 0; p < solution.n_paths; ++p) {
    double acc = spec.coeffs.h(forward.state(p, N));
    for (int k = 0; k < N; ++k) {
      const Vec dual = -Eigen::Map<const Vec>(solution.z(p, k), d);
      acc += solution.driver(forward.state(p, k), dual) * dt;
    }
    out[p] = acc;
  }
  return out;
}

FeedbackPolicy optimal_feedback(const ProblemSpec& spec, std::shared_ptr<const BsdeSolution> solution) {
  FeedbackPolicy policy;
  policy.L_ubar = spec.constants.L_ubar;
  policy.description = "ubar(x, -Z) from BSDE regression";
  policy.eval = [spec, solution](int k, const Vec& x, const Vec& fast) -> Vec {
    return feedback(spec, x, -solution->z_at(k, x, fast));
  };
  return policy;
}

}  // namespace slowfast
