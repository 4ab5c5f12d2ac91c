#include "doctest.h"
#include "fixtures.hpp"
#include "slowfast/bsde.hpp"
#include "slowfast/hamiltonian.hpp"
#include "slowfast/hjb.hpp"

#include <chrono>
#include <cmath>

using namespace slowfast;

namespace {

struct Setup {
  std::shared_ptr<const WienerEnsemble> W;
  SlowPathEnsemble X;
};

Setup reduced(const ProblemSpec& spec, int steps, std::size_t paths, std::uint64_t seed) {
  auto W = std::make_shared<const WienerEnsemble>(sample_wiener(TimeGrid(spec.T, steps), paths, spec.dims.n_fast, seed));
  return {W, solve_forward_reduced(spec, *W)};
}

}  // namespace

TEST_CASE("zero driver and constant terminal value") {
  ProblemSpec spec = load_preset("scalar-riesz");
  const double c = 0.37;
  spec.coeffs.h = [c](const Vec&) { return c; };
  const auto t0 = std::chrono::steady_clock::now();
  const Setup s = reduced(spec, 100, 10000, 3);
  BsdeOptions opt;
  opt.driver = [](const Vec&, const Vec&) { return 0.0; };
  const BsdeSolution sol = solve_bsde(s.X, *s.W, spec, opt);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double worst_y = 0.0, worst_z = 0.0;
  for (std::size_t p = 0; p < sol.n_paths; ++p) {
    for (int k = 0; k <= 100; ++k) worst_y = std::max(worst_y, std::abs(sol.y(p, k) - c));
    for (int k = 0; k < 100; ++k) worst_z = std::max(worst_z, std::abs(sol.z(p, k)[0]));
  }
  CHECK(worst_y <= 1e-10);
  CHECK(worst_z <= 1e-10);
  CHECK(y0_value(sol) == doctest::Approx(c).epsilon(1e-12));
  CHECK(secs < 5.0);
}

TEST_CASE("constant driver gives the linear profile") {
  ProblemSpec spec = load_preset("scalar-riesz");
  const double c = -0.2, alpha = 0.45;
  spec.coeffs.h = [c](const Vec&) { return c; };
  const Setup s = reduced(spec, 100, 10000, 4);
  BsdeOptions opt;
  opt.driver = [alpha](const Vec&, const Vec&) { return alpha; };
  const BsdeSolution sol = solve_bsde(s.X, *s.W, spec, opt);
  double worst = 0.0;
  for (std::size_t p = 0; p < sol.n_paths; ++p)
    for (int k = 0; k <= 100; ++k) worst = std::max(worst, std::abs(sol.y(p, k) - (c + alpha * (1.0 - sol.grid.time(k)))));
  CHECK(worst <= 1e-10);
  CHECK(y0_value(sol) == doctest::Approx(c + alpha).epsilon(1e-12));
}

TEST_CASE("the same exactness on eps dynamics with the fast state") {
  ProblemSpec spec = load_preset("scalar-riesz");
  spec.coeffs.h = [](const Vec&) { return 1.0; };
  auto W = std::make_shared<const WienerEnsemble>(sample_wiener(TimeGrid(1.0, 100), 5000, 1, 5));
  auto fast = std::make_shared<const FastPathEnsemble>(gamma_ou(wiener_semimartingale(W, spec.coeffs.lambda), 0.05));
  const SlowPathEnsemble X = solve_forward_eps(spec, fast);
  BsdeOptions opt;
  opt.driver = [](const Vec&, const Vec&) { return 0.5; };
  const BsdeSolution sol = solve_bsde(X, *W, spec, opt);
  CHECK(sol.uses_fast_state);
  double worst = 0.0;
  for (std::size_t p = 0; p < sol.n_paths; ++p)
    for (int k = 0; k <= 100; ++k) worst = std::max(worst, std::abs(sol.y(p, k) - (1.0 + 0.5 * (1.0 - sol.grid.time(k)))));
  CHECK(worst <= 1e-10);
}

TEST_CASE("both Z estimators and Picard sweeps keep the exact cases exact") {
  ProblemSpec spec = load_preset("scalar-riesz");
  spec.coeffs.h = [](const Vec&) { return 2.0; };
  const Setup s = reduced(spec, 40, 3000, 6);
  for (ZEstimator est : {ZEstimator::joint, ZEstimator::increment})
    for (int sweeps : {1, 3}) {
      BsdeOptions opt;
      opt.z_estimator = est;
      opt.picard_sweeps = sweeps;
      opt.driver = [](const Vec&, const Vec&) { return -1.0; };
      const BsdeSolution sol = solve_bsde(s.X, *s.W, spec, opt);
      CHECK(y0_value(sol) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("scalar-riesz value against the finite-difference oracle") {
  const ProblemSpec spec = load_preset("scalar-riesz");
  const Setup s = reduced(spec, 50, 20000, 7);
  const BsdeSolution sol = solve_bsde(s.X, *s.W, spec);
  HjbOptions ho;
  ho.n_x = 400;
  ho.richardson = false;
  ho.widening_test = false;
  const double v = hjb_oracle(spec, ho).value;
  CHECK(std::abs(y0_value(sol) - v) <= 0.02 * (1.0 + std::abs(v)));
  CHECK(sol.y_violation_rate < 0.01);
  const MeanSe pw = mean_se(pathwise_y0(sol, s.X, spec));
  CHECK(std::abs(pw.mean - sol.y0) <= 0.02);
}

TEST_CASE("BMO diagnostic on prescribed Z") {
  const ProblemSpec spec = load_preset("scalar-riesz");
  const Setup s = reduced(spec, 20, 200, 8);
  BsdeSolution sol;
  sol.grid = s.X.grid;
  sol.n_paths = s.X.n_paths;
  sol.n_fast = 1;
  sol.Z.assign(sol.n_paths * 20, 0.0);
  CHECK(bmo_diagnostic(sol, s.X, BasisSpec{}).max == doctest::Approx(0.0));
  std::fill(sol.Z.begin(), sol.Z.end(), 1.0);
  const BmoDiagnostics b = bmo_diagnostic(sol, s.X, BasisSpec{});
  for (int k = 0; k <= 20; ++k) CHECK(b.profile[k] == doctest::Approx(1.0 - sol.grid.time(k)).epsilon(1e-10));
  CHECK(b.max == doctest::Approx(1.0));
}

TEST_CASE("degenerate initial value is detected") {
  BsdeSolution sol;
  sol.grid = TimeGrid(1.0, 2);
  sol.n_paths = 2;
  sol.Y = {1.0, 0.0, 0.0, 1.5, 0.0, 0.0};
  try {
    y0_value(sol);
    FAIL("expected NonDegenerateInitialValue");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonDegenerateInitialValue);
  }
}

TEST_CASE("grid mismatch is rejected") {
  const ProblemSpec spec = load_preset("scalar-riesz");
  const Setup s = reduced(spec, 20, 50, 1);
  const WienerEnsemble other = sample_wiener(TimeGrid(1.0, 10), 50, 1, 1);
  CHECK_THROWS_AS(solve_bsde(s.X, other, spec), Error);
}

TEST_CASE("optimal feedback evaluates the fitted Z surface") {
  const ProblemSpec spec = load_preset("scalar-riesz");
  const Setup s = reduced(spec, 20, 4000, 9);
  auto sol = std::make_shared<const BsdeSolution>(solve_bsde(s.X, *s.W, spec));
  const FeedbackPolicy pol = optimal_feedback(spec, sol);
  for (int k : {0, 10, 19}) {
    const Vec x = s.X.state(5, k);
    const Vec expected = feedback(spec, x, -sol->z_at(k, x, Vec()));
    CHECK(pol.eval(k, x, Vec())[0] == doctest::Approx(expected[0]));
  }
}
