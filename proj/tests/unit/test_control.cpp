#include "doctest.h"
#include "fixtures.hpp"
#include "slowfast/bsde.hpp"
#include "slowfast/control.hpp"

#include <cmath>
#include <random>

using namespace slowfast;

namespace {

ControlProcess constant_control(const TimeGrid& g, std::size_t paths, double c) {
  ControlProcess u;
  u.grid = g;
  u.n_paths = paths;
  u.n_control = 1;
  u.u.assign(paths * g.n_steps, c);
  return u;
}

struct Setup {
  std::shared_ptr<const WienerEnsemble> W;
  SlowPathEnsemble X;
};

Setup reduced(const ProblemSpec& spec, int steps, std::size_t paths, std::uint64_t seed) {
  auto W = std::make_shared<const WienerEnsemble>(sample_wiener(TimeGrid(spec.T, steps), paths, spec.dims.n_fast, seed));
  return {W, solve_forward_reduced(spec, *W)};
}

}  // namespace

TEST_CASE("localization of a constant-speed control") {
  const TimeGrid g(1.0, 100);
  const double c = 3.0;
  const ControlProcess u = constant_control(g, 4, c);
  for (double n : {0.5, 1.0, 5.0, 20.0}) {
    const LocalizedControl loc = localize(u, n, Vec::Zero(1));
    const int expected = std::min(100, static_cast<int>(std::ceil(n / (c * c * g.dt()) - 1e-9)));
    for (int tau : loc.tau) CHECK(tau == expected);
    for (int k = 0; k < 100; ++k) CHECK(loc.u_n.at(0, k)[0] == (k < expected ? c : 0.0));
    // energy just before tau is below the level, at tau at or above it
    if (expected < 100) {
      CHECK(loc.energy_at(0, expected - 1) < n);
      CHECK(loc.energy_at(0, expected) >= n - 1e-12);
    }
  }
}

TEST_CASE("no truncation when the energy stays below the level") {
  const TimeGrid g(1.0, 50);
  const ControlProcess u = constant_control(g, 3, 0.5);
  const LocalizedControl loc = localize(u, 5.0, Vec::Zero(1));
  for (int tau : loc.tau) CHECK(tau == 50);
  CHECK(loc.u_n.u == u.u);
}

TEST_CASE("stopping times are monotone in the level") {
  const TimeGrid g(1.0, 200);
  ControlProcess u = constant_control(g, 500, 0.0);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N01;
  for (double& v : u.u) v = 4.0 * N01(rng);
  const LocalizedControl a = localize(u, 5.0, Vec::Zero(1)), b = localize(u, 10.0, Vec::Zero(1));
  for (std::size_t p = 0; p < 500; ++p) CHECK(a.tau[p] <= b.tau[p]);
  CHECK_THROWS_AS(localize(u, 0.0, Vec::Zero(1)), Error);
}

TEST_CASE("Girsanov weights") {
  const ProblemSpec spec = load_preset("scalar-riesz");
  SUBCASE("u_star gives unit weights") {
    const Setup s = reduced(spec, 20, 100, 1);
    const LocalizedControl loc = localize(constant_control(s.X.grid, 100, 0.0), 5.0, spec.coeffs.u_star);
    const GirsanovWeight w = girsanov_weight(s.X, loc, *s.W, spec);
    for (double v : w.weight_T) CHECK(v == 1.0);
  }
  SUBCASE("bounded deterministic r has mean one") {
    const Setup s = reduced(spec, 20, 100000, 2);
    const LocalizedControl loc = localize(constant_control(s.X.grid, 100000, 0.7), 100.0, spec.coeffs.u_star);
    const GirsanovWeight w = girsanov_weight(s.X, loc, *s.W, spec);
    const MeanSe m = mean_se(w.weight_T);
    CHECK(std::abs(m.mean - 1.0) <= 5.0 * m.se);
  }
  SUBCASE("weights freeze after tau") {
    const Setup s = reduced(spec, 100, 300, 3);
    ControlProcess u = constant_control(s.X.grid, 300, 0.0);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> N01;
    for (double& v : u.u) v = 5.0 * N01(rng);
    const LocalizedControl loc = localize(u, 5.0, spec.coeffs.u_star);
    const GirsanovWeight w = girsanov_weight(s.X, loc, *s.W, spec);
    for (std::size_t p = 0; p < 300; ++p)
      for (int k = loc.tau[p]; k <= 100; ++k) CHECK(w.log_at(p, k) == w.log_at(p, loc.tau[p]));
  }
}

TEST_CASE("weak cost at u_star is the plain Monte Carlo mean") {
  const ProblemSpec spec = load_preset("scalar-riesz");
  const Setup s = reduced(spec, 50, 4000, 5);
  const ControlProcess u = constant_control(s.X.grid, 4000, 0.0);
  const CostEstimate est = cost_weak(s.X, u, *s.W, spec, default_n_schedule());
  const MeanSe plain = mean_se(pathwise_cost(s.X, u, spec));
  CHECK(est.value == doctest::Approx(plain.mean).epsilon(1e-12));
  for (const auto& row : est.table) {
    CHECK(row.weight_mean == doctest::Approx(1.0));
    CHECK(row.energy == 0.0);
  }
  CHECK(est.stabilized);
}

TEST_CASE("strong and weak costs agree at u_star") {
  const ProblemSpec spec = load_preset("scalar-riesz");
  const Setup s = reduced(spec, 50, 4000, 6);
  const CostEstimate weak = cost_weak(s.X, constant_control(s.X.grid, 4000, 0.0), *s.W, spec, default_n_schedule());
  const Setup s2 = reduced(spec, 50, 4000, 7);
  const CostEstimate strong = cost_strong(spec, FeedbackPolicy::constant(spec.coeffs.u_star), DynamicsMode::reduced, 0.0, *s2.W);
  CHECK(std::abs(weak.value - strong.value) <= 5.0 * std::hypot(weak.std_error, strong.std_error));
}

TEST_CASE("strong cost of a constant policy against brute force") {
  const ProblemSpec spec = fixtures::linear_1d(0.0, 0.0, 1.0, 1.0, 0.2);
  const double c = 0.4;
  const FeedbackPolicy pol = FeedbackPolicy::constant(Vec::Constant(1, c));
  const auto W = sample_wiener(TimeGrid(1.0, 25), 20000, 1, 8);
  const CostEstimate est = cost_strong(spec, pol, DynamicsMode::reduced, 0.0, W);
  // the same Euler scheme, 400000 independent paths
  std::mt19937_64 rng(99);
  std::normal_distribution<double> N01;
  const int N = 25;
  const double dt = 1.0 / N;
  std::vector<double> ref(400000);
  for (double& r : ref) {
    double x = 0.2, acc = 0.0;
    for (int k = 0; k < N; ++k) {
      acc += (1.0 / (1.0 + x * x) + c * c) * dt;
      x += c * dt + std::sqrt(dt) * N01(rng);
    }
    r = acc + 1.0 / (1.0 + x * x);
  }
  const MeanSe m = mean_se(ref);
  CHECK(std::abs(est.value - m.mean) <= 5.0 * std::hypot(est.std_error, m.se));
}

TEST_CASE("admissibility table") {
  const ProblemSpec spec = load_preset("scalar-riesz");
  const Setup s = reduced(spec, 50, 2000, 10);
  SUBCASE("zero control gives zero energy") {
    const AdmissibilityTable t = admissibility_diagnostic(s.X, constant_control(s.X.grid, 2000, 0.0), *s.W, spec, {5, 10, 20});
    for (const auto& r : t.rows) CHECK(r.energy == 0.0);
  }
  SUBCASE("a control with energy at most 5 saturates the schedule") {
    const AdmissibilityTable t = admissibility_diagnostic(s.X, constant_control(s.X.grid, 2000, 2.0), *s.W, spec, {5, 10, 20});
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[1].energy == t.rows[0].energy);
    CHECK(t.rows[2].energy == t.rows[0].energy);
    CHECK(t.stabilized);
  }
  SUBCASE("optimal feedback: nondecreasing and stabilized by 20") {
    const BsdeSolution sol = solve_bsde(s.X, *s.W, spec);
    const ControlProcess u = control_from_bsde(spec, s.X, sol);
    const AdmissibilityTable t = admissibility_diagnostic(s.X, u, *s.W, spec, {5, 10, 20, 40});
    for (std::size_t i = 1; i < t.rows.size(); ++i)
      CHECK(t.rows[i].energy >= t.rows[i - 1].energy - 2.0 * std::hypot(t.rows[i].energy_se, t.rows[i - 1].energy_se));
    CHECK(t.rows[3].energy == doctest::Approx(t.rows[2].energy));
  }
  CHECK_THROWS_AS(cost_weak(s.X, constant_control(s.X.grid, 2000, 0.0), *s.W, spec, {5, 10}), Error);
}

TEST_CASE("controls from policies and controlled runs") {
  const ProblemSpec spec = load_preset("scalar-riesz");
  const Setup s = reduced(spec, 10, 20, 11);
  const FeedbackPolicy pol = FeedbackPolicy::constant(Vec::Constant(1, 0.25));
  const ControlProcess a = control_from_policy(s.X, pol, 1);
  for (double v : a.u) CHECK(v == 0.25);
  const ControlledEnsemble ce = solve_controlled(spec, pol, DynamicsMode::reduced, 0.0, *s.W);
  CHECK(control_from_controlled(ce).u == a.u);
}
