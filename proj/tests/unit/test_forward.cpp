#include "doctest.h"
#include "fixtures.hpp"
#include "slowfast/forward.hpp"

#include <cmath>

using namespace slowfast;

namespace {

std::shared_ptr<const WienerEnsemble> wiener(int steps, std::size_t paths, int d, std::uint64_t seed, double T = 1.0) {
  return std::make_shared<const WienerEnsemble>(sample_wiener(TimeGrid(T, steps), paths, d, seed));
}

Vec v1(double x) { return Vec::Constant(1, x); }

double terminal_mean(const SlowPathEnsemble& X, MeanSe* out = nullptr) {
  std::vector<double> v(X.n_paths);
  for (std::size_t p = 0; p < X.n_paths; ++p) v[p] = X.at(p, X.grid.n_steps)[0];
  const MeanSe m = mean_se(v);
  if (out) *out = m;
  return m.mean;
}

}  // namespace

TEST_CASE("constant sigma leaves b unchanged") {
  const VectorField b = [](const Vec& x) -> Vec { return x.array().cos().matrix(); };
  const MatrixField s = [](const Vec&) -> Mat { return Mat::Constant(1, 1, 0.7); };
  const VectorField bh = corrected_drift(b, s, Vec::Ones(1));
  for (double x : {-3.0, 0.0, 0.4, 2.5}) CHECK(bh(v1(x))[0] == b(v1(x))[0]);
}

TEST_CASE("sigma(x) = x gives b_hat(x) = x / 2") {
  const VectorField b = [](const Vec& x) -> Vec { return Vec::Zero(x.size()); };
  const MatrixField s = [](const Vec& x) -> Mat { return Mat::Constant(1, 1, x[0]); };
  const VectorField bh = corrected_drift(b, s, Vec::Ones(1), 1e-4);
  for (double x : {-2.0, -0.3, 0.0, 1.0, 3.7}) CHECK(std::abs(bh(v1(x))[0] - x / 2.0) <= 1e-8);
}

TEST_CASE("two-dimensional correction against a hand-computed Jacobian") {
  const VectorField b = [](const Vec& x) -> Vec { return Vec::Zero(x.size()); };
  const MatrixField s = [](const Vec& x) -> Mat {
    Mat m(2, 2);
    m << std::sin(x[0]), x[1], 1.0, x[0] * x[1];
    return m;
  };
  const Vec lambda = (Vec(2) << 1.0, 0.5).finished();
  const VectorField bh = corrected_drift(b, s, lambda);
  for (const Vec& x : {(Vec(2) << 0.3, -0.8).finished(), (Vec(2) << -1.2, 0.5).finished()}) {
    const double x0 = x[0], x1 = x[1];
    // column 0: (sin x0, 1); column 1: (x1, x0 x1)
    const Vec expected = 0.5 * (Vec(2) << std::cos(x0) * std::sin(x0) + 0.25 * x0 * x1,
                                0.25 * (x1 * x1 + x0 * x0 * x1))
                                   .finished();
    CHECK((bh(x) - expected).norm() <= 1e-6);
  }
}

TEST_CASE("sigma2 trace examples") {
  const auto id = sigma2_trace([](const Vec& x) -> Mat { return Mat::Constant(1, 1, x[0]); });
  const auto cst = sigma2_trace([](const Vec&) -> Mat { return Mat::Constant(1, 1, 2.0); });
  const auto sine = sigma2_trace([](const Vec& x) -> Mat { return Mat::Constant(1, 1, std::sin(x[0])); });
  for (double x : {-1.5, 0.2, 0.9}) {
    CHECK(id(v1(x))[0] == doctest::Approx(x).epsilon(1e-9));
    CHECK(cst(v1(x))[0] == 0.0);
    CHECK(std::abs(sine(v1(x))[0] - std::sin(x) * std::cos(x)) <= 1e-8);
  }
}

TEST_CASE("Stratonovich correction is half the sigma2 trace times lambda squared") {
  const MatrixField s = [](const Vec& x) -> Mat { return Mat::Constant(1, 1, std::sin(x[0])); };
  const DriftCorrection c = stratonovich_correction(s, Vec::Ones(1));
  for (double x : {0.1, 1.0}) CHECK(c.apply(v1(x), s(v1(x)))[0] == doctest::Approx(0.5 * std::sin(x) * std::cos(x)));
}

TEST_CASE("q_hat: diagonal map, antisymmetric map, Monte Carlo cross-check") {
  const Vec lambda = (Vec(2) << 0.5, 0.3).finished();
  const BilinearMap diag = [](const Vec& v, const Vec& w) -> Vec { return v.cwiseProduct(w); };
  const GaussianAverage exact = gaussian_average_q(diag, lambda, 1000, 1, true);
  CHECK(exact.exact);
  CHECK(exact.value[0] == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(exact.value[1] == doctest::Approx(0.045).epsilon(1e-14));

  const GaussianAverage mc = gaussian_average_q(diag, lambda, 100000, 2, true, QuadratureMethod::monte_carlo);
  CHECK_FALSE(mc.exact);
  for (int i = 0; i < 2; ++i) CHECK(std::abs(mc.value[i] - exact.value[i]) <= 5.0 * mc.std_error[i]);

  const BilinearMap anti = [](const Vec& v, const Vec& w) -> Vec {
    return (Vec(2) << v[0] * w[1] - v[1] * w[0], v[1] * w[0] - v[0] * w[1]).finished();
  };
  const GaussianAverage zero = gaussian_average_q(anti, lambda, 1000, 3, false);
  CHECK(zero.value.norm() <= 1e-12);
}

TEST_CASE("q_hat rejects maps that are not bilinear and small quadratures") {
  const BilinearMap bad = [](const Vec& v, const Vec& w) -> Vec { return v.cwiseProduct(w) + Vec::Ones(v.size()); };
  try {
    gaussian_average_q(bad, Vec::Ones(1), 1000, 1, false);
    FAIL("expected NotBilinear");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotBilinear);
  }
  const BilinearMap ok = [](const Vec& v, const Vec& w) -> Vec { return v.cwiseProduct(w); };
  CHECK_THROWS_AS(gaussian_average_q(ok, Vec::Ones(1), 10, 1, false), Error);
}

TEST_CASE("noise-free reduced Euler converges at first order") {
  ProblemSpec spec = fixtures::linear_1d(-1.0, 0.0, 0.0, 1.0, 1.0);
  std::vector<double> err;
  for (int N : {16, 32, 64}) {
    const auto W = wiener(N, 1, 1, 1);
    const SlowPathEnsemble X = solve_forward_reduced(spec, *W);
    double worst = 0.0;
    for (int k = 0; k <= N; ++k) worst = std::max(worst, std::abs(X.at(0, k)[0] - std::exp(-X.grid.time(k))));
    CHECK(worst <= 1.0 / N);
    // Euler is exact for the recursion (1 - dt)^k
    CHECK(X.at(0, N)[0] == doctest::Approx(std::pow(1.0 - 1.0 / N, N)).epsilon(1e-12));
    err.push_back(std::abs(X.at(0, N)[0] - std::exp(-1.0)));
  }
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double ratio = err[i - 1] / err[i];
    CHECK(ratio >= 1.7);
    CHECK(ratio <= 2.3);
  }
}

TEST_CASE("noise-free eps dynamics follow the ODE") {
  ProblemSpec spec = fixtures::linear_1d(-1.0, 0.0, 0.0, 1.0, 1.0);
  const auto W = wiener(64, 2, 1, 1);
  auto fast = std::make_shared<const FastPathEnsemble>(gamma_ou(wiener_semimartingale(W, Vec::Ones(1)), 0.1));
  const SlowPathEnsemble X = solve_forward_eps(spec, fast);
  for (int k = 0; k <= 64; ++k) CHECK(std::abs(X.at(0, k)[0] - std::exp(-X.grid.time(k))) <= 1.0 / 64);
  CHECK(X.scheme == "euler-substep");
  CHECK(X.fast);
}

TEST_CASE("Gaussian terminal law with constant coefficients") {
  const double s = 0.8, g = 1.5, x0 = 0.3;
  ProblemSpec spec = fixtures::linear_1d(0.0, 0.0, s, g, x0);
  const std::size_t P = 100000;
  const auto W = wiener(20, P, 1, 21);
  const SlowPathEnsemble X = solve_forward_reduced(spec, *W);
  MeanSe m;
  terminal_mean(X, &m);
  CHECK(std::abs(m.mean - x0) <= 5.0 * m.se);
  std::vector<double> sq(P);
  for (std::size_t p = 0; p < P; ++p) sq[p] = std::pow(X.at(p, 20)[0] - x0, 2);
  const MeanSe v = mean_se(sq);
  CHECK(std::abs(v.mean - s * s * g * g) <= 5.0 * v.se);
}

TEST_CASE("zero increments give the deterministic Euler path") {
  ProblemSpec spec = load_preset("scalar-riesz");
  auto W = std::make_shared<WienerEnsemble>(sample_wiener(TimeGrid(1.0, 50), 3, 1, 1));
  std::fill(W->increments.begin(), W->increments.end(), 0.0);
  const SlowPathEnsemble X = solve_forward_reduced(spec, *W);
  const VectorField bh = effective_bhat(spec);
  Vec x = spec.x0;
  for (int k = 0; k < 50; ++k) {
    x = x + (spec.coeffs.A * x + bh(x)) * 0.02;
    for (std::size_t p = 0; p < 3; ++p) CHECK(X.at(p, k + 1)[0] == doctest::Approx(x[0]).epsilon(1e-14));
  }
}

TEST_CASE("weak error in the mean shrinks when dt halves") {
  ProblemSpec spec = fixtures::linear_1d(-1.0, 0.0, 0.5, 1.0, 1.0);
  std::vector<double> err;
  for (int N : {8, 16}) {
    const SlowPathEnsemble X = solve_forward_reduced(spec, *wiener(N, 100000, 1, 13));
    err.push_back(std::abs(terminal_mean(X) - std::exp(-1.0)));
  }
  CHECK(err[1] < err[0]);
}

TEST_CASE("eps dynamics: terminal mean is stable across seeds") {
  const ProblemSpec spec = load_preset("scalar-riesz");
  std::vector<MeanSe> m(2);
  for (int s = 0; s < 2; ++s) {
    const auto W = wiener(200, 20000, 1, 100 + s);
    auto fast = std::make_shared<const FastPathEnsemble>(gamma_ou(wiener_semimartingale(W, spec.coeffs.lambda), 0.1));
    terminal_mean(solve_forward_eps(spec, fast), &m[s]);
  }
  CHECK(std::abs(m[0].mean - m[1].mean) <= 5.0 * std::hypot(m[0].se, m[1].se));
}

TEST_CASE("controlled dynamics") {
  const ProblemSpec spec = load_preset("scalar-riesz");
  const auto W = wiener(100, 500, 1, 17);
  const FeedbackPolicy idle = FeedbackPolicy::constant(spec.coeffs.u_star);

  SUBCASE("u_star reproduces the uncontrolled reduced paths") {
    const ControlledEnsemble c = solve_controlled(spec, idle, DynamicsMode::reduced, 0.0, *W);
    const SlowPathEnsemble X = solve_forward_reduced(spec, *W);
    CHECK(c.paths.values == X.values);
  }
  SUBCASE("u_star reproduces the eps paths bit for bit") {
    const double eps = 0.1;
    const ControlledEnsemble c = solve_controlled(spec, idle, DynamicsMode::eps, eps, *W);
    auto fast = std::make_shared<const FastPathEnsemble>(gamma_ou(wiener_semimartingale(W, spec.coeffs.lambda), eps));
    const SlowPathEnsemble X = solve_forward_eps(spec, fast);
    CHECK(c.paths.values == X.values);
    CHECK(c.paths.fast->values == fast->values);
  }
  SUBCASE("constant control shifts the mean by c T") {
    const ProblemSpec lin = fixtures::linear_1d(0.0, 0.0, 1.0, 1.0, 0.2);
    const auto W2 = wiener(50, 100000, 1, 19);
    const double c = 0.6;
    const ControlledEnsemble ce = solve_controlled(lin, FeedbackPolicy::constant(Vec::Constant(1, c)),
                                                   DynamicsMode::reduced, 0.0, *W2);
    MeanSe m;
    terminal_mean(ce.paths, &m);
    CHECK(std::abs(m.mean - (0.2 + c)) <= 5.0 * m.se);
    CHECK(ce.control(7, 3)[0] == c);
  }
}

TEST_CASE("policy failures surface as PolicyEvaluationFailure") {
  const ProblemSpec spec = load_preset("scalar-riesz");
  const auto W = wiener(10, 4, 1, 1);
  FeedbackPolicy bad;
  bad.eval = [](int, const Vec& x, const Vec&) -> Vec { return Vec::Constant(x.size(), std::nan("")); };
  try {
    solve_controlled(spec, bad, DynamicsMode::reduced, 0.0, *W);
    FAIL("expected PolicyEvaluationFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PolicyEvaluationFailure);
  }
}
