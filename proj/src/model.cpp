#include "slowfast/model.hpp"

#include "slowfast/forward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace slowfast {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFiniteCoefficient: return "NonFiniteCoefficient";
    case ErrorCode::MissingUStar: return "MissingUStar";
    case ErrorCode::UnknownPreset: return "UnknownPreset";
    case ErrorCode::NonPositiveEpsilon: return "NonPositiveEpsilon";
    case ErrorCode::NonAdaptedKernel: return "NonAdaptedKernel";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::NonFiniteDerivative: return "NonFiniteDerivative";
    case ErrorCode::NotBilinear: return "NotBilinear";
    case ErrorCode::PolicyEvaluationFailure: return "PolicyEvaluationFailure";
    case ErrorCode::NonDegenerateInitialValue: return "NonDegenerateInitialValue";
    case ErrorCode::CflViolation: return "CflViolation";
    case ErrorCode::BoundaryDominance: return "BoundaryDominance";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

DerivedConstants derive_constants(const AssumptionConstants& c, double u_star_norm) {
  DerivedConstants d;
  if (!(c.m_l > 0.0)) {
    const double inf = std::numeric_limits<double>::infinity();
    d.confinement_c = d.M_psi = d.L_psi = d.C_ubar = inf;
    return d;
  }
  // Smallest c with m_l c^2 - M_r c - (M_r + c_l) >= 0: outside the ball of
  // radius c (1 + |z|) the Hamiltonian integrand is nonnegative.
  d.confinement_c = (c.M_r + std::sqrt(c.M_r * c.M_r + 4.0 * c.m_l * (c.c_l + c.M_r))) / (2.0 * c.m_l);
  const double upper = c.M_l * (1.0 + u_star_norm * u_star_norm);
  // inside the ball the integrand is >= -(c_l + M_r + c M_r)(1 + |z|)^2 and
  // (1 + |z|)^2 <= 2 (1 + |z|^2)
  const double lower = 2.0 * (c.c_l + c.M_r + d.confinement_c * c.M_r);
  d.M_psi = std::max(upper, lower);
  d.L_psi = (1.0 + d.confinement_c) * c.M_r;
  const double ubar_at_zero = std::sqrt((upper + c.c_l) / c.m_l);
  d.C_ubar = std::max(ubar_at_zero, c.L_ubar);
  return d;
}

DerivedConstants ProblemSpec::derived() const {
  return derive_constants(constants, coeffs.u_star.size() ? coeffs.u_star.norm() : 0.0);
}

double ProblemSpec::y_bound() const { return constants.M_h + derived().M_psi * T; }

const AssumptionCheck* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

// ratio for the inequality lhs <= rhs; <= 1 iff satisfied
double violation_ratio(double lhs, double rhs) {
  if (rhs > 0.0) return lhs / rhs;
  return 1.0 + (lhs - rhs) / std::max(1.0, std::abs(rhs));
}

void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw Error(ErrorCode::NonFiniteCoefficient, std::string(what) + " returned a non-finite value");
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteCoefficient, std::string(what) + " returned a non-finite value");
}

class CheckTable {
 public:
  void record(const std::string& name, double ratio) {
    for (auto& c : checks_) {
      if (c.name == name) {
        c.worst_ratio = std::max(c.worst_ratio, ratio);
        ++c.n_probes;
        return;
      }
    }
    checks_.push_back({name, ratio, 1});
  }
  std::vector<AssumptionCheck> take() { return std::move(checks_); }

 private:
  std::vector<AssumptionCheck> checks_;
};

}  // namespace

ValidationReport validate_spec(const ProblemSpec& spec, int n_probe, std::uint64_t seed) {
  if (n_probe < 100) throw Error(ErrorCode::InvalidArgument, "validate_spec needs n_probe >= 100");
  const auto& dims = spec.dims;
  const auto& cf = spec.coeffs;
  const auto& k = spec.constants;
  ValidationReport report;

  if (dims.n_slow <= 0 || dims.n_fast <= 0 || dims.n_control <= 0)
    report.failures.push_back("dimensions must be strictly positive");
  if (!(spec.T > 0.0)) report.failures.push_back("horizon T must be positive");
  if (spec.x0.size() != dims.n_slow || !spec.x0.allFinite()) report.failures.push_back("x0 must be a finite K-vector");
  if (cf.A.rows() != dims.n_slow || cf.A.cols() != dims.n_slow) report.failures.push_back("A must be n_slow x n_slow");
  if (cf.lambda.size() != dims.n_fast || !cf.lambda.allFinite()) report.failures.push_back("lambda must be a finite H-vector");
  if (cf.u_star.size() != dims.n_control) report.failures.push_back("u_star must be a U-vector");
  if (!(k.m_l > 0.0)) report.failures.push_back("coercivity: m_l must be > 0");
  if (!std::isfinite(k.M_h)) report.failures.push_back("terminal cost bound M_h must be finite");
  if (!report.failures.empty()) {
    report.passed = false;
    return report;
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(-10.0, 10.0);
  std::uniform_int_distribution<int> scale_pick(0, 3);
  constexpr double kScales[] = {1e-3, 0.1, 1.0, 10.0};
  auto draw = [&](int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = box(rng);
    return v;
  };
  auto nearby = [&](const Vec& x) {
    const double s = kScales[scale_pick(rng)];
    Vec y = x;
    for (int i = 0; i < x.size(); ++i) y[i] += s * box(rng) / 10.0;
    return y;
  };

  const VectorField b_hat = effective_bhat(spec);
  CheckTable table;
  for (int p = 0; p < n_probe; ++p) {
    const Vec x = draw(dims.n_slow);
    const Vec y = nearby(x);
    const Vec u = draw(dims.n_control);
    const double dxy = (x - y).norm();

    const Vec bx = cf.b(x), by = cf.b(y);
    require_finite(bx, "b");
    require_finite(by, "b");
    const Vec bhx = b_hat(x), bhy = b_hat(y);
    require_finite(bhx, "b_hat");
    require_finite(bhy, "b_hat");
    const Mat sx = cf.sigma(x), sy = cf.sigma(y);
    require_finite(sx, "sigma");
    require_finite(sy, "sigma");
    const Vec rxu = cf.r(x, u), ryu = cf.r(y, u);
    require_finite(rxu, "r");
    require_finite(ryu, "r");
    const double lxu = cf.l(x, u), lyu = cf.l(y, u);
    require_finite(lxu, "l");
    require_finite(lyu, "l");
    const double hx = cf.h(x), hy = cf.h(y);
    require_finite(hx, "h");
    require_finite(hy, "h");

    const Vec r_star = cf.r(x, cf.u_star);
    require_finite(r_star, "r");
    if (r_star.norm() > 1e-12)
      throw Error(ErrorCode::MissingUStar, "r(x, u_star) != 0 at a probe point (|r| = " + std::to_string(r_star.norm()) + ")");

    if (dxy > 0.0) {
      table.record("lipschitz_b", violation_ratio((bx - by).norm(), k.L_b * dxy));
      table.record("lipschitz_b_hat", violation_ratio((bhx - bhy).norm(), k.L_b * dxy));
      // operator norm of sigma(x) - sigma(y)
      const double op = Eigen::JacobiSVD<Mat>(sx - sy).singularValues()(0);
      table.record("lipschitz_sigma", violation_ratio(op, k.L_sigma * dxy));
      table.record("lipschitz_r", violation_ratio((rxu - ryu).norm(), k.L_r * std::min(dxy, 1.0) * (u.norm() + 1.0)));
      table.record("lipschitz_l", violation_ratio(std::abs(lxu - lyu), k.L_l * dxy));
      table.record("lipschitz_h", violation_ratio(std::abs(hx - hy), k.L_h * dxy));
    }
    const double u2 = u.squaredNorm();
    table.record("growth_r", violation_ratio(rxu.norm(), k.M_r * (1.0 + u.norm())));
    table.record("coercivity_l", violation_ratio(k.m_l * u2 - k.c_l, lxu));
    table.record("growth_l", violation_ratio(lxu, k.M_l * (1.0 + u2)));
    table.record("bound_h", violation_ratio(std::abs(hx), k.M_h));

    if (spec.closed_form_hamiltonian) {
      if (!cf.closed_form) {
        report.failures.push_back("closed_form_hamiltonian set without closed-form parts");
        break;
      }
      const double l_expected = cf.closed_form->l0(x) + u2;
      const Vec r_expected = cf.closed_form->r0(x) * u;
      const double mismatch = std::max(std::abs(lxu - l_expected), (rxu - r_expected).norm());
      table.record("closed_form_structure", violation_ratio(mismatch, 1e-9 * (1.0 + std::abs(lxu))));
      // feedback u = r0(x)^T z / 2, probed in z at fixed x
      const Vec z = draw(dims.n_fast), z2 = nearby(z);
      const double dz = (z - z2).norm();
      if (dz > 0.0) {
        const Mat r0 = cf.closed_form->r0(x);
        const double slope = (0.5 * r0.transpose() * (z - z2)).norm() / dz;
        if (!(slope <= report.measured_L_ubar)) report.measured_L_ubar = slope;
      }
    }
  }
  report.checks = table.take();
  for (const auto& c : report.checks)
    if (!(c.worst_ratio <= 1.0 + 1e-9)) report.failures.push_back(c.name + " violated (ratio " + std::to_string(c.worst_ratio) + ")");
  report.passed = report.failures.empty();
  return report;
}

namespace {

double lorentzian(const Vec& x) { return 1.0 / (1.0 + x.squaredNorm()); }

CoefficientSet riesz_costs(int n_fast) {
  CoefficientSet c;
  c.u_star = Vec::Zero(n_fast);
  c.r = [](const Vec&, const Vec& u) -> Vec { return u; };
  c.l = [](const Vec& x, const Vec& u) { return lorentzian(x) + u.squaredNorm(); };
  c.h = [](const Vec& x) { return lorentzian(x); };
  c.closed_form = ClosedFormParts{
      [](const Vec& x) { return lorentzian(x); },
      [n_fast](const Vec&) -> Mat { return Mat::Identity(n_fast, n_fast); }};
  return c;
}

AssumptionConstants riesz_constants() {
  AssumptionConstants k;
  k.M_r = 1.0;
  k.L_r = 1.0;
  k.m_l = 1.0;
  k.c_l = 0.0;
  k.M_l = 1.0;
  k.L_l = 0.65;  // sup |d/dx 1/(1+x^2)| = 3 sqrt(3) / 8
  k.M_h = 1.0;
  k.L_h = 0.65;
  k.L_ubar = 0.5;
  return k;
}

ProblemSpec scalar_riesz() {
  ProblemSpec s;
  s.name = "scalar-riesz";
  s.dims = {1, 1, 1};
  s.coeffs = riesz_costs(1);
  s.coeffs.A = Mat::Constant(1, 1, -1.0);
  s.coeffs.b = [](const Vec& x) -> Vec { return x.array().cos().matrix(); };
  s.coeffs.sigma = [](const Vec& x) -> Mat { return Mat::Constant(1, 1, 1.0 + 0.5 * std::sin(x[0])); };
  s.coeffs.lambda = Vec::Ones(1);
  s.constants = riesz_constants();
  s.constants.L_b = 1.5;  // b_hat' = -1.25 sin x + 0.125 cos 2x
  s.constants.L_sigma = 0.5;
  s.T = 1.0;
  s.x0 = Vec::Constant(1, 0.5);
  s.closed_form_hamiltonian = true;
  return s;
}

ProblemSpec wz_sine() {
  ProblemSpec s;
  s.name = "wz-sine";
  s.dims = {1, 1, 1};
  s.coeffs = riesz_costs(1);
  s.coeffs.A = Mat::Zero(1, 1);
  s.coeffs.b = [](const Vec& x) -> Vec { return Vec::Zero(x.size()); };
  s.coeffs.sigma = [](const Vec& x) -> Mat { return Mat::Constant(1, 1, std::sin(x[0])); };
  s.coeffs.lambda = Vec::Ones(1);
  s.constants = riesz_constants();
  s.constants.L_b = 0.5;  // b_hat = sin(2x) / 4
  s.constants.L_sigma = 1.0;
  s.T = 1.0;
  s.x0 = Vec::Constant(1, 1.0);
  s.closed_form_hamiltonian = true;
  return s;
}

ProblemSpec fastfast_diag() {
  ProblemSpec s;
  s.name = "fastfast-diag";
  s.dims = {1, 2, 2};
  s.coeffs = riesz_costs(2);
  s.coeffs.A = Mat::Constant(1, 1, -1.0);
  s.coeffs.b = [](const Vec& x) -> Vec { return Vec::Constant(1, 0.5 * std::cos(x[0])); };
  s.coeffs.sigma = [](const Vec& x) -> Mat {
    Mat m(1, 2);
    m << 0.8 + 0.3 * std::sin(x[0]), 0.4;
    return m;
  };
  s.coeffs.lambda = (Vec(2) << 0.5, 0.3).finished();
  s.coeffs.q = [](const Vec& v, const Vec& w) -> Vec { return v.cwiseProduct(w); };
  s.coeffs.q_diagonal = true;
  s.constants = riesz_constants();
  s.constants.L_b = 0.6;
  s.constants.L_sigma = 0.3;
  s.T = 1.0;
  s.x0 = Vec::Constant(1, 0.5);
  s.closed_form_hamiltonian = true;
  return s;
}

}  // namespace

std::vector<std::string> preset_names() { return {"scalar-riesz", "wz-sine", "fastfast-diag"}; }

ProblemSpec load_preset(const std::string& name) {
  if (name == "scalar-riesz") return scalar_riesz();
  if (name == "wz-sine") return wz_sine();
  if (name == "fastfast-diag") return fastfast_diag();
  throw Error(ErrorCode::UnknownPreset, "no preset named '" + name + "'");
}

}  // namespace slowfast
