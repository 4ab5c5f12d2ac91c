#include "slowfast/hamiltonian.hpp"

#include <array>
#include <cmath>

namespace slowfast {

const char* to_string(HamiltonianMethod m) { return m == HamiltonianMethod::closed_form ? "closed_form" : "numeric"; }

HamiltonianEval psi_closed_form(const Vec& x, const Vec& z, const ScalarField& l0, const MatrixField& r0) {
  const Vec rz = r0(x).transpose() * z;
  HamiltonianEval out;
  out.psi = l0(x) - 0.25 * rz.squaredNorm();
  out.u_min = 0.5 * rz;
  out.method = HamiltonianMethod::closed_form;
  return out;
}

namespace {

struct Candidate {
  Vec u;
  double f;
};

bool better(double f, const Vec& u, const Candidate& best) {
  constexpr double tie = 1e-12;
  if (f < best.f - tie * (1.0 + std::abs(best.f))) return true;
  return std::abs(f - best.f) <= tie * (1.0 + std::abs(best.f)) && u.norm() < best.u.norm();
}

Vec project(Vec u, double radius) {
  const double nrm = u.norm();
  if (nrm > radius) u *= radius / nrm;
  return u;
}

}  // namespace

HamiltonianEval psi_numeric(const Vec& x, const Vec& z, const RunningCost& l, const ControlCoupling& r,
                            const AssumptionConstants& constants, const Vec& u_star) {
  const DerivedConstants dc = derive_constants(constants, u_star.norm());
  const double radius = 2.0 * dc.confinement_c * (1.0 + z.norm());
  const auto f = [&](const Vec& u) { return l(x, u) - z.dot(r(x, u)); };
  const int n = static_cast<int>(u_star.size());

  // Starts: u_star, the origin and six fixed points spread over the ball.
  std::vector<Vec> starts{u_star, Vec::Zero(n)};
  constexpr std::array<double, 6> frac{0.5, -0.5, 0.25, -0.25, 0.8, -0.8};
  for (std::size_t s = 0; s < frac.size(); ++s) {
    Vec u(n);
    for (int i = 0; i < n; ++i) u[i] = frac[(s + i) % frac.size()] * radius / std::sqrt(static_cast<double>(n));
    starts.push_back(u);
  }

  Candidate best{u_star, f(u_star)};
  bool stalled = false;
  constexpr int kMaxIter = 20000;
  const double min_step = 1e-10 * std::max(1.0, radius);
  for (const Vec& start : starts) {
    Vec u = project(start, radius);
    double fu = f(u);
    double step = radius / 4.0;
    int iter = 0;
    double last_gain = 0.0;
    while (step > min_step && iter < kMaxIter) {
      bool moved = false;
      for (int i = 0; i < n; ++i) {
        for (double dir : {1.0, -1.0}) {
          Vec v = u;
          v[i] += dir * step;
          v = project(v, radius);
          const double fv = f(v);
          if (fv < fu) {
            last_gain = fu - fv;
            u = std::move(v);
            fu = fv;
            moved = true;
            break;
          }
        }
      }
      if (!moved) step *= 0.5;
      ++iter;
    }
    if (iter >= kMaxIter && last_gain > 1e-8) stalled = true;
    if (!std::isfinite(fu)) throw Error(ErrorCode::NonFiniteCoefficient, "Hamiltonian objective is not finite");
    if (better(fu, u, best)) best = {u, fu};
  }

  HamiltonianEval out;
  out.psi = best.f;
  out.u_min = best.u;
  out.method = HamiltonianMethod::numeric;
  out.search_radius = radius;
  out.stalled = stalled;
  return out;
}

HamiltonianEval hamiltonian(const ProblemSpec& spec, const Vec& x, const Vec& z) {
  const auto& c = spec.coeffs;
  if (spec.closed_form_hamiltonian && c.closed_form) return psi_closed_form(x, z, c.closed_form->l0, c.closed_form->r0);
  return psi_numeric(x, z, c.l, c.r, spec.constants, c.u_star);
}

Vec feedback(const ProblemSpec& spec, const Vec& x, const Vec& z) { return hamiltonian(spec, x, z).u_min; }

double psi_value(const ProblemSpec& spec, const Vec& x, const Vec& z) { return hamiltonian(spec, x, z).psi; }

}  // namespace slowfast
