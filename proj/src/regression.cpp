#include "slowfast/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace slowfast {

BasisSpec BasisSpec::parse(const std::string& text) {
  BasisSpec b;
  std::string kind = text, arg;
  if (const auto colon = text.find(':'); colon != std::string::npos) {
    kind = text.substr(0, colon);
    arg = text.substr(colon + 1);
  } else {
    const auto digit = text.find_first_of("0123456789");
    if (digit != std::string::npos) {
      kind = text.substr(0, digit);
      arg = text.substr(digit);
    }
  }
  int value = 0;
  if (!arg.empty()) {
    try {
      std::size_t used = 0;
      value = std::stoi(arg, &used);
      if (used != arg.size()) throw std::invalid_argument(arg);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "bad basis parameter in '" + text + "'");
    }
  }
  if (kind == "poly" || kind == "polynomial") {
    b.kind = BasisKind::polynomial;
    if (!arg.empty()) b.degree = value;
    if (b.degree < 0 || b.degree > 12) throw Error(ErrorCode::InvalidArgument, "polynomial degree must be in [0, 12]");
  } else if (kind == "pwl" || kind == "piecewise_linear") {
    b.kind = BasisKind::piecewise_linear;
    if (!arg.empty()) b.bins = value;
    if (b.bins < 1) throw Error(ErrorCode::InvalidArgument, "piecewise-linear basis needs at least one bin");
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown basis '" + text + "'");
  }
  return b;
}

std::string BasisSpec::str() const {
  return kind == BasisKind::polynomial ? "poly:" + std::to_string(degree) : "pwl:" + std::to_string(bins);
}

FeatureMap FeatureMap::fit(const BasisSpec& spec, const Mat& states) {
  FeatureMap f;
  f.spec_ = spec;
  const int n = static_cast<int>(states.rows());
  const double count = static_cast<double>(states.cols());
  f.mean_ = states.rowwise().mean();
  f.inv_scale_ = Vec::Zero(n);
  for (int j = 0; j < n; ++j) {
    const double var = (states.row(j).array() - f.mean_[j]).square().sum() / std::max(1.0, count - 1.0);
    const double sd = std::sqrt(var);
    if (sd > 1e-12 * (1.0 + std::abs(f.mean_[j]))) {
      f.active_.push_back(j);
      f.inv_scale_[j] = 1.0 / sd;
    }
  }
  const int na = static_cast<int>(f.active_.size());
  if (spec.kind == BasisKind::polynomial) {
    f.n_features_ = 1 + na * spec.degree + (na > 1 && spec.degree >= 2 ? na * (na - 1) / 2 : 0);
  } else {
    f.lo_ = Vec::Zero(n);
    f.hi_ = Vec::Zero(n);
    for (int j : f.active_) {
      const auto z = (states.row(j).array() - f.mean_[j]) * f.inv_scale_[j];
      f.lo_[j] = z.minCoeff();
      f.hi_[j] = z.maxCoeff();
    }
    f.n_features_ = 1 + na * spec.bins;
  }
  return f;
}

void FeatureMap::eval(const double* state, double* out) const {
  out[0] = 1.0;
  int pos = 1;
  if (spec_.kind == BasisKind::polynomial) {
    double z[64];
    int idx = 0;
    for (int j : active_) {
      const double v = (state[j] - mean_[j]) * inv_scale_[j];
      z[idx++] = v;
      double p = 1.0;
      for (int d = 0; d < spec_.degree; ++d) out[pos++] = (p *= v);
    }
    if (idx > 1 && spec_.degree >= 2)
      for (int a = 0; a < idx; ++a)
        for (int b = a + 1; b < idx; ++b) out[pos++] = z[a] * z[b];
    return;
  }
  for (int j : active_) {
    const double v = (state[j] - mean_[j]) * inv_scale_[j];
    const double width = (hi_[j] - lo_[j]) / spec_.bins;
    // hat functions at nodes 1..bins; node 0 is spanned by the constant
    const double s = std::clamp((v - lo_[j]) / width, 0.0, static_cast<double>(spec_.bins));
    for (int m = 1; m <= spec_.bins; ++m) out[pos++] = std::max(0.0, 1.0 - std::abs(s - m));
  }
}

Vec RegressionFit::predict(const double* state) const {
  const int p = features.size();
  Vec phi(p);
  features.eval(state, phi.data());
  return target_mean + coef.transpose() * phi;
}

namespace {

struct Normal {
  Mat G, B;
};

struct Solved {
  Mat coef;
  double condition;
  bool ridge;
};

Solved solve_normal(Mat G, const Mat& B) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(G, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  Solved s;
  s.condition = lmin > 0.0 ? std::sqrt(lmax / lmin) : std::numeric_limits<double>::infinity();
  s.ridge = s.condition > kSingularCondition;
  if (s.ridge) G.diagonal().array() += kRidgePenalty;
  s.coef = G.ldlt().solve(B);
  return s;
}

}  // namespace

RegressionFit regress(const BasisSpec& spec, const Mat& states, const Mat& targets, const ParallelOptions& par,
                      Mat* fitted) {
  if (states.cols() != targets.cols() || states.cols() == 0)
    throw Error(ErrorCode::GridMismatch, "regression states and targets disagree in path count");
  if (states.rows() > 64) throw Error(ErrorCode::InvalidArgument, "regression state has more than 64 coordinates");
  RegressionFit fit;
  fit.features = FeatureMap::fit(spec, states);
  const std::size_t N = static_cast<std::size_t>(states.cols());
  const int p = fit.features.size();
  const int m = static_cast<int>(targets.rows());

  // target means by the same deterministic reduction as the normal equations
  fit.target_mean = parallel_reduce(
      N, par, Vec(Vec::Zero(m)),
      [&](std::size_t b, std::size_t e) {
        Vec acc = Vec::Zero(m);
        for (std::size_t i = b; i < e; ++i) acc += targets.col(i);
        return acc;
      },
      [](const Vec& a, const Vec& b) { return Vec(a + b); });
  fit.target_mean /= static_cast<double>(N);

  const Normal zero{Mat::Zero(p, p), Mat::Zero(p, m)};
  Normal ne = parallel_reduce(
      N, par, zero,
      [&](std::size_t b, std::size_t e) {
        Normal acc = zero;
        Vec phi(p);
        for (std::size_t i = b; i < e; ++i) {
          fit.features.eval(states.col(i).data(), phi.data());
          acc.G.selfadjointView<Eigen::Lower>().rankUpdate(phi);
          acc.B.noalias() += phi * (targets.col(i) - fit.target_mean).transpose();
        }
        return acc;
      },
      [](const Normal& a, const Normal& b) { return Normal{a.G + b.G, a.B + b.B}; });
  Mat G = ne.G.selfadjointView<Eigen::Lower>();
  G /= static_cast<double>(N);
  ne.B /= static_cast<double>(N);

  const Solved sv = solve_normal(std::move(G), ne.B);
  fit.coef = sv.coef;
  fit.condition = sv.condition;
  fit.ridge = sv.ridge;

  if (fitted) {
    fitted->resize(m, static_cast<Eigen::Index>(N));
    parallel_for(N, par, [&](std::size_t b, std::size_t e) {
      Vec phi(p);
      for (std::size_t i = b; i < e; ++i) {
        fit.features.eval(states.col(i).data(), phi.data());
        fitted->col(i) = fit.target_mean + fit.coef.transpose() * phi;
      }
    });
  }
  return fit;
}

JointFit regress_with_increments(const BasisSpec& spec, const Mat& states, const Vec& target, const Mat& increments,
                                 double dt, const ParallelOptions& par) {
  const std::size_t N = static_cast<std::size_t>(states.cols());
  if (N == 0 || static_cast<std::size_t>(target.size()) != N || static_cast<std::size_t>(increments.cols()) != N)
    throw Error(ErrorCode::GridMismatch, "regression states, targets and increments disagree in path count");
  if (states.rows() > 64) throw Error(ErrorCode::InvalidArgument, "regression state has more than 64 coordinates");
  const int d = static_cast<int>(increments.rows());
  JointFit out;
  out.level.features = FeatureMap::fit(spec, states);
  out.slope.features = out.level.features;
  const FeatureMap& fm = out.level.features;
  const int p = fm.size();
  const int q = p * (1 + d);
  const double inv_sqrt_dt = 1.0 / std::sqrt(dt);

  const double mean = parallel_reduce(
                          N, par, 0.0,
                          [&](std::size_t b, std::size_t e) {
                            double acc = 0.0;
                            for (std::size_t i = b; i < e; ++i) acc += target[i];
                            return acc;
                          },
                          [](double a, double b) { return a + b; }) /
                      static_cast<double>(N);

  auto features = [&](std::size_t i, Vec& phi, Vec& row) {
    fm.eval(states.col(i).data(), phi.data());
    row.head(p) = phi;
    for (int j = 0; j < d; ++j) row.segment(p * (1 + j), p) = phi * (increments(j, i) * inv_sqrt_dt);
  };
  const Normal zero{Mat::Zero(q, q), Mat::Zero(q, 1)};
  Normal ne = parallel_reduce(
      N, par, zero,
      [&](std::size_t b, std::size_t e) {
        Normal acc = zero;
        Vec phi(p), row(q);
        for (std::size_t i = b; i < e; ++i) {
          features(i, phi, row);
          acc.G.selfadjointView<Eigen::Lower>().rankUpdate(row);
          acc.B.col(0).noalias() += row * (target[i] - mean);
        }
        return acc;
      },
      [](const Normal& a, const Normal& b) { return Normal{a.G + b.G, a.B + b.B}; });
  Mat G = ne.G.selfadjointView<Eigen::Lower>();
  G /= static_cast<double>(N);
  ne.B /= static_cast<double>(N);
  const Solved sv = solve_normal(std::move(G), ne.B);

  out.level.coef = sv.coef.topRows(p);
  out.level.target_mean = Vec::Constant(1, mean);
  out.slope.coef.resize(p, d);
  for (int j = 0; j < d; ++j) out.slope.coef.col(j) = sv.coef.block(p * (1 + j), 0, p, 1) * inv_sqrt_dt;
  out.slope.target_mean = Vec::Zero(d);
  for (RegressionFit* f : {&out.level, &out.slope}) {
    f->condition = sv.condition;
    f->ridge = sv.ridge;
  }

  out.level_fitted.resize(1, static_cast<Eigen::Index>(N));
  out.slope_fitted.resize(d, static_cast<Eigen::Index>(N));
  parallel_for(N, par, [&](std::size_t b, std::size_t e) {
    Vec phi(p);
    for (std::size_t i = b; i < e; ++i) {
      fm.eval(states.col(i).data(), phi.data());
      out.level_fitted(0, i) = mean + out.level.coef.col(0).dot(phi);
      out.slope_fitted.col(i) = out.slope.coef.transpose() * phi;
    }
  });
  return out;
}

}  // namespace slowfast
