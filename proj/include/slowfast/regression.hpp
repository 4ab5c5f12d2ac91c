#pragma once

#include "slowfast/common.hpp"
#include "slowfast/parallel.hpp"

#include <string>
#include <vector>

namespace slowfast {

enum class BasisKind { polynomial, piecewise_linear };

/// Regression basis family. Polynomials are in each standardized coordinate
/// up to `degree`, plus pairwise products when there is more than one
/// coordinate. Piecewise-linear uses `bins` hat functions per coordinate.
struct BasisSpec {
  BasisKind kind = BasisKind::polynomial;
  int degree = 4;
  int bins = 12;

  /// "poly:4", "poly4", "pwl:12".
  static BasisSpec parse(const std::string& text);
  std::string str() const;
};

/// Basis functions on one cross-section of states, standardized per
/// coordinate. Coordinates without spread are dropped.
class FeatureMap {
 public:
  FeatureMap() = default;
  /// states: one column per path.
  static FeatureMap fit(const BasisSpec& spec, const Mat& states);

  int size() const { return n_features_; }
  int n_inputs() const { return static_cast<int>(mean_.size()); }
  void eval(const double* state, double* out) const;

 private:
  BasisSpec spec_;
  Vec mean_, inv_scale_;
  std::vector<int> active_;
  Vec lo_, hi_;  // standardized range, piecewise-linear only
  int n_features_ = 1;
};

struct RegressionFit {
  FeatureMap features;
  Mat coef;  // n_features x n_targets
  Vec target_mean;
  double condition = 1.0;
  bool ridge = false;

  int n_targets() const { return static_cast<int>(target_mean.size()); }
  Vec predict(const double* state) const;
  Vec predict(const Vec& state) const { return predict(state.data()); }
};

constexpr double kSingularCondition = 1e12;
constexpr double kRidgePenalty = 1e-8;

/// Least squares of targets (one column per path) on the basis. The targets
/// are centered first so constants are reproduced exactly. When the design
/// condition number exceeds kSingularCondition a ridge penalty is used.
/// fitted, if non-null, receives the in-sample predictions.
RegressionFit regress(const BasisSpec& spec, const Mat& states, const Mat& targets, const ParallelOptions& par,
                      Mat* fitted = nullptr);

/// Least squares of a scalar target Y on [phi, phi * w_1, ..., phi * w_d]
/// with w = dW / sqrt(dt). Because E[w | state] = 0 and E[w w^T | state] = I,
/// the level part estimates E[Y | state] and the slope part estimates
/// E[Y dW | state] / dt, with the Z dW term taken out of the residual.
struct JointFit {
  RegressionFit level;  // one target
  RegressionFit slope;  // d targets: the Z estimate
  Mat level_fitted;     // 1 x n_paths
  Mat slope_fitted;     // d x n_paths
};

JointFit regress_with_increments(const BasisSpec& spec, const Mat& states, const Vec& target, const Mat& increments,
                                 double dt, const ParallelOptions& par);

}  // namespace slowfast
