#pragma once

#include "slowfast/common.hpp"

#include <string>

namespace slowfast {

/// State-feedback control law u = eval(step, x, fast_state). The fast state
/// is empty for the reduced dynamics.
struct FeedbackPolicy {
  std::function<Vec(int, const Vec&, const Vec&)> eval;
  double L_ubar = 0.0;
  std::string description;

  static FeedbackPolicy constant(const Vec& u, std::string description = "constant");
};

inline FeedbackPolicy FeedbackPolicy::constant(const Vec& u, std::string description) {
  FeedbackPolicy p;
  p.eval = [u](int, const Vec&, const Vec&) { return u; };
  p.description = std::move(description);
  return p;
}

}  // namespace slowfast
