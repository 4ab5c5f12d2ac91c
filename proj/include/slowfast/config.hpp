#pragma once

#include "slowfast/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace slowfast {

/// Run parameters a config file may carry; command-line flags override them.
struct RunSettings {
  std::optional<std::size_t> paths;
  std::optional<int> steps;
  std::optional<std::vector<double>> eps;
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<double>> n_schedule;
  std::optional<std::string> basis;
};

struct LoadedConfig {
  ProblemSpec spec;
  RunSettings run;
};

/// INI problem description. Sections:
///   [preset]      name = scalar-riesz           (base problem, default scalar-riesz)
///   [dimensions]  n_slow, n_fast, n_control     (must match the base problem)
///   [horizon]     T, x0 (comma list)
///   [constants]   L_b, L_sigma, M_r, L_r, m_l, c_l, M_l, L_l, M_h, L_h, L_ubar
///   [coefficients] A, b, sigma, lambda          (named 1-D coefficients, see coefficient_names)
///   [run]         paths, steps, eps, seed, n_schedule, basis
LoadedConfig parse_config(const std::string& text);
LoadedConfig load_config(const std::string& path);

/// Names accepted in [coefficients]: b = zero | cos | cos:<a>; sigma = const:<s> | sin | affine_sin:<a>:<b>.
std::vector<std::string> coefficient_names();

std::vector<double> parse_double_list(const std::string& text);

}  // namespace slowfast
