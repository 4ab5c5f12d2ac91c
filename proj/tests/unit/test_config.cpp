#include "doctest.h"
#include "slowfast/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace slowfast;

namespace {

ErrorCode code_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("number lists") {
  CHECK(parse_double_list("0.2, 0.1,0.05") == std::vector<double>{0.2, 0.1, 0.05});
  CHECK_THROWS_AS(parse_double_list("0.2,abc"), Error);
  CHECK_THROWS_AS(parse_double_list(""), Error);
}

TEST_CASE("empty file falls back to scalar-riesz") {
  const LoadedConfig c = parse_config("");
  CHECK(c.spec.name == "scalar-riesz");
  CHECK_FALSE(c.run.paths);
}

TEST_CASE("full file") {
  const std::string text =
      "[preset]\nname = wz-sine\n"
      "[horizon]\nT = 2.0\nx0 = 0.25\n"
      "[constants]\nL_sigma = 2.0\n"
      "[coefficients]\nsigma = affine_sin:1.0:0.5\nb = cos:0.5\nA = -0.5\nlambda = 0.7\n"
      "[run]\npaths = 1234\nsteps = 80\neps = 0.2,0.1\nseed = 9\nn_schedule = 1,2,4\nbasis = pwl:6\n";
  const LoadedConfig c = parse_config(text);
  CHECK(c.spec.T == 2.0);
  CHECK(c.spec.x0[0] == 0.25);
  CHECK(c.spec.constants.L_sigma == 2.0);
  CHECK(c.spec.coeffs.A(0, 0) == -0.5);
  CHECK(c.spec.coeffs.lambda[0] == 0.7);
  const Vec x = Vec::Constant(1, 0.3);
  CHECK(c.spec.coeffs.sigma(x)(0, 0) == doctest::Approx(1.0 + 0.5 * std::sin(0.3)));
  CHECK(c.spec.coeffs.b(x)[0] == doctest::Approx(0.5 * std::cos(0.3)));
  CHECK(*c.run.paths == 1234);
  CHECK(*c.run.steps == 80);
  CHECK(*c.run.eps == std::vector<double>{0.2, 0.1});
  CHECK(*c.run.seed == 9);
  CHECK(*c.run.basis == "pwl:6");
}

TEST_CASE("config errors") {
  CHECK(code_of("[preset]\nname = nope\n") == ErrorCode::ConfigError);
  CHECK(code_of("[horizon]\nT = -1\n") == ErrorCode::ConfigError);
  CHECK(code_of("[horizon]\nx0 = 1,2\n") == ErrorCode::ConfigError);
  CHECK(code_of("[constants]\nL_q = 1\n") == ErrorCode::ConfigError);
  CHECK(code_of("[coefficients]\nsigma = cubic\n") == ErrorCode::ConfigError);
  CHECK(code_of("[dimensions]\nn_slow = 3\n") == ErrorCode::ConfigError);
  CHECK(code_of("[preset]\nname = fastfast-diag\n[coefficients]\nb = cos\n") == ErrorCode::ConfigError);
  CHECK(code_of("this is not ini [[[") == ErrorCode::ConfigError);
  CHECK_FALSE(coefficient_names().empty());
}

TEST_CASE("loading from disk") {
  const auto path = std::filesystem::temp_directory_path() / "slowfast_test_config.ini";
  {
    std::ofstream out(path);
    out << "[run]\npaths = 77\n";
  }
  CHECK(*load_config(path.string()).run.paths == 77);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_config(path.string()), Error);
}
