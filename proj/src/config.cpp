#include "slowfast/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace slowfast {

namespace pt = boost::property_tree;

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    const std::string tok = item.substr(b, e - b + 1);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "not a number: '" + tok + "'");
    }
  }
  if (out.empty()) throw Error(ErrorCode::ConfigError, "empty number list");
  return out;
}

std::vector<std::string> coefficient_names() {
  return {"b=zero", "b=cos", "b=cos:<a>", "sigma=const:<s>", "sigma=sin", "sigma=affine_sin:<a>:<b>"};
}

namespace {

std::vector<std::string> split_colon(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  return parts;
}

double number(const std::string& s, const std::string& what) {
  const auto v = parse_double_list(s);
  if (v.size() != 1) throw Error(ErrorCode::ConfigError, what + " expects one number");
  return v[0];
}

VectorField named_drift(const std::string& name) {
  const auto p = split_colon(name);
  if (p[0] == "zero" && p.size() == 1) return [](const Vec& x) -> Vec { return Vec::Zero(x.size()); };
  if (p[0] == "cos" && p.size() <= 2) {
    const double a = p.size() == 2 ? number(p[1], "cos") : 1.0;
    return [a](const Vec& x) -> Vec { return a * x.array().cos().matrix(); };
  }
  throw Error(ErrorCode::ConfigError, "unknown drift '" + name + "'");
}

MatrixField named_sigma(const std::string& name) {
  const auto p = split_colon(name);
  if (p[0] == "const" && p.size() == 2) {
    const double s = number(p[1], "const");
    return [s](const Vec&) -> Mat { return Mat::Constant(1, 1, s); };
  }
  if (p[0] == "sin" && p.size() == 1) return [](const Vec& x) -> Mat { return Mat::Constant(1, 1, std::sin(x[0])); };
  if (p[0] == "affine_sin" && p.size() == 3) {
    const double a = number(p[1], "affine_sin"), b = number(p[2], "affine_sin");
    return [a, b](const Vec& x) -> Mat { return Mat::Constant(1, 1, a + b * std::sin(x[0])); };
  }
  throw Error(ErrorCode::ConfigError, "unknown diffusion '" + name + "'");
}

}  // namespace

LoadedConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }

  LoadedConfig cfg;
  try {
    cfg.spec = load_preset(tree.get<std::string>("preset.name", "scalar-riesz"));
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  ProblemSpec& s = cfg.spec;

  try {
    if (auto dims = tree.get_child_optional("dimensions")) {
      const Dimensions want{dims->get<int>("n_slow", s.dims.n_slow), dims->get<int>("n_fast", s.dims.n_fast),
                            dims->get<int>("n_control", s.dims.n_control)};
      if (want.n_slow != s.dims.n_slow || want.n_fast != s.dims.n_fast || want.n_control != s.dims.n_control)
        throw Error(ErrorCode::ConfigError, "[dimensions] disagree with preset '" + s.name + "'");
    }
    if (auto h = tree.get_child_optional("horizon")) {
      s.T = h->get<double>("T", s.T);
      if (!(s.T > 0.0)) throw Error(ErrorCode::ConfigError, "T must be positive");
      if (auto x0 = h->get_optional<std::string>("x0")) {
        const auto v = parse_double_list(*x0);
        if (static_cast<int>(v.size()) != s.dims.n_slow) throw Error(ErrorCode::ConfigError, "x0 has the wrong length");
        s.x0 = Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
      }
    }
    if (auto k = tree.get_child_optional("constants")) {
      auto& c = s.constants;
      for (const auto& [key, field] : std::initializer_list<std::pair<const char*, double*>>{
               {"L_b", &c.L_b}, {"L_sigma", &c.L_sigma}, {"M_r", &c.M_r}, {"L_r", &c.L_r}, {"m_l", &c.m_l},
               {"c_l", &c.c_l}, {"M_l", &c.M_l}, {"L_l", &c.L_l}, {"M_h", &c.M_h}, {"L_h", &c.L_h},
               {"L_ubar", &c.L_ubar}})
        *field = k->get<double>(key, *field);
      for (const auto& [key, value] : *k) {
        static const std::vector<std::string> known{"L_b", "L_sigma", "M_r", "L_r", "m_l", "c_l",
                                                    "M_l", "L_l", "M_h", "L_h", "L_ubar"};
        if (std::find(known.begin(), known.end(), key) == known.end())
          throw Error(ErrorCode::ConfigError, "unknown constant '" + key + "'");
      }
    }
    if (auto co = tree.get_child_optional("coefficients")) {
      auto& c = s.coeffs;
      const bool scalar = s.dims.n_slow == 1 && s.dims.n_fast == 1;
      if (!scalar && (co->count("b") || co->count("sigma") || co->count("A")))
        throw Error(ErrorCode::ConfigError, "named coefficients are one-dimensional");
      if (auto a = co->get_optional<std::string>("A")) c.A = Mat::Constant(1, 1, number(*a, "A"));
      if (auto b = co->get_optional<std::string>("b")) c.b = named_drift(*b);
      if (auto sg = co->get_optional<std::string>("sigma")) c.sigma = named_sigma(*sg);
      if (auto l = co->get_optional<std::string>("lambda")) {
        const auto v = parse_double_list(*l);
        if (static_cast<int>(v.size()) != s.dims.n_fast) throw Error(ErrorCode::ConfigError, "lambda has the wrong length");
        c.lambda = Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
      }
      c.b_hat.reset();
      s.name += "+config";
    }
    if (auto r = tree.get_child_optional("run")) {
      if (auto v = r->get_optional<std::size_t>("paths")) cfg.run.paths = *v;
      if (auto v = r->get_optional<int>("steps")) cfg.run.steps = *v;
      if (auto v = r->get_optional<std::string>("eps")) cfg.run.eps = parse_double_list(*v);
      if (auto v = r->get_optional<std::uint64_t>("seed")) cfg.run.seed = *v;
      if (auto v = r->get_optional<std::string>("n_schedule")) cfg.run.n_schedule = parse_double_list(*v);
      if (auto v = r->get_optional<std::string>("basis")) cfg.run.basis = *v;
    }
  } catch (const pt::ptree_error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return cfg;
}

LoadedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace slowfast
