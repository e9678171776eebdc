#include "advreg/synthetic.hpp"

#include <cmath>
#include <sstream>

#include "advreg/errors.hpp"

namespace advreg::data {

namespace {

SyntheticFunction quadratic(const SyntheticParams& p) {
  if (!(p.a > 0.0)) throw ConfigError("quadratic: a must be positive");
  SyntheticFunction f;
  f.name = "quadratic";
  f.dim = p.dim;
  const double a = p.a, c = p.theta_star;
  f.value = [a, c](std::span<const double> t) {
    double s = 0.0;
    for (double x : t) s += (x - c) * (x - c);
    return a * s;
  };
  f.gradient = [a, c](std::span<const double> t) {
    std::vector<double> g(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) g[i] = 2.0 * a * (t[i] - c);
    return g;
  };
  f.hessian_norm = [a](std::span<const double>) { return 2.0 * a; };
  f.constants = {2.0 * a, 0.0, 2.0 * a, 0.0, 2.0 * a, p.radius};
  f.minimizer = std::vector<double>(p.dim, c);
  return f;
}

SyntheticFunction scalar_exponential(const SyntheticParams& p) {
  SyntheticFunction f;
  f.name = "scalar-exponential";
  f.dim = 1;
  f.value = [](std::span<const double> t) { return std::exp(t[0]); };
  f.gradient = [](std::span<const double> t) { return std::vector<double>{std::exp(t[0])}; };
  f.hessian_norm = [](std::span<const double> t) { return std::exp(t[0]); };
  f.constants = {0.0, 1.0, 0.0, 0.0, std::exp(p.radius), p.radius};
  return f;
}

SyntheticFunction strongly_convex_quadratic(const SyntheticParams& p) {
  if (!(p.mu > 0.0)) throw ConfigError("strongly-convex-quadratic: mu must be positive");
  if (p.dim == 0) throw ConfigError("strongly-convex-quadratic: dim must be positive");
  std::vector<double> lambda(p.dim);
  for (std::size_t i = 0; i < p.dim; ++i)
    lambda[i] = p.dim == 1 ? p.mu : p.mu * (1.0 + static_cast<double>(i) / static_cast<double>(p.dim - 1));
  SyntheticFunction f;
  f.name = "strongly-convex-quadratic";
  f.dim = p.dim;
  f.value = [lambda](std::span<const double> t) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += 0.5 * lambda[i] * t[i] * t[i];
    return s;
  };
  f.gradient = [lambda](std::span<const double> t) {
    std::vector<double> g(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) g[i] = lambda[i] * t[i];
    return g;
  };
  const double top = lambda.back();
  f.hessian_norm = [top](std::span<const double>) { return top; };
  f.constants = {top, 0.0, p.mu, 0.0, top, p.radius};
  f.minimizer = std::vector<double>(p.dim, 0.0);
  return f;
}

SyntheticFunction quartic(const SyntheticParams& p) {
  if (p.dim == 0) throw ConfigError("smooth-nonconvex-quartic: dim must be positive");
  SyntheticFunction f;
  f.name = "smooth-nonconvex-quartic";
  f.dim = p.dim;
  f.value = [](std::span<const double> t) {
    double s = 0.0;
    for (double x : t) s += 0.25 * (x * x - 1.0) * (x * x - 1.0);
    return s;
  };
  f.gradient = [](std::span<const double> t) {
    std::vector<double> g(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) g[i] = t[i] * t[i] * t[i] - t[i];
    return g;
  };
  f.hessian_norm = [](std::span<const double> t) {
    double m = 0.0;
    for (double x : t) m = std::max(m, std::abs(3.0 * x * x - 1.0));
    return m;
  };
  f.constants = {2.0, 3.0, 0.0, 0.0, 3.0 * p.radius * p.radius - 1.0, p.radius};
  f.minimizer = std::vector<double>(p.dim, 1.0);
  return f;
}

}  // namespace

SyntheticFunction make_synthetic(const std::string& name, const SyntheticParams& params) {
  if (name == "quadratic") return quadratic(params);
  if (name == "scalar-exponential") return scalar_exponential(params);
  if (name == "strongly-convex-quadratic") return strongly_convex_quadratic(params);
  if (name == "smooth-nonconvex-quartic") return quartic(params);
  throw ConfigError("unknown synthetic function '" + name + "'");
}

SyntheticFunction parse_synthetic(const std::string& spec) {
  const auto open = spec.find('(');
  const std::string name = spec.substr(0, open);
  SyntheticParams p;
  if (open != std::string::npos) {
    if (spec.back() != ')') throw ConfigError("malformed synthetic spec '" + spec + "'");
    std::stringstream body(spec.substr(open + 1, spec.size() - open - 2));
    std::string item;
    while (std::getline(body, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError("malformed synthetic parameter '" + item + "'");
      const std::string key = item.substr(0, eq), val = item.substr(eq + 1);
      try {
        if (key == "a") p.a = std::stod(val);
        else if (key == "theta_star") p.theta_star = std::stod(val);
        else if (key == "mu") p.mu = std::stod(val);
        else if (key == "dim") p.dim = std::stoul(val);
        else if (key == "radius") p.radius = std::stod(val);
        else throw ConfigError("unknown synthetic parameter '" + key + "'");
      } catch (const std::logic_error&) {
        throw ConfigError("synthetic parameter '" + key + "' is not numeric");
      }
    }
  }
  return make_synthetic(name, p);
}

}  // namespace advreg::data
