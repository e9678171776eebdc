#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace advreg::data {

// Constants that hold for a synthetic objective by construction.
struct ObjectiveConstants {
  double L0 = 0.0;        // (L0, L1)-smoothness: ||Hess|| <= L0 + L1 ||grad||
  double L1 = 0.0;
  double mu = 0.0;        // strong convexity (0 when not strongly convex)
  double l_star = 0.0;    // infimum of the objective
  double smooth_L = 0.0;  // Lipschitz constant of the gradient on the box |theta_i| <= radius
  double radius = 0.0;
};

struct SyntheticFunction {
  std::string name;
  std::size_t dim = 1;
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
  std::function<double(std::span<const double>)> hessian_norm;
  ObjectiveConstants constants;
  std::optional<std::vector<double>> minimizer;
};

struct SyntheticParams {
  double a = 1.0;           // quadratic curvature scale
  double theta_star = 0.0;  // quadratic centre (broadcast to every coordinate)
  double mu = 1.0;          // strongly-convex-quadratic smallest curvature
  std::size_t dim = 1;
  double radius = 2.0;      // box used to state smooth_L for the quartic
};

// Names: "quadratic", "scalar-exponential", "strongly-convex-quadratic",
// "smooth-nonconvex-quartic". Unknown names throw ConfigError.
//
//   quadratic                  a ||theta - theta*||^2           (L0, L1) = (2a, 0)
//   scalar-exponential         exp(theta), dim 1                (L0, L1) = (0, 1), l* = 0 (infimum)
//   strongly-convex-quadratic  1/2 sum_i lambda_i theta_i^2,    lambda_i spaced evenly in [mu, 2 mu]
//   smooth-nonconvex-quartic   1/4 sum_i (theta_i^2 - 1)^2      (L0, L1) = (2, 3), L = 3 r^2 - 1 on |theta_i| <= r
SyntheticFunction make_synthetic(const std::string& name, const SyntheticParams& params = {});

// Parses "name" or "name(key=value,...)" with keys a, theta_star, mu, dim, radius.
SyntheticFunction parse_synthetic(const std::string& spec);

}  // namespace advreg::data
