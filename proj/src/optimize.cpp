#include "advreg/optimize.hpp"

#include <cmath>

#include "advreg/errors.hpp"

namespace advreg::optimize {

MomentumState MomentumState::for_params(const std::vector<Matrix>& params, double coefficient) {
  if (!(coefficient >= 0.0 && coefficient < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  MomentumState s;
  s.coefficient = coefficient;
  for (const auto& p : params) s.velocity.emplace_back(p.rows(), p.cols());
  return s;
}

void sgd_momentum_step(std::vector<Matrix>& params, const GradientSet& grads, MomentumState& state,
                       double lr) {
  if (grads.layers.size() != params.size() || state.velocity.size() != params.size())
    throw DimensionError("sgd_momentum_step: layer count mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) {
    require_same_shape(params[k], grads.layers[k], "sgd_momentum_step gradient");
    require_same_shape(params[k], state.velocity[k], "sgd_momentum_step velocity");
  }
  // Check before writing so a failed step leaves everything as it was.
  const double mu = state.coefficient;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto v = state.velocity[k].values();
    auto g = grads.layers[k].values();
    auto w = params[k].values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double nv = mu * v[i] + g[i];
      if (!std::isfinite(nv) || !std::isfinite(w[i] - lr * nv))
        throw DivergenceError("non-finite parameter update in layer " + std::to_string(k));
    }
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto v = state.velocity[k].values();
    auto g = grads.layers[k].values();
    auto w = params[k].values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = mu * v[i] + g[i];
      w[i] -= lr * v[i];
    }
  }
}

GradientSet clip_global(const GradientSet& g, double tau) {
  if (!(tau > 0.0)) throw DomainError("clip threshold must be positive");
  const double n = g.norm();
  if (n <= tau) return g;
  GradientSet out = g;
  out *= tau / n;
  return out;
}

ClipMode parse_clip_mode(const std::string& name) {
  if (name == "none") return ClipMode::none;
  if (name == "adaptive_sc") return ClipMode::adaptive_sc;
  if (name == "constant_nc") return ClipMode::constant_nc;
  throw ConfigError("unknown clip.mode '" + name + "' (expected none, adaptive_sc or constant_nc)");
}

std::string to_string(ClipMode m) {
  switch (m) {
    case ClipMode::adaptive_sc: return "adaptive_sc";
    case ClipMode::constant_nc: return "constant_nc";
    default: return "none";
  }
}

void ClipSchedule::validate() const {
  if (mode == ClipMode::none) return;
  if (!(alpha > 1.0 && alpha <= 2.0)) throw ConfigError("clip.alpha must lie in (1, 2]");
  if (!(G >= 0.0)) throw ConfigError("clip.G must be nonnegative");
  if (mode == ClipMode::adaptive_sc && !(mu > 0.0)) throw ConfigError("clip.mu must be positive");
  if (mode == ClipMode::constant_nc) {
    if (!(G > 0.0)) throw ConfigError("clip.G must be positive for constant_nc");
    if (!(L > 0.0)) throw ConfigError("clip.L must be positive");
    if (!(R0 > 0.0)) throw ConfigError("clip.R0 must be positive for constant_nc");
  }
}

StepPair schedule_sc(std::size_t k, const ClipSchedule& s) {
  if (s.mode != ClipMode::adaptive_sc) throw ConfigError("schedule_sc needs clip.mode adaptive_sc");
  if (k == 0) throw DomainError("schedule_sc is defined for k >= 1");
  s.validate();
  const double kd = static_cast<double>(k);
  return {s.G * std::pow(kd, 1.0 / s.alpha) * std::pow(s.mu, 1.0 / s.alpha),
          5.0 / (2.0 * s.mu * (kd + 1.0))};
}

StepPair schedule_nc(const ClipSchedule& s) {
  if (s.mode != ClipMode::constant_nc) throw ConfigError("schedule_nc needs clip.mode constant_nc");
  if (s.T == 0) throw DomainError("schedule_nc needs T >= 1");
  s.validate();
  const double a = s.alpha;
  const double base = std::pow(s.R0, a) * std::pow(s.L, 2.0 - 2.0 * a) /
                      (s.G * s.G * std::pow(static_cast<double>(s.T), a));
  const double eta = std::pow(base, 1.0 / (3.0 * a - 2.0));
  return {s.G * std::pow(eta * s.L, -1.0 / a), eta};
}

void WeightedAverage::add(const std::vector<double>& theta) {
  if (k_ == 0) avg_.assign(theta.size(), 0.0);
  if (theta.size() != avg_.size()) throw DimensionError("weighted average: iterate length changed");
  ++k_;
  // avg_k = avg_{k-1} + k (theta - avg_{k-1}) / (k (k+1) / 2)
  const double w = 2.0 / static_cast<double>(k_ + 1);
  for (std::size_t i = 0; i < theta.size(); ++i) avg_[i] += w * (theta[i] - avg_[i]);
}

std::vector<double> weighted_average(const std::vector<std::vector<double>>& iterates) {
  if (iterates.empty()) throw DomainError("weighted average of an empty sequence");
  WeightedAverage avg;
  for (const auto& t : iterates) avg.add(t);
  return avg.value();
}

double l0l1_step_size(double L0, double L1, double L, double beta, double eps) {
  const double denom = L0 + L1 * L * L * beta * eps;
  if (!(denom > 0.0)) throw DomainError("L0 + L1 L^2 beta eps must be positive");
  return 1.0 / denom;
}

}  // namespace advreg::optimize
