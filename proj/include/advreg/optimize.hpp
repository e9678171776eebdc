#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "advreg/gradient_set.hpp"
#include "advreg/matrix.hpp"

namespace advreg::optimize {

struct MomentumState {
  std::vector<Matrix> velocity;
  double coefficient = 0.9;

  static MomentumState for_params(const std::vector<Matrix>& params, double coefficient);
};

// v <- momentum v + g ; params <- params - lr v. Throws DivergenceError and
// leaves params/state untouched when the update would be non-finite.
void sgd_momentum_step(std::vector<Matrix>& params, const GradientSet& grads, MomentumState& state,
                       double lr);

// Rescales every layer by tau / ||g|| when the joint norm exceeds tau.
GradientSet clip_global(const GradientSet& g, double tau);

enum class ClipMode { none, adaptive_sc, constant_nc };

ClipMode parse_clip_mode(const std::string& name);
std::string to_string(ClipMode m);

struct ClipSchedule {
  ClipMode mode = ClipMode::none;
  double G = 1.0;      // alpha-moment bound
  double mu = 1.0;     // strong convexity
  double alpha = 2.0;  // moment order in (1, 2]
  double L = 1.0;      // smoothness
  double R0 = 1.0;     // initial gap
  std::size_t T = 1;   // horizon

  // Throws ConfigError naming the offending field.
  void validate() const;
};

struct StepPair {
  double tau = 0.0;
  double eta = 0.0;
};

// tau_k = G k^{1/alpha} mu^{1/alpha}, eta_k = 5 / (2 mu (k + 1)). k >= 1.
StepPair schedule_sc(std::size_t k, const ClipSchedule& s);
// eta = (R0^alpha L^{2-2alpha} / (G^2 T^alpha))^{1/(3alpha-2)}, tau = G (eta L)^{-1/alpha}.
StepPair schedule_nc(const ClipSchedule& s);

// Streaming k-weighted average: add(theta_{k-1}) for k = 1, 2, ... gives
// sum_k k theta_{k-1} / sum_k k without storing the history.
class WeightedAverage {
 public:
  void add(const std::vector<double>& theta);
  const std::vector<double>& value() const { return avg_; }
  std::size_t count() const { return k_; }

 private:
  std::vector<double> avg_;
  std::size_t k_ = 0;
};

std::vector<double> weighted_average(const std::vector<std::vector<double>>& iterates);

// h = 1 / (L0 + L1 L^2 beta eps).
double l0l1_step_size(double L0, double L1, double L, double beta, double eps);

}  // namespace advreg::optimize
