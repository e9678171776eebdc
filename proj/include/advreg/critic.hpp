#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "advreg/errors.hpp"
#include "advreg/gradient_set.hpp"
#include "advreg/matrix.hpp"

namespace advreg {

// Wasserstein critic g(psi; z) for z in R^{d_y}. Two shapes are supported:
// linear, layers = {w [1 x d_y]}, g(z) = w.z; and one ReLU hidden layer,
// layers = {W1 [h_c x d_y], w2 [1 x h_c]}, g(z) = w2 [W1 z]_+.
struct CriticParams {
  std::vector<Matrix> layers;
  double lambda_gp = 10.0;
  std::vector<Matrix> velocity;  // momentum buffers, same shapes as layers

  std::size_t input_dim() const { return layers.front().cols(); }
  bool linear() const { return layers.size() == 1; }

  friend bool operator==(const CriticParams&, const CriticParams&) = default;
};

enum class CriticInit { uniform, zero };

CriticInit parse_critic_init(const std::string& name);

// hidden == 0 gives the linear critic. Uniform init draws from
// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) on the "critic" substream of `seed`.
CriticParams init_critic(std::size_t d_y, std::size_t hidden, double lambda_gp, CriticInit init,
                         std::uint64_t seed);
CriticParams linear_critic(std::span<const double> w, double lambda_gp);

Matrix critic_score(const CriticParams& c, const Matrix& z);       // b x 1
Matrix critic_input_grad(const CriticParams& c, const Matrix& z);  // b x d_y, row i = grad_z g(z_i)
// Gradient of (1/b) sum_i g(z_i) with respect to psi.
GradientSet critic_mean_score_grad(const CriticParams& c, const Matrix& z);

struct PenaltyResult {
  double penalty = 0.0;
  GradientSet grads;  // d penalty / d psi
  Matrix interpolates;
};

// Interpolates z_i = t_i real_i + (1 - t_i) fake_i with one t_i ~ U(0,1) per
// row from the "gp" substream of `seed`; penalty = lambda mean_i (||grad g(z_i)|| - 1)^2.
PenaltyResult gradient_penalty(const CriticParams& c, const Matrix& real, const Matrix& fake,
                               std::uint64_t seed);

struct CriticStepResult {
  double gap = 0.0;      // mean g(real) - mean g(fake), before the step
  double penalty = 0.0;  // before the step
};

// One SGD+momentum step on mean g(fake) - mean g(real) + penalty. On a
// non-finite loss or update the critic is left unchanged and
// CriticDivergenceError carrying that state is thrown.
CriticStepResult critic_step(CriticParams& c, const Matrix& real, const Matrix& fake, double lr,
                             double momentum, std::uint64_t seed);

struct CriticDivergenceError : DivergenceError {
  CriticDivergenceError(const std::string& w, CriticParams last)
      : DivergenceError(w), last_finite(std::move(last)) {}
  CriticParams last_finite;
};

}  // namespace advreg
