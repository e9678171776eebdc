#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advreg/gradient_set.hpp"
#include "advreg/matrix.hpp"

namespace advreg {
struct CriticParams;
}

namespace advreg::model {

enum class Activation { relu, elu };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

// Generator f(theta; x) without biases. layers[k] has shape
// [width(k+1) x width(k)]; the last layer is linear. For the two-layer net
// layers = {U [h x d_x], V [d_y x h]} and f(x) = V [U x]_+.
struct ModelParams {
  std::vector<Matrix> layers;
  Matrix initial_first;  // U0: frozen copy of the first layer at initialisation
  Activation activation = Activation::relu;

  std::size_t depth() const { return layers.size(); }
  std::size_t hidden() const { return layers.front().rows(); }
  std::size_t input_dim() const { return layers.front().cols(); }
  std::size_t output_dim() const { return layers.back().rows(); }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Layer widths d_x, h, ..., d_y. Widths between h and d_y are geometrically
// interpolated for depth > 2.
std::vector<std::size_t> layer_widths(std::size_t d_x, std::size_t h, std::size_t d_y, std::size_t depth);

// Weights ~ Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), drawn from the "init"
// substream of `seed`.
ModelParams init_params(std::size_t d_x, std::size_t h, std::size_t d_y, std::size_t depth,
                        Activation activation, std::uint64_t seed);

struct ForwardCache {
  std::vector<Matrix> activations;  // activations[0] = x, activations[k] = sigma(pre[k-1])
  std::vector<Matrix> pre;          // hidden pre-activations, one per hidden layer
  Matrix output;                    // b x d_y
};

ForwardCache forward(const ModelParams& p, const Matrix& x);
Matrix predict(const ModelParams& p, const Matrix& x);

// Backpropagates d(objective)/d(output) (b x d_y) through a cached forward pass.
GradientSet backward(const ModelParams& p, const ForwardCache& cache, const Matrix& d_output);

struct LossAndGrads {
  double loss = 0.0;
  GradientSet grads;
  ForwardCache cache;
};

// loss = (1/b) sum_i ||f(x_i) - y_i||^2 and its gradient.
LossAndGrads supervised_loss_and_grads(const ModelParams& p, const Matrix& x, const Matrix& y);

// Mean squared error of predictions against targets (same convention as the loss).
double mse(const Matrix& predictions, const Matrix& targets);

// Gradient of -(1/b) sum_i g(psi; f(theta; x_i)) with respect to theta, the
// critic held fixed.
GradientSet adversarial_grads(const ModelParams& p, const CriticParams& critic, const Matrix& x);
// Same, reusing an existing forward cache.
GradientSet adversarial_grads(const ModelParams& p, const CriticParams& critic, const ForwardCache& cache);

// All layers flattened in order into one vector (theta as a single vector).
std::vector<double> flatten(const ModelParams& p);

}  // namespace advreg::model
