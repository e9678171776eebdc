#include "advreg/model.hpp"

#include <algorithm>
#include <cmath>

#include "advreg/critic.hpp"
#include "advreg/errors.hpp"
#include "advreg/kernels.hpp"
#include "advreg/rng.hpp"

namespace advreg::model {

namespace {

void activate(Activation a, const Matrix& pre, Matrix& out) {
  auto src = pre.values();
  auto dst = out.values();
  if (a == Activation::relu) {
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0.0 ? src[i] : 0.0;
  } else {
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0.0 ? src[i] : std::expm1(src[i]);
  }
}

// delta *= sigma'(pre), elementwise
void mask_derivative(Activation a, const Matrix& pre, Matrix& delta) {
  auto z = pre.values();
  auto d = delta.values();
  if (a == Activation::relu) {
    for (std::size_t i = 0; i < z.size(); ++i)
      if (!(z[i] > 0.0)) d[i] = 0.0;
  } else {
    for (std::size_t i = 0; i < z.size(); ++i)
      if (!(z[i] > 0.0)) d[i] *= std::exp(z[i]);
  }
}

}  // namespace

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "elu") return Activation::elu;
  throw ConfigError("unknown activation '" + name + "' (expected relu or elu)");
}

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "elu"; }

std::vector<std::size_t> layer_widths(std::size_t d_x, std::size_t h, std::size_t d_y,
                                      std::size_t depth) {
  if (d_x == 0 || h == 0 || d_y == 0) throw ConfigError("layer dimensions must be positive");
  if (depth < 2) throw ConfigError("depth must be at least 2");
  std::vector<std::size_t> w{d_x, h};
  const double ratio = static_cast<double>(d_y) / static_cast<double>(h);
  for (std::size_t k = 2; k < depth; ++k) {
    const double t = static_cast<double>(k - 1) / static_cast<double>(depth - 1);
    w.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(h * std::pow(ratio, t)))));
  }
  w.push_back(d_y);
  return w;
}

ModelParams init_params(std::size_t d_x, std::size_t h, std::size_t d_y, std::size_t depth,
                        Activation activation, std::uint64_t seed) {
  const auto widths = layer_widths(d_x, h, d_y, depth);
  ModelParams p;
  p.activation = activation;
  Rng rng = make_rng(seed, "init");
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    Matrix w(widths[k + 1], widths[k]);
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths[k]));
    for (double& v : w.values()) v = bound * (2.0 * uniform01(rng) - 1.0);
    p.layers.push_back(std::move(w));
  }
  p.initial_first = p.layers.front();
  return p;
}

ForwardCache forward(const ModelParams& p, const Matrix& x) {
  if (x.cols() != p.input_dim())
    throw DimensionError("forward: input has " + std::to_string(x.cols()) + " columns, model expects " +
                         std::to_string(p.input_dim()));
  ForwardCache c;
  c.activations.reserve(p.depth());
  c.activations.push_back(x);
  for (std::size_t k = 0; k + 1 < p.depth(); ++k) {
    Matrix pre = kernels::matmul_nt(c.activations.back(), p.layers[k]);
    Matrix act(pre.rows(), pre.cols());
    activate(p.activation, pre, act);
    c.pre.push_back(std::move(pre));
    c.activations.push_back(std::move(act));
  }
  c.output = kernels::matmul_nt(c.activations.back(), p.layers.back());
  return c;
}

Matrix predict(const ModelParams& p, const Matrix& x) { return forward(p, x).output; }

GradientSet backward(const ModelParams& p, const ForwardCache& cache, const Matrix& d_output) {
  if (d_output.rows() != cache.output.rows() || d_output.cols() != cache.output.cols())
    throw DimensionError("backward: output gradient shape mismatch");
  GradientSet g;
  g.layers.resize(p.depth());
  Matrix delta = d_output;
  for (std::size_t k = p.depth(); k-- > 0;) {
    g.layers[k] = kernels::matmul_tn(delta, cache.activations[k]);
    if (k > 0) {
      delta = kernels::matmul(delta, p.layers[k]);
      mask_derivative(p.activation, cache.pre[k - 1], delta);
    }
  }
  return g;
}

double mse(const Matrix& predictions, const Matrix& targets) {
  require_same_shape(predictions, targets, "mse");
  auto a = predictions.values();
  auto b = targets.values();
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(predictions.rows());
}

LossAndGrads supervised_loss_and_grads(const ModelParams& p, const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows() || y.cols() != p.output_dim())
    throw DimensionError("supervised_loss_and_grads: batch shapes inconsistent");
  LossAndGrads r;
  r.cache = forward(p, x);
  r.loss = mse(r.cache.output, y);
  Matrix d = r.cache.output - y;
  d *= 2.0 / static_cast<double>(x.rows());
  r.grads = backward(p, r.cache, d);
  return r;
}

GradientSet adversarial_grads(const ModelParams& p, const CriticParams& critic,
                              const ForwardCache& cache) {
  if (critic.input_dim() != p.output_dim())
    throw DimensionError("adversarial_grads: critic input dim != model output dim");
  Matrix d = critic_input_grad(critic, cache.output);
  d *= -1.0 / static_cast<double>(cache.output.rows());
  return backward(p, cache, d);
}

GradientSet adversarial_grads(const ModelParams& p, const CriticParams& critic, const Matrix& x) {
  return adversarial_grads(p, critic, forward(p, x));
}

std::vector<double> flatten(const ModelParams& p) {
  std::vector<double> out;
  for (const auto& m : p.layers) out.insert(out.end(), m.values().begin(), m.values().end());
  return out;
}

}  // namespace advreg::model
