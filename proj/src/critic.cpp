#include "advreg/critic.hpp"

#include <cmath>

#include "advreg/kernels.hpp"
#include "advreg/rng.hpp"

namespace advreg {

namespace {

void check_input(const CriticParams& c, const Matrix& z, const char* what) {
  if (z.cols() != c.input_dim())
    throw DimensionError(std::string(what) + ": input has " + std::to_string(z.cols()) +
                         " columns, critic expects " + std::to_string(c.input_dim()));
}

// Hidden layer of the ReLU critic for a batch: gate D_ik = 1[(W1 z_i)_k > 0],
// activations [W1 z_i]_+ and gated output weights s_ik = D_ik w2_k.
struct HiddenState {
  Matrix gate;
  Matrix act;
  Matrix s;
};

HiddenState hidden_state(const CriticParams& c, const Matrix& z) {
  HiddenState h;
  h.act = kernels::matmul_nt(z, c.layers[0]);
  h.gate = Matrix(h.act.rows(), h.act.cols());
  h.s = Matrix(h.act.rows(), h.act.cols());
  const auto w2 = c.layers[1].values();
  for (std::size_t i = 0; i < h.act.rows(); ++i) {
    auto a = h.act.row(i);
    auto g = h.gate.row(i);
    auto s = h.s.row(i);
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (a[k] > 0.0) {
        g[k] = 1.0;
        s[k] = w2[k];
      } else {
        a[k] = 0.0;
      }
    }
  }
  return h;
}

}  // namespace

CriticInit parse_critic_init(const std::string& name) {
  if (name == "uniform") return CriticInit::uniform;
  if (name == "zero") return CriticInit::zero;
  throw ConfigError("unknown critic init '" + name + "' (expected uniform or zero)");
}

CriticParams init_critic(std::size_t d_y, std::size_t hidden, double lambda_gp, CriticInit init,
                         std::uint64_t seed) {
  if (d_y == 0) throw ConfigError("critic input dimension must be positive");
  if (!(lambda_gp >= 0.0)) throw ConfigError("lambda_gp must be nonnegative");
  CriticParams c;
  c.lambda_gp = lambda_gp;
  if (hidden == 0) {
    c.layers.emplace_back(1, d_y);
  } else {
    c.layers.emplace_back(hidden, d_y);
    c.layers.emplace_back(1, hidden);
  }
  if (init == CriticInit::uniform) {
    Rng rng = make_rng(seed, "critic");
    for (auto& w : c.layers) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
      for (double& v : w.values()) v = bound * (2.0 * uniform01(rng) - 1.0);
    }
  }
  for (const auto& w : c.layers) c.velocity.emplace_back(w.rows(), w.cols());
  return c;
}

CriticParams linear_critic(std::span<const double> w, double lambda_gp) {
  CriticParams c;
  c.lambda_gp = lambda_gp;
  c.layers.emplace_back(1, w.size(), std::vector<double>(w.begin(), w.end()));
  c.velocity.emplace_back(1, w.size());
  return c;
}

Matrix critic_score(const CriticParams& c, const Matrix& z) {
  check_input(c, z, "critic_score");
  if (c.linear()) return kernels::matmul_nt(z, c.layers[0]);
  return kernels::matmul_nt(hidden_state(c, z).act, c.layers[1]);
}

Matrix critic_input_grad(const CriticParams& c, const Matrix& z) {
  check_input(c, z, "critic_input_grad");
  if (c.linear()) {
    Matrix g(z.rows(), z.cols());
    for (std::size_t i = 0; i < z.rows(); ++i) {
      auto row = g.row(i);
      std::copy(c.layers[0].values().begin(), c.layers[0].values().end(), row.begin());
    }
    return g;
  }
  return kernels::matmul(hidden_state(c, z).s, c.layers[0]);
}

GradientSet critic_mean_score_grad(const CriticParams& c, const Matrix& z) {
  check_input(c, z, "critic_mean_score_grad");
  const double inv_b = 1.0 / static_cast<double>(z.rows());
  GradientSet g = GradientSet::zeros_like(c.layers);
  if (c.linear()) {
    auto out = g.layers[0].values();
    for (std::size_t i = 0; i < z.rows(); ++i) {
      auto row = z.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) out[j] += row[j];
    }
    g.layers[0] *= inv_b;
    return g;
  }
  const HiddenState h = hidden_state(c, z);
  const Matrix& hidden = h.act;
  g.layers[0] = kernels::matmul_tn(h.s, z);
  g.layers[0] *= inv_b;
  auto out = g.layers[1].values();
  for (std::size_t i = 0; i < hidden.rows(); ++i) {
    auto row = hidden.row(i);
    for (std::size_t k = 0; k < row.size(); ++k) out[k] += row[k];
  }
  g.layers[1] *= inv_b;
  return g;
}

PenaltyResult gradient_penalty(const CriticParams& c, const Matrix& real, const Matrix& fake,
                               std::uint64_t seed) {
  require_same_shape(real, fake, "gradient_penalty");
  check_input(c, real, "gradient_penalty");
  const std::size_t b = real.rows();
  PenaltyResult r;
  r.interpolates = Matrix(b, real.cols());
  Rng rng = make_rng(seed, "gp");
  for (std::size_t i = 0; i < b; ++i) {
    const double t = uniform01(rng);
    auto zr = real.row(i), zf = fake.row(i);
    auto out = r.interpolates.row(i);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = t * zr[j] + (1.0 - t) * zf[j];
  }

  HiddenState h;
  Matrix q;  // b x d_y input gradients
  if (c.linear()) {
    q = critic_input_grad(c, r.interpolates);
  } else {
    h = hidden_state(c, r.interpolates);
    q = kernels::matmul(h.s, c.layers[0]);
  }

  // rows of q become d penalty / d (grad_z g(z_i))
  double total = 0.0;
  const double lam = c.lambda_gp;
  for (std::size_t i = 0; i < b; ++i) {
    auto row = q.row(i);
    double n2 = 0.0;
    for (double v : row) n2 += v * v;
    const double n = std::sqrt(n2);
    total += (n - 1.0) * (n - 1.0);
    const double coef = n > 0.0 ? lam * 2.0 * (n - 1.0) / (static_cast<double>(b) * n) : 0.0;
    for (double& v : row) v *= coef;
  }
  r.penalty = lam * total / static_cast<double>(b);

  r.grads = GradientSet::zeros_like(c.layers);
  if (c.linear()) {
    auto out = r.grads.layers[0].values();
    for (std::size_t i = 0; i < b; ++i) {
      auto row = q.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) out[j] += row[j];
    }
  } else {
    // d/dW1 = sum_i s_i r_i^T ; d/dw2_k = sum_i 1[.]_ik (W1 r_i)_k
    r.grads.layers[0] = kernels::matmul_tn(h.s, q);
    Matrix w1r = kernels::matmul_nt(q, c.layers[0]);  // b x h_c
    auto out = r.grads.layers[1].values();
    for (std::size_t i = 0; i < b; ++i) {
      auto gate = h.gate.row(i);
      auto v = w1r.row(i);
      for (std::size_t k = 0; k < v.size(); ++k) out[k] += gate[k] * v[k];
    }
  }
  return r;
}

CriticStepResult critic_step(CriticParams& c, const Matrix& real, const Matrix& fake, double lr,
                             double momentum, std::uint64_t seed) {
  require_same_shape(real, fake, "critic_step");
  const Matrix score_real = critic_score(c, real);
  const Matrix score_fake = critic_score(c, fake);
  double mean_real = 0.0, mean_fake = 0.0;
  for (double v : score_real.values()) mean_real += v;
  for (double v : score_fake.values()) mean_fake += v;
  mean_real /= static_cast<double>(real.rows());
  mean_fake /= static_cast<double>(fake.rows());

  CriticStepResult out;
  out.gap = mean_real - mean_fake;
  GradientSet grads = critic_mean_score_grad(c, fake);
  grads.add_scaled(critic_mean_score_grad(c, real), -1.0);
  if (c.lambda_gp > 0.0) {
    PenaltyResult pen = gradient_penalty(c, real, fake, seed);
    out.penalty = pen.penalty;
    grads += pen.grads;
  }
  const double loss = -out.gap + out.penalty;
  if (!std::isfinite(loss) || !grads.all_finite())
    throw CriticDivergenceError("critic loss is not finite", c);

  std::vector<Matrix> velocity = c.velocity;
  std::vector<Matrix> layers = c.layers;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    auto v = velocity[k].values();
    auto w = layers[k].values();
    auto g = grads.layers[k].values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = momentum * v[i] + g[i];
      w[i] -= lr * v[i];
    }
    if (!layers[k].all_finite()) throw CriticDivergenceError("critic update is not finite", c);
  }
  c.velocity = std::move(velocity);
  c.layers = std::move(layers);
  return out;
}

}  // namespace advreg
