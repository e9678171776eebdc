#include "advreg/theory.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "advreg/errors.hpp"
#include "advreg/kernels.hpp"
#include "advreg/linalg.hpp"
#include "advreg/rng.hpp"

namespace advreg::theory {

namespace {

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dist2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

std::vector<double> unit_sphere(Rng& rng, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> u(dim);
  double s = 0.0;
  do {
    for (double& v : u) v = n(rng);
    s = norm2(u);
  } while (s == 0.0);
  for (double& v : u) v /= s;
  return u;
}

}  // namespace

nlohmann::json to_json(const TheoryConstants& c) {
  return {{"L", c.L},   {"beta", c.beta}, {"eps", c.eps}, {"delta", c.delta}, {"zeta", c.zeta},
          {"L0", c.L0}, {"L1", c.L1},     {"K", c.K},     {"l0", c.l0},       {"l_star", c.l_star}};
}

double lemma1_bound(const TheoryConstants& c) { return c.L * c.L * c.beta * c.eps; }
double lemma2_bound(const TheoryConstants& c) { return c.L * c.delta; }
double theorem1_bound(const TheoryConstants& c) { return lemma1_bound(c) + lemma2_bound(c); }

bool aug_bound_valid(const TheoryConstants& c) {
  return c.delta <= std::sqrt(2.0 * c.eps * c.zeta) / c.L;
}

double iter_complexity(const TheoryConstants& c, Mode mode, bool first_order, double h_units) {
  if (!(c.eps > 0.0)) throw DomainError("iter_complexity needs eps > 0");
  const double gap = c.l0 - c.l_star;
  if (mode == Mode::aug && !aug_bound_valid(c))
    throw ValidityError("augmented bound requires delta <= sqrt(2 eps zeta) / L (delta = " +
                        std::to_string(c.delta) + ", limit " + std::to_string(std::sqrt(2.0 * c.eps * c.zeta) / c.L) +
                        ")");
  if (first_order) {
    if (!(h_units > 0.0)) throw DomainError("iter_complexity needs h > 0");
    const double denom = h_units * c.eps * c.eps + (mode == Mode::aug ? h_units * c.zeta * c.eps : 0.0);
    return gap / denom;
  }
  const double smooth = c.L0 + c.L1 * c.L * c.L * c.beta * c.eps;
  double denom = c.eps * c.eps;
  if (mode == Mode::aug) denom += 2.0 * c.eps * c.zeta - c.L * c.L * c.delta * c.delta;
  return 2.0 * gap * smooth / denom;
}

IterCheck verify_iter_complexity(const data::SyntheticFunction& fn, TheoryConstants c, Mode mode,
                                 std::size_t max_iter, std::vector<double> theta0, double step_scale) {
  if (theta0.size() != fn.dim) throw DimensionError("verify_iter_complexity: theta0 has the wrong length");
  c.L0 = fn.constants.L0;
  c.L1 = fn.constants.L1;
  c.l0 = fn.value(theta0);
  c.l_star = fn.constants.l_star;

  IterCheck r;
  r.constants = c;
  r.bound = iter_complexity(c, mode);
  r.step = step_scale * optimize::l0l1_step_size(c.L0, c.L1, c.L, c.beta, c.eps);

  std::vector<double> theta = std::move(theta0);
  for (;;) {
    auto g = fn.gradient(theta);
    const double gn = norm2(g);
    r.final_grad_norm = gn;
    if (gn <= c.eps) break;
    if (r.measured_T >= max_iter) {
      r.hit_max_iter = true;
      break;
    }
    const double extra = mode == Mode::aug ? c.zeta / gn : 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= r.step * (g[i] + extra * g[i]);
    ++r.measured_T;
  }
  r.pass = !r.hit_max_iter && static_cast<double>(r.measured_T) <= r.bound;
  return r;
}

data::SyntheticFunction concave_quadratic(double gamma, std::vector<double> center) {
  if (!(gamma >= 0.0)) throw ConfigError("adversary curvature must be nonnegative");
  data::SyntheticFunction g;
  g.name = "concave-quadratic";
  g.dim = center.size();
  g.value = [gamma, center](std::span<const double> t) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += (t[i] - center[i]) * (t[i] - center[i]);
    return -0.5 * gamma * s;
  };
  g.gradient = [gamma, center](std::span<const double> t) {
    std::vector<double> out(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = -gamma * (t[i] - center[i]);
    return out;
  };
  g.hessian_norm = [gamma](std::span<const double>) { return gamma; };
  g.constants.L0 = gamma;
  g.minimizer = center;  // maximizer of g
  return g;
}

FlowResult flow_simulate(const data::SyntheticFunction& l, const data::SyntheticFunction* g,
                         std::vector<double> theta0, double T, double dt) {
  if (!l.minimizer) throw ParameterError("flow_simulate needs an objective with a known minimizer");
  if (theta0.size() != l.dim) throw DimensionError("flow_simulate: theta0 has the wrong length");
  if (g && g->dim != l.dim) throw DimensionError("flow_simulate: adversary dimension differs");
  if (!(T > 0.0)) throw DomainError("flow_simulate needs T > 0");
  if (dt <= 0.0) dt = 1e-3 * T;
  const std::size_t n = theta0.size();

  auto field = [&](const std::vector<double>& th) {
    auto d = l.gradient(th);
    for (double& v : d) v = -v;
    if (g) {
      const auto dg = g->gradient(th);
      for (std::size_t i = 0; i < n; ++i) d[i] += dg[i];
    }
    return d;
  };
  auto axpy = [n](const std::vector<double>& x, double a, const std::vector<double>& k) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + a * k[i];
    return out;
  };

  FlowResult r;
  std::vector<double> th = theta0;
  std::vector<double> integral(n, 0.0);
  double t = 0.0;
  r.times.push_back(t);
  r.trajectory.push_back(th);
  const double tiny = 1e-12 * T;
  while (T - t > tiny) {
    const double h = std::min(dt, T - t);
    const auto k1 = field(th);
    const auto k2 = field(axpy(th, 0.5 * h, k1));
    const auto k3 = field(axpy(th, 0.5 * h, k2));
    const auto k4 = field(axpy(th, h, k3));
    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = th[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    for (double v : next)
      if (!std::isfinite(v)) throw DivergenceError("gradient flow diverged at t = " + std::to_string(t));
    for (std::size_t i = 0; i < n; ++i) integral[i] += 0.5 * h * (th[i] + next[i]);
    th = std::move(next);
    t = (T - t - h <= tiny) ? T : t + h;
    r.times.push_back(t);
    r.trajectory.push_back(th);
  }
  r.average.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.average[i] = integral[i] / T;
  const auto& star = *l.minimizer;
  r.kappa = l.value(r.average) - l.value(star);
  if (g) r.pi = g->value(star) - g->value(r.average);
  r.bound = dist2(theta0, star) / (2.0 * T) - r.pi;
  return r;
}

double NoiseSpec::moment_bound(double alpha) const {
  if (!(alpha > 0.0)) throw ParameterError("moment order must be positive");
  double radial = 0.0;
  if (kind == Kind::pareto) {
    if (!(alpha < tail))
      throw ParameterError("Pareto noise with tail index " + std::to_string(tail) + " has no finite " +
                           std::to_string(alpha) + "-moment");
    radial = std::pow(tail * std::pow(scale, alpha) / (tail - alpha), 1.0 / alpha);
  } else {
    radial = scale * std::pow(1.0 / (alpha + 1.0), 1.0 / alpha);
  }
  return norm2(mean) + radial;
}

Lemma3Result lemma3_montecarlo(const NoiseSpec& noise, double tau, double alpha, std::optional<double> G,
                               std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 10000) throw ParameterError("lemma3_montecarlo needs at least 1e4 samples");
  if (!(alpha > 1.0 && alpha <= 2.0)) throw ParameterError("alpha must lie in (1, 2]");
  if (!(tau > 0.0)) throw ParameterError("tau must be positive");
  if (noise.mean.empty()) throw ParameterError("noise dimension must be positive");
  const double g_min = noise.moment_bound(alpha);
  Lemma3Result r;
  r.G = G.value_or(g_min);
  if (r.G < g_min) throw ParameterError("supplied G is below the noise's alpha-moment bound");

  const std::size_t dim = noise.mean.size();
  Rng rng = make_rng(seed, "noise");
  std::vector<double> sum(dim, 0.0), sum_sq(dim, 0.0);
  double s1 = 0.0, s2 = 0.0;
  std::vector<double> sample(dim);
  for (std::size_t k = 0; k < n_samples; ++k) {
    const auto u = unit_sphere(rng, dim);
    const double v = 1.0 - uniform01(rng);  // (0, 1]
    const double radius = noise.kind == NoiseSpec::Kind::pareto ? noise.scale * std::pow(v, -1.0 / noise.tail)
                                                                : noise.scale * v;
    for (std::size_t j = 0; j < dim; ++j) sample[j] = noise.mean[j] + radius * u[j];
    const double nrm = norm2(sample);
    const double shrink = nrm > tau ? tau / nrm : 1.0;
    double sq = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double c = shrink * sample[j];
      sum[j] += c;
      sum_sq[j] += c * c;
      sq += c * c;
    }
    s1 += sq;
    s2 += sq * sq;
  }
  const double n = static_cast<double>(n_samples);
  r.mean_sq_norm = s1 / n;
  r.mean_sq_se = std::sqrt(std::max(0.0, s2 / n - r.mean_sq_norm * r.mean_sq_norm) / n);

  // ||mean - m||^2 overestimates the squared bias by tr(Cov)/n; subtract it.
  double raw = 0.0, var_of_mean = 0.0, lin = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    const double mj = sum[j] / n;
    const double var_j = std::max(0.0, sum_sq[j] / n - mj * mj) * n / (n - 1.0);
    const double b = mj - noise.mean[j];
    raw += b * b;
    var_of_mean += var_j / n;
    lin += b * b * var_j / n;
  }
  r.bias_sq = raw - var_of_mean;
  // delta method on ||b||^2 plus the fluctuation of the correction itself
  r.bias_sq_se = 2.0 * std::sqrt(lin) + var_of_mean * std::sqrt(2.0 / n) + var_of_mean;

  r.variance_bound = std::pow(r.G, alpha) * std::pow(tau, 2.0 - alpha);
  r.bias_bound = std::pow(r.G, 2.0 * alpha) * std::pow(tau, 2.0 - 2.0 * alpha);
  r.variance_pass = r.mean_sq_norm - 3.0 * r.mean_sq_se <= r.variance_bound;
  r.bias_pass = r.bias_sq - 3.0 * r.bias_sq_se <= r.bias_bound;
  return r;
}

RateResult clipped_sgd_rate(const RateSetup& setup, const optimize::ClipSchedule& schedule,
                            const std::vector<std::size_t>& T_grid, std::size_t seeds, std::uint64_t root_seed) {
  using optimize::ClipMode;
  const bool sc = setup.objective == "strongly-convex-quadratic";
  const bool nc = setup.objective == "smooth-nonconvex-quartic";
  if (!sc && !nc) throw ConfigError("rate objective must be strongly-convex-quadratic or smooth-nonconvex-quartic");
  if (sc && schedule.mode != ClipMode::adaptive_sc)
    throw ConfigError("strongly-convex-quadratic pairs with clip.mode adaptive_sc");
  if (nc && schedule.mode != ClipMode::constant_nc)
    throw ConfigError("smooth-nonconvex-quartic pairs with clip.mode constant_nc");
  if (nc && setup.adversary_gamma != 0.0) throw ConfigError("the adversary term is defined for the quadratic only");
  if (T_grid.size() < 2) throw ConfigError("rate fit needs at least two horizons");
  if (seeds == 0) throw ConfigError("rate fit needs at least one seed");

  data::SyntheticParams sp;
  sp.dim = setup.dim;
  sp.mu = setup.mu;
  const double start = setup.theta0 != 0.0 ? setup.theta0 : (sc ? 1.0 : 2.0);
  sp.radius = std::abs(start);
  const auto l = data::make_synthetic(setup.objective, sp);
  const double gamma = setup.adversary_gamma;
  const std::vector<double> theta0(setup.dim, start);
  const std::vector<double> star(setup.dim, sc ? 0.0 : 1.0);

  // l-frak = l - g = l + (gamma/2)||theta||^2 on the quadratic.
  auto frak_value = [&](const std::vector<double>& t) {
    double s = l.value(t);
    for (double v : t) s += 0.5 * gamma * v * v;
    return s;
  };
  auto frak_grad = [&](const std::vector<double>& t) {
    auto g = l.gradient(t);
    for (std::size_t i = 0; i < t.size(); ++i) g[i] += gamma * t[i];
    return g;
  };

  RateResult out;
  out.schedule = schedule;
  const double r0 = std::sqrt(dist2(theta0, star));
  const double noise_moment = setup.noise_sigma * std::sqrt(static_cast<double>(setup.dim));
  if (sc) {
    // Gradient norm over the ball ||theta - theta*|| <= ||theta0 - theta*||.
    const double lam_max = 2.0 * setup.mu + gamma;
    out.schedule.mu = setup.mu + gamma;
    out.schedule.G = lam_max * r0 + noise_moment;
    out.theory_slope = (2.0 - 2.0 * schedule.alpha) / schedule.alpha;
  } else {
    // |theta^3 - theta| <= r^3 - r per coordinate on the box |theta_i| <= r.
    const double r = std::abs(start);
    out.schedule.G = (r * r * r - r) * std::sqrt(static_cast<double>(setup.dim)) + noise_moment;
    out.schedule.L = l.constants.smooth_L;
    out.schedule.R0 = l.value(theta0) - l.constants.l_star;
    const double a = schedule.alpha;
    out.theory_slope = -(2.0 * a - 2.0) / (3.0 * a - 2.0);
  }

  std::vector<double> log_t, log_gap;
  for (std::size_t T : T_grid) {
    if (T == 0) throw ConfigError("rate horizons must be positive");
    auto sched = out.schedule;
    sched.T = T;
    std::vector<double> gaps(seeds, 0.0), gen_gaps(seeds, 0.0);
    std::vector<char> ok(seeds, 1);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t s = 0; s < seeds; ++s) {
      Rng rng = make_rng(root_seed, "noise", s * 1000003ULL + T);
      std::normal_distribution<double> noise(0.0, setup.noise_sigma);
      std::vector<double> theta = theta0;
      optimize::WeightedAverage avg;
      double sq_grad_sum = 0.0;
      const auto fixed = sc ? optimize::StepPair{} : optimize::schedule_nc(sched);
      for (std::size_t k = 1; k <= T && ok[s]; ++k) {
        const auto step = sc ? optimize::schedule_sc(k, sched) : fixed;
        auto g = frak_grad(theta);
        if (sc) {
          avg.add(theta);
        } else {
          double s2 = 0.0;
          for (double v : g) s2 += v * v;
          sq_grad_sum += s2;
        }
        if (setup.noise_sigma > 0.0)
          for (double& v : g) v += noise(rng);
        double n2 = 0.0;
        for (double v : g) n2 += v * v;
        const double n = std::sqrt(n2);
        const double shrink = n > step.tau ? step.tau / n : 1.0;
        for (std::size_t i = 0; i < theta.size(); ++i) {
          theta[i] -= step.eta * shrink * g[i];
          if (!std::isfinite(theta[i])) ok[s] = 0;
        }
      }
      if (!ok[s]) continue;
      if (sc) {
        gaps[s] = frak_value(avg.value()) - 0.0;
        gen_gaps[s] = l.value(avg.value()) - l.constants.l_star;
      } else {
        gaps[s] = sq_grad_sum / static_cast<double>(T);
        gen_gaps[s] = gaps[s];
      }
    }
    RatePoint p;
    p.T = T;
    double m = 0.0, m2 = 0.0, mg = 0.0;
    for (std::size_t s = 0; s < seeds; ++s) {
      if (!ok[s]) {
        ++p.seeds_diverged;
        continue;
      }
      ++p.seeds_used;
      m += gaps[s];
      m2 += gaps[s] * gaps[s];
      mg += gen_gaps[s];
    }
    if (p.seeds_used == 0) throw DivergenceError("every seed diverged at T = " + std::to_string(T));
    const double used = static_cast<double>(p.seeds_used);
    p.gap = m / used;
    p.generator_gap = mg / used;
    p.gap_se = p.seeds_used > 1 ? std::sqrt(std::max(0.0, m2 / used - p.gap * p.gap) / (used - 1.0)) : 0.0;
    out.points.push_back(p);
    log_t.push_back(std::log(static_cast<double>(T)));
    log_gap.push_back(std::log(p.gap));
  }
  out.slope = fit_slope(log_t, log_gap);
  return out;
}

GenBound gen_bound(const GenBoundInputs& in) {
  const std::size_t h = in.U.rows();
  if (!in.U.same_shape(in.U0)) throw DimensionError("gen_bound: U and U0 differ in shape");
  if (in.V.cols() != h) throw DimensionError("gen_bound: V must have h columns");
  if (in.X.cols() != in.U.cols()) throw DimensionError("gen_bound: X must have d_x columns");
  const std::size_t m = in.X.rows();
  if (m == 0) throw DimensionError("gen_bound: empty data matrix");
  if (!(in.delta_conf > 0.0 && in.delta_conf < 1.0)) throw ParameterError("delta_conf must lie in (0, 1)");
  const double d_y = static_cast<double>(in.V.rows());

  GenBound r;
  r.alpha.assign(h, 0.0);
  r.beta.assign(h, 0.0);
  for (std::size_t j = 0; j < h; ++j) {
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < in.V.rows(); ++i) a += in.V(i, j) * in.V(i, j);
    for (std::size_t c = 0; c < in.U.cols(); ++c) {
      const double d = in.U(j, c) - in.U0(j, c);
      b += d * d;
    }
    r.alpha[j] = std::sqrt(a);
    r.beta[j] = std::sqrt(b);
  }
  auto apply_caps = [h](std::vector<double>& actual, const std::optional<std::vector<double>>& caps, const char* what) {
    if (!caps) return;
    if (caps->size() != h) throw DimensionError(std::string("gen_bound: ") + what + " caps must have length h");
    for (std::size_t j = 0; j < h; ++j) {
      if ((*caps)[j] < actual[j])
        throw ValidityError(std::string("gen_bound: network lies outside the restricted class (") + what + " cap " +
                            std::to_string(j) + ")");
      actual[j] = (*caps)[j];
    }
  };
  apply_caps(r.alpha, in.alpha_caps, "alpha");
  apply_caps(r.beta, in.beta_caps, "beta");

  double x2 = 0.0;
  for (double v : in.X.values()) x2 += v * v;
  const Matrix ux = kernels::matmul_nt(in.X, in.U0);
  double ux2 = 0.0;
  for (double v : ux.values()) ux2 += v * v;
  const double md = static_cast<double>(m);
  const double rms_x = std::sqrt(x2 / md), rms_ux = std::sqrt(ux2 / md);
  r.rademacher = 2.0 * in.K * std::sqrt(d_y) / std::sqrt(md) * norm2(r.alpha) * (norm2(r.beta) * rms_x + rms_ux);

  const double v_f = linalg::frobenius_norm(in.V);
  const double u0_2 = linalg::spectral_norm(in.U0, 1e-14, 100000).value;
  const double du_f = linalg::frobenius_norm(in.U - in.U0);
  r.combined = u0_2 * v_f + du_f * v_f + std::sqrt(static_cast<double>(h));
  r.full = in.empirical_risk + 2.0 * r.rademacher + 3.0 * std::sqrt(std::log(2.0 / in.delta_conf) / (2.0 * md));
  return r;
}

double rel_gen_error(double train_loss, double test_loss, double n_star) {
  if (!(n_star > 0.0)) throw ParameterError("N* must be positive");
  return (test_loss - train_loss) * n_star;
}

double loss_lipschitz(const model::ModelParams& p, const data::Dataset& ds) {
  const Matrix f = model::predict(p, ds.inputs);
  double best = 0.0;
  for (std::size_t i = 0; i < f.rows(); ++i) {
    double s = 0.0;
    auto a = f.row(i), y = ds.targets.row(i);
    for (std::size_t j = 0; j < a.size(); ++j) s += 4.0 * (a[j] - y[j]) * (a[j] - y[j]);
    best = std::max(best, std::sqrt(s));
  }
  return best;
}

nlohmann::json to_json(const Check& c) {
  return {{"name", c.name}, {"inputs", c.inputs}, {"measured", c.measured}, {"bound", c.bound}, {"pass", c.pass}};
}

namespace {

void lemma_checks(std::vector<Check>& out) {
  TheoryConstants c;
  c.L = 2.0;
  c.beta = 3.0;
  c.eps = 0.1;
  out.push_back({"lemma1_bound", to_json(c), lemma1_bound(c), 1.2, std::abs(lemma1_bound(c) - 1.2) <= 1e-12});
  c = {};
  c.eps = 0.005;
  c.delta = 0.1;
  const double t1 = theorem1_bound(c);
  out.push_back({"theorem1_bound", to_json(c), t1, 0.105, std::abs(t1 - 0.105) <= 1e-12});
  out.push_back({"theorem1_additivity", to_json(c), t1, lemma1_bound(c) + lemma2_bound(c),
                 t1 == lemma1_bound(c) + lemma2_bound(c)});
}

void complexity_checks(std::vector<Check>& out) {
  data::SyntheticParams sp;
  sp.a = 1.0;
  const auto q = data::make_synthetic("quadratic", sp);
  TheoryConstants c;
  c.L = 1.0;
  c.eps = 0.1;
  c.zeta = 0.05;
  const auto sup = verify_iter_complexity(q, c, Mode::sup, 100000, {1.0});
  out.push_back({"iter_complexity_sup", to_json(sup.constants), static_cast<double>(sup.measured_T), sup.bound,
                 sup.pass});
  const auto aug = verify_iter_complexity(q, c, Mode::aug, 100000, {1.0});
  out.push_back({"iter_complexity_aug", to_json(aug.constants), static_cast<double>(aug.measured_T), aug.bound,
                 aug.pass});
  out.push_back({"iter_complexity_aug_le_sup", to_json(aug.constants), static_cast<double>(aug.measured_T),
                 static_cast<double>(sup.measured_T), aug.measured_T <= sup.measured_T});
  TheoryConstants bad = c;
  bad.delta = 0.2;  // above sqrt(2 eps zeta) / L = 0.1
  bool rejected = false;
  try {
    iter_complexity(bad, Mode::aug);
  } catch (const ValidityError&) {
    rejected = true;
  }
  out.push_back({"aug_validity_enforced", to_json(bad), bad.delta, std::sqrt(2.0 * bad.eps * bad.zeta) / bad.L,
                 rejected});
}

void flow_checks(std::vector<Check>& out) {
  data::SyntheticParams sp;
  sp.a = 0.5;
  const auto l = data::make_synthetic("quadratic", sp);
  const nlohmann::json in = {{"l", "0.5 (theta - theta*)^2"}, {"theta0", 1.0}, {"T", 2.0}};
  const auto plain = flow_simulate(l, nullptr, {1.0}, 2.0);
  const double off = (1.0 - std::exp(-2.0)) / 2.0;
  const double oracle = 0.5 * off * off;
  out.push_back({"flow_kappa_closed_form", in, plain.kappa, oracle, std::abs(plain.kappa - oracle) <= 1e-6});
  out.push_back({"flow_kappa_le_bound", in, plain.kappa, plain.bound, plain.kappa <= plain.bound});
  const auto g = concave_quadratic(0.5, {0.0});
  const auto adv = flow_simulate(l, &g, {1.0}, 2.0);
  nlohmann::json in_g = in;
  in_g["g"] = "-0.25 (theta - theta*)^2";
  out.push_back({"flow_adversary_reduces_kappa", in_g, adv.kappa, plain.kappa, adv.kappa < plain.kappa});
  out.push_back({"flow_adversary_kappa_le_bound", in_g, adv.kappa, adv.bound, adv.kappa <= adv.bound + 1e-9});
}

void lemma3_checks(std::vector<Check>& out, std::uint64_t seed) {
  NoiseSpec noise;
  for (double tau : {0.5, 2.0, 10.0}) {
    const auto r = lemma3_montecarlo(noise, tau, 1.5, std::nullopt, 100000, seed);
    const nlohmann::json in = {{"noise", "pareto"}, {"tail", noise.tail}, {"alpha", 1.5}, {"tau", tau},
                               {"G", r.G},         {"samples", 100000}};
    out.push_back({"lemma3_second_moment_tau_" + std::to_string(tau).substr(0, 4), in, r.mean_sq_norm,
                   r.variance_bound, r.variance_pass});
    out.push_back({"lemma3_bias_tau_" + std::to_string(tau).substr(0, 4), in, r.bias_sq, r.bias_bound, r.bias_pass});
  }
}

}  // namespace

std::vector<Check> run_suite(const std::string& suite, std::uint64_t seed) {
  std::vector<Check> out;
  const bool all = suite == "all";
  if (!all && suite != "lemmas" && suite != "complexity" && suite != "flow" && suite != "lemma3")
    throw ConfigError("unknown suite '" + suite + "' (lemmas, complexity, flow, lemma3, all)");
  if (all || suite == "lemmas") lemma_checks(out);
  if (all || suite == "complexity") complexity_checks(out);
  if (all || suite == "flow") flow_checks(out);
  if (all || suite == "lemma3") lemma3_checks(out, seed);
  return out;
}

}  // namespace advreg::theory
