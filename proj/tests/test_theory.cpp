#include <doctest.h>

#include <cmath>
#include <random>

#include "advreg/errors.hpp"
#include "advreg/theory.hpp"
#include "fd_oracle.hpp"

using namespace advreg;
using namespace advreg::theory;
using advreg::testing::gaussian_matrix;

namespace {

TheoryConstants base() {
  TheoryConstants c;
  c.l0 = 1.0;
  c.l_star = 0.0;
  c.L0 = 2.0;
  c.L1 = 0.0;
  c.eps = 0.1;
  return c;
}

// Fixed-step GD on a (theta - theta*)^2 in one dimension, written out as a scalar recursion.
std::size_t scalar_gd_iterations(double a, double theta0, double eps, double h, double zeta) {
  double th = theta0;
  std::size_t k = 0;
  while (std::abs(2.0 * a * th) > eps) {
    const double g = 2.0 * a * th;
    th -= h * (g + zeta * (g > 0 ? 1.0 : -1.0));
    ++k;
  }
  return k;
}

// E min(||m + R u||, tau)^2 and E[clip(g)]_x for m = (1,0,0), R ~ Pareto(1, a), u uniform on S^2.
// In three dimensions the cosine between u and m is uniform on [-1, 1], and R = v^{-1/a} with v uniform.
std::pair<double, double> clipped_moments_quadrature(double tail, double tau) {
  const int nv = 4000, nc = 400;
  double sq = 0.0, mx = 0.0;
  for (int i = 0; i < nv; ++i) {
    const double v = (i + 0.5) / nv;
    const double r = std::pow(v, -1.0 / tail);
    for (int j = 0; j < nc; ++j) {
      const double c = -1.0 + (j + 0.5) * 2.0 / nc;
      const double n2 = 1.0 + r * r + 2.0 * r * c;
      const double n = std::sqrt(n2);
      const double s = n > tau ? tau / n : 1.0;
      sq += std::min(n2, tau * tau);
      mx += s * (1.0 + r * c);
    }
  }
  const double cells = static_cast<double>(nv) * nc;
  return {sq / cells, mx / cells};
}

}  // namespace

TEST_CASE("gradient-norm bounds") {
  TheoryConstants c;
  c.eps = 0.0;
  CHECK(lemma1_bound(c) == 0.0);
  c.L = 2.0;
  c.beta = 3.0;
  c.eps = 0.1;
  CHECK(lemma1_bound(c) == doctest::Approx(1.2).epsilon(1e-14));
  const double once = lemma1_bound(c);
  c.eps = 0.2;
  CHECK(lemma1_bound(c) == doctest::Approx(2.0 * once).epsilon(1e-14));

  TheoryConstants d;
  d.eps = 0.005;
  d.delta = 0.1;
  CHECK(theorem1_bound(d) == doctest::Approx(0.105).epsilon(1e-14));
  d.delta = 0.0;
  CHECK(theorem1_bound(d) == lemma1_bound(d));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    TheoryConstants r;
    r.L = u(rng);
    r.beta = u(rng);
    r.eps = u(rng);
    r.delta = u(rng);
    CHECK(theorem1_bound(r) == lemma1_bound(r) + lemma2_bound(r));
  }
}

TEST_CASE("iteration complexity formulas") {
  auto c = base();
  CHECK(iter_complexity(c, Mode::sup) == doctest::Approx(400.0).epsilon(1e-14));
  c.zeta = 0.05;
  c.L = 1.0;
  c.delta = 0.05;
  CHECK(iter_complexity(c, Mode::aug) == doctest::Approx(4.0 / 0.0175).epsilon(1e-14));
  CHECK(iter_complexity(c, Mode::sup, true, 100.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(iter_complexity(c, Mode::aug, true, 100.0) == doctest::Approx(1.0 / 1.5).epsilon(1e-14));

  c.delta = 0.11;
  CHECK_FALSE(aug_bound_valid(c));
  CHECK_THROWS_AS(iter_complexity(c, Mode::aug), ValidityError);
  CHECK_NOTHROW(iter_complexity(c, Mode::sup));
}

TEST_CASE("aug complexity never exceeds sup under the validity condition") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.01, 3.0), f(0.0, 1.0);
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    TheoryConstants c;
    c.L = u(rng);
    c.beta = u(rng);
    c.eps = u(rng);
    c.zeta = u(rng);
    c.L0 = u(rng);
    c.L1 = u(rng);
    c.l0 = 1.0 + u(rng);
    c.delta = f(rng) * std::sqrt(2.0 * c.eps * c.zeta) / c.L;
    REQUIRE(aug_bound_valid(c));
    CHECK(iter_complexity(c, Mode::aug) <= iter_complexity(c, Mode::sup));
    CHECK(iter_complexity(c, Mode::aug, true, 7.0) <= iter_complexity(c, Mode::sup, true, 7.0));
    ++checked;
  }
  CHECK(checked == 2000);
}

TEST_CASE("gradient descent iteration counts against a scalar recursion") {
  for (double a : {0.5, 1.0, 3.0}) {
    data::SyntheticParams sp;
    sp.a = a;
    const auto q = data::make_synthetic("quadratic", sp);
    for (double scale : {1.0, 0.3, 0.05}) {
      TheoryConstants c;
      c.eps = 0.1;
      c.zeta = 0.05;
      const auto sup = verify_iter_complexity(q, c, Mode::sup, 1000000, {1.0}, scale);
      const auto aug = verify_iter_complexity(q, c, Mode::aug, 1000000, {1.0}, scale);
      const double h = scale / (2.0 * a);
      CHECK(sup.step == doctest::Approx(h).epsilon(1e-14));
      CHECK(sup.measured_T == scalar_gd_iterations(a, 1.0, 0.1, h, 0.0));
      CHECK(aug.measured_T == scalar_gd_iterations(a, 1.0, 0.1, h, 0.05));
      CHECK(aug.measured_T <= sup.measured_T);
      CHECK(sup.bound == doctest::Approx(2.0 * a * 2.0 * a / 0.01).epsilon(1e-12));
      CHECK(sup.pass);
      CHECK(aug.pass);
    }
  }

  data::SyntheticParams sp;
  const auto q = data::make_synthetic("quadratic", sp);
  TheoryConstants c;
  c.eps = 0.1;
  const auto shipped = verify_iter_complexity(q, c, Mode::sup, 1000, {1.0});
  CHECK(shipped.bound == doctest::Approx(400.0).epsilon(1e-14));
  CHECK(shipped.measured_T <= 400);

  c.eps = 10.0;
  CHECK(verify_iter_complexity(q, c, Mode::sup, 1000, {1.0}).measured_T == 0);

  c.eps = 1e-12;
  const auto capped = verify_iter_complexity(q, c, Mode::sup, 3, {1.0}, 0.01);
  CHECK(capped.hit_max_iter);
  CHECK_FALSE(capped.pass);
  CHECK(capped.measured_T == 3);
}

TEST_CASE("gradient flow matches the closed-form linear ODE") {
  data::SyntheticParams sp;
  sp.a = 0.5;
  const auto l = data::make_synthetic("quadratic", sp);

  const auto r = flow_simulate(l, nullptr, {1.0}, 2.0);
  const double off = (1.0 - std::exp(-2.0)) / 2.0;
  CHECK(std::abs(r.kappa - 0.5 * off * off) <= 1e-6);
  CHECK(r.kappa == doctest::Approx(0.09346).epsilon(1e-4));
  CHECK(r.bound == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(r.kappa <= r.bound);
  CHECK(r.pi == 0.0);
  CHECK(r.times.back() == 2.0);
  for (std::size_t i = 1; i < r.times.size(); ++i) CHECK(r.times[i] > r.times[i - 1]);
  for (std::size_t i = 0; i < r.times.size(); i += 250)
    CHECK(std::abs(r.trajectory[i][0] - std::exp(-r.times[i])) <= 1e-12);

  const auto still = flow_simulate(l, nullptr, {0.0}, 2.0);
  CHECK(still.kappa == 0.0);

  // dtheta/dt = -theta - gamma (theta - c)
  for (double gamma : {0.25, 1.0, 3.0}) {
    for (double centre : {0.0, 0.5, -0.7}) {
      const auto g = concave_quadratic(gamma, {centre});
      const auto a = flow_simulate(l, &g, {1.0}, 2.0);
      const double rate = 1.0 + gamma, inf = gamma * centre / rate;
      const double avg = inf + (1.0 - inf) * (1.0 - std::exp(-2.0 * rate)) / (2.0 * rate);
      CHECK(std::abs(a.average[0] - avg) <= 2e-6);
      CHECK(std::abs(a.kappa - 0.5 * avg * avg) <= 1e-6);
      const double pi = -0.5 * gamma * centre * centre + 0.5 * gamma * (avg - centre) * (avg - centre);
      CHECK(std::abs(a.pi - pi) <= 2e-6);
      CHECK(a.kappa <= a.bound + 1e-6);
      // a shared equilibrium makes pi nonnegative and the adversary can only help
      if (centre == 0.0) {
        CHECK(a.pi >= 0.0);
        CHECK(a.kappa < r.kappa);
      }
    }
  }

  // a partial last step lands on T
  const auto odd = flow_simulate(l, nullptr, {1.0}, 1.0, 0.3);
  CHECK(odd.times.back() == 1.0);
  CHECK(odd.times.size() == 5);

  CHECK_THROWS_AS(flow_simulate(l, nullptr, {1.0, 2.0}, 1.0), DimensionError);
  CHECK_THROWS_AS(flow_simulate(l, nullptr, {1.0}, 0.0), DomainError);
  const auto e = data::make_synthetic("scalar-exponential");
  CHECK_THROWS_AS(flow_simulate(e, nullptr, {1.0}, 1.0), ParameterError);
}

TEST_CASE("clipped moments of Pareto noise against quadrature") {
  NoiseSpec noise;
  for (double tau : {0.5, 2.0, 10.0}) {
    const auto r = lemma3_montecarlo(noise, tau, 1.5, std::nullopt, 100000, 5);
    const auto [sq, mx] = clipped_moments_quadrature(noise.tail, tau);
    CHECK(std::abs(r.mean_sq_norm - sq) <= 4.0 * r.mean_sq_se + 1e-3 * sq);
    const double bias = (mx - 1.0) * (mx - 1.0);
    CHECK(std::abs(r.bias_sq - bias) <= 4.0 * r.bias_sq_se + 1e-3 * bias);
    CHECK(r.variance_pass);
    CHECK(r.bias_pass);
  }
  // tail a = 1.8: alpha moment a / (a - alpha) closed form
  const double g = noise.moment_bound(1.5);
  CHECK(g == doctest::Approx(1.0 + std::pow(1.8 / 0.3, 1.0 / 1.5)).epsilon(1e-14));
  CHECK_THROWS_AS(noise.moment_bound(1.8), ParameterError);
  CHECK_THROWS_AS(lemma3_montecarlo(noise, 1.0, 1.5, g * 0.5, 100000, 0), ParameterError);
  CHECK_THROWS_AS(lemma3_montecarlo(noise, 1.0, 1.5, std::nullopt, 9999, 0), ParameterError);
}

TEST_CASE("clipping limits") {
  NoiseSpec bounded;
  bounded.kind = NoiseSpec::Kind::bounded;
  const double G = 2.0;  // ||m|| + scale
  const auto inactive = lemma3_montecarlo(bounded, G, 2.0, G, 50000, 1);
  CHECK(inactive.bias_sq < 3.0 * inactive.bias_sq_se);
  CHECK(inactive.mean_sq_norm <= G * G);

  NoiseSpec pareto;
  const auto tiny = lemma3_montecarlo(pareto, 1e-3, 1.5, std::nullopt, 20000, 1);
  CHECK(tiny.mean_sq_norm == doctest::Approx(1e-6).epsilon(1e-9));

  const auto a = lemma3_montecarlo(pareto, 2.0, 1.5, std::nullopt, 20000, 9);
  const auto b = lemma3_montecarlo(pareto, 2.0, 1.5, std::nullopt, 20000, 9);
  CHECK(a.mean_sq_norm == b.mean_sq_norm);
  CHECK(a.bias_sq == b.bias_sq);
}

TEST_CASE("clipped SGD rate harness") {
  using optimize::ClipMode;
  optimize::ClipSchedule sc;
  sc.mode = ClipMode::adaptive_sc;
  sc.alpha = 2.0;

  RateSetup quiet;
  quiet.noise_sigma = 0.0;
  const auto clean = clipped_sgd_rate(quiet, sc, {100, 10000}, 2, 0);
  CHECK(clean.points[1].gap * 10.0 <= clean.points[0].gap);
  CHECK(clean.theory_slope == doctest::Approx(-1.0));

  RateSetup plain;
  RateSetup adv = plain;
  adv.adversary_gamma = 0.5;
  const auto p = clipped_sgd_rate(plain, sc, {100, 1000}, 8, 4);
  const auto a = clipped_sgd_rate(adv, sc, {100, 1000}, 8, 4);
  for (std::size_t i = 0; i < p.points.size(); ++i) {
    CHECK(a.points[i].generator_gap <= p.points[i].gap);
    CHECK(p.points[i].seeds_used == 8);
  }
  CHECK(a.schedule.mu == doctest::Approx(1.5));

  const auto again = clipped_sgd_rate(plain, sc, {100, 1000}, 8, 4);
  CHECK(again.points[0].gap == p.points[0].gap);
  CHECK(again.slope == p.slope);

  RateSetup quartic;
  quartic.objective = "smooth-nonconvex-quartic";
  CHECK_THROWS_AS(clipped_sgd_rate(quartic, sc, {100, 1000}, 2, 0), ConfigError);
  optimize::ClipSchedule nc = sc;
  nc.mode = ClipMode::constant_nc;
  CHECK_THROWS_AS(clipped_sgd_rate(plain, nc, {100, 1000}, 2, 0), ConfigError);
  const auto q = clipped_sgd_rate(quartic, nc, {100, 1000}, 4, 0);
  CHECK(q.schedule.L == doctest::Approx(11.0));
  CHECK(q.theory_slope == doctest::Approx(-0.5));
  CHECK(q.points[1].gap < q.points[0].gap);
  CHECK_THROWS_AS(clipped_sgd_rate(plain, sc, {100}, 2, 0), ConfigError);
}

TEST_CASE("generalization bound terms") {
  GenBoundInputs id;
  id.U = Matrix{{1.0, 0.0}, {0.0, 1.0}};
  id.U0 = id.U;
  id.V = id.U;
  id.X = Matrix{{1.0, 2.0}};
  const auto r = gen_bound(id);
  CHECK(r.combined == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GenBoundInputs in;
    const std::size_t h = 3 + seed, dx = 4, dy = 2, m = 7;
    in.U0 = gaussian_matrix(h, dx, seed);
    in.U = in.U0 + gaussian_matrix(h, dx, seed + 100, 0.3);
    in.V = gaussian_matrix(dy, h, seed + 200);
    in.X = gaussian_matrix(m, dx, seed + 300);
    in.K = 1.5;
    in.empirical_risk = 0.2;
    const auto g = gen_bound(in);

    double a2 = 0.0, b2 = 0.0, x2 = 0.0, ux2 = 0.0, vf = 0.0, duf = 0.0;
    for (std::size_t j = 0; j < h; ++j) {
      double a = 0.0, b = 0.0;
      for (std::size_t i = 0; i < dy; ++i) a += in.V(i, j) * in.V(i, j);
      for (std::size_t c = 0; c < dx; ++c) b += std::pow(in.U(j, c) - in.U0(j, c), 2);
      a2 += a;
      b2 += b;
      CHECK(g.alpha[j] == doctest::Approx(std::sqrt(a)).epsilon(1e-14));
    }
    vf = std::sqrt(a2);
    duf = std::sqrt(b2);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t c = 0; c < dx; ++c) x2 += in.X(i, c) * in.X(i, c);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < h; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < dx; ++c) s += in.U0(j, c) * in.X(i, c);
        ux2 += s * s;
      }
    const double rad = 2.0 * 1.5 * std::sqrt(2.0) / std::sqrt(7.0) * std::sqrt(a2) *
                       (std::sqrt(b2) * std::sqrt(x2 / m) + std::sqrt(ux2 / m));
    CHECK(std::abs(g.rademacher - rad) <= 1e-10 * rad);

    // spectral norm of U0 from the largest eigenvalue of U0^T U0 by power iteration on doubles
    std::vector<double> v(dx, 1.0);
    double lam = 0.0;
    for (int it = 0; it < 5000; ++it) {
      std::vector<double> w(h, 0.0), z(dx, 0.0);
      for (std::size_t j = 0; j < h; ++j)
        for (std::size_t c = 0; c < dx; ++c) w[j] += in.U0(j, c) * v[c];
      for (std::size_t j = 0; j < h; ++j)
        for (std::size_t c = 0; c < dx; ++c) z[c] += in.U0(j, c) * w[j];
      double n = 0.0;
      for (double t : z) n += t * t;
      n = std::sqrt(n);
      for (std::size_t c = 0; c < dx; ++c) v[c] = z[c] / n;
      lam = n;
    }
    const double combined = std::sqrt(lam) * vf + duf * vf + std::sqrt(static_cast<double>(h));
    CHECK(std::abs(g.combined - combined) <= 1e-10 * combined);
    CHECK(g.full == doctest::Approx(0.2 + 2.0 * rad + 3.0 * std::sqrt(std::log(40.0) / 14.0)).epsilon(1e-12));

    GenBoundInputs same = in;
    same.U = same.U0;
    const auto s = gen_bound(same);
    CHECK(std::abs(s.combined - (std::sqrt(lam) * vf + std::sqrt(static_cast<double>(h)))) <= 1e-10 * s.combined);

    GenBoundInputs capped = in;
    capped.alpha_caps = std::vector<double>(h, 1e-3);
    CHECK_THROWS_AS(gen_bound(capped), ValidityError);
    capped.alpha_caps = std::vector<double>(h, 100.0);
    CHECK(gen_bound(capped).rademacher > g.rademacher);
  }

  GenBoundInputs bad = id;
  bad.V = Matrix(2, 3);
  CHECK_THROWS_AS(gen_bound(bad), DimensionError);
  bad = id;
  bad.delta_conf = 1.0;
  CHECK_THROWS_AS(gen_bound(bad), ParameterError);
}

TEST_CASE("relative generalization error") {
  CHECK(rel_gen_error(0.3, 0.3) == 0.0);
  CHECK(rel_gen_error(0.1, 0.11, 100.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rel_gen_error(0.1, 0.2, 2.0) == 2.0 * rel_gen_error(0.1, 0.2, 1.0));
  CHECK_THROWS_AS(rel_gen_error(0.1, 0.2, 0.0), ParameterError);
}

TEST_CASE("shipped check suite") {
  const auto all = run_suite("all", 0);
  CHECK(all.size() >= 12);
  for (const auto& c : all) {
    INFO(c.name);
    CHECK(c.pass);
  }
  CHECK(run_suite("flow", 0).size() == 4);
  CHECK_THROWS_AS(run_suite("bogus", 0), ConfigError);
}
