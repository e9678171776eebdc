#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "advreg/data.hpp"
#include "advreg/matrix.hpp"
#include "advreg/model.hpp"
#include "advreg/optimize.hpp"
#include "advreg/synthetic.hpp"

namespace advreg::theory {

struct TheoryConstants {
  double L = 1.0;      // Lipschitz constant of f in theta
  double beta = 1.0;   // smoothness of the loss
  double eps = 0.1;    // radius of the parameter ball around the optimum
  double delta = 0.0;  // critic suboptimality
  double zeta = 0.0;   // floor on the useful adversarial gradient
  double L0 = 0.0;     // (L0, L1)-smoothness
  double L1 = 0.0;
  double K = 0.0;      // local Lipschitz constant of the loss in f
  double l0 = 1.0;     // initial loss
  double l_star = 0.0; // optimal loss
};

nlohmann::json to_json(const TheoryConstants& c);

enum class Mode { sup, aug };

// L^2 beta eps: gradient norm of the supervised objective within eps of the optimum.
double lemma1_bound(const TheoryConstants& c);
// L delta: gradient norm contributed by a delta-suboptimal critic.
double lemma2_bound(const TheoryConstants& c);
// lemma1_bound + lemma2_bound.
double theorem1_bound(const TheoryConstants& c);

// delta <= sqrt(2 eps zeta) / L, the hypothesis of the augmented iteration bound.
bool aug_bound_valid(const TheoryConstants& c);

// Iterations to an eps-stationary point.
//   sup:              2 (l0 - l*) (L0 + L1 L^2 beta eps) / eps^2
//   aug:              2 (l0 - l*) (L0 + L1 L^2 beta eps) / (eps^2 + 2 eps zeta - L^2 delta^2)
//   sup, first order: (l0 - l*) / (h eps^2)
//   aug, first order: (l0 - l*) / (h eps^2 + h zeta eps)
// aug throws ValidityError when aug_bound_valid fails.
double iter_complexity(const TheoryConstants& c, Mode mode, bool first_order = false, double h_units = 1.0);

struct IterCheck {
  std::size_t measured_T = 0;
  double bound = 0.0;
  bool pass = false;
  bool hit_max_iter = false;
  double step = 0.0;             // h = 1 / (L0 + L1 L^2 beta eps), times step_scale
  double final_grad_norm = 0.0;
  TheoryConstants constants;     // with L0, L1, l0, l* filled from the objective
};

// Fixed-step gradient descent from theta0 until ||grad l|| <= eps. In aug mode
// a synthetic adversary adds a gradient of magnitude zeta along grad l / ||grad l||
// (the descent direction). Passes iff measured_T <= iter_complexity(...).
IterCheck verify_iter_complexity(const data::SyntheticFunction& fn, TheoryConstants c, Mode mode,
                                 std::size_t max_iter, std::vector<double> theta0, double step_scale = 1.0);

// g(theta) = -(gamma / 2) ||theta - center||^2, concave with maximizer `center`.
data::SyntheticFunction concave_quadratic(double gamma, std::vector<double> center);

struct FlowResult {
  std::vector<double> times;
  std::vector<std::vector<double>> trajectory;
  std::vector<double> average;  // (1/T) int theta(t) dt, trapezoid rule on the grid
  double kappa = 0.0;           // l(avg) - l(theta*)
  double pi = 0.0;              // g(theta*) - g(avg), 0 without an adversary
  double bound = 0.0;           // ||theta0 - theta*||^2 / (2T) - pi
};

// RK4 on d theta/dt = -grad l (+ grad g). theta* is l's minimizer, which must be
// known. dt <= 0 selects 1e-3 T; a final partial step lands exactly on T.
FlowResult flow_simulate(const data::SyntheticFunction& l, const data::SyntheticFunction* g,
                         std::vector<double> theta0, double T, double dt = 0.0);

// Stochastic gradient m + R u with u uniform on the unit sphere of R^dim and
//   pareto:  R ~ Pareto(x_m = scale, tail index a = tail), E R^p = a scale^p / (a - p) for p < a
//   bounded: R ~ Uniform[0, scale], so ||sample|| <= ||m|| + scale
struct NoiseSpec {
  enum class Kind { pareto, bounded } kind = Kind::pareto;
  std::vector<double> mean{1.0, 0.0, 0.0};
  double scale = 1.0;
  double tail = 1.8;

  // (E ||sample||^alpha)^{1/alpha} <= ||m|| + (E R^alpha)^{1/alpha} (Minkowski).
  // Throws ParameterError when the alpha-moment is infinite.
  double moment_bound(double alpha) const;
};

struct Lemma3Result {
  double G = 0.0;
  double mean_sq_norm = 0.0;  // E ||clip(g)||^2
  double mean_sq_se = 0.0;
  double bias_sq = 0.0;       // ||E clip(g) - m||^2, debiased by the sampling variance
  double bias_sq_se = 0.0;
  double variance_bound = 0.0;  // G^alpha tau^{2-alpha}
  double bias_bound = 0.0;      // G^{2 alpha} tau^{2-2 alpha}
  bool variance_pass = false;   // estimate - 3 se <= bound
  bool bias_pass = false;
};

// G defaults to noise.moment_bound(alpha); a supplied G below that is rejected.
Lemma3Result lemma3_montecarlo(const NoiseSpec& noise, double tau, double alpha, std::optional<double> G,
                               std::size_t n_samples, std::uint64_t seed);

struct RateSetup {
  std::string objective = "strongly-convex-quadratic";  // or "smooth-nonconvex-quartic"
  std::size_t dim = 5;
  double mu = 1.0;               // smallest curvature of the quadratic
  double adversary_gamma = 0.0;  // g = -(gamma/2)||theta - theta*||^2; quadratic only
  double noise_sigma = 1.0;      // isotropic Gaussian gradient noise
  double theta0 = 0.0;           // start value per coordinate; 0 selects 1 (quadratic) or 2 (quartic)
};

struct RatePoint {
  std::size_t T = 0;
  double gap = 0.0;            // mean over seeds: l-frak gap (sc) or mean squared gradient norm (nc)
  double gap_se = 0.0;
  double generator_gap = 0.0;  // mean over seeds of l(theta_bar) - l* (sc); equals gap for nc
  std::size_t seeds_used = 0;
  std::size_t seeds_diverged = 0;
};

struct RateResult {
  std::vector<RatePoint> points;
  double slope = 0.0;         // least-squares slope of log(gap) against log(T)
  double theory_slope = 0.0;  // (2-2a)/a for sc, -(2a-2)/(3a-2) for nc
  optimize::ClipSchedule schedule;  // with G, mu, L, R0 resolved from the objective
};

// Zero-momentum clipped SGD. adaptive_sc pairs with the strongly convex
// quadratic (k-weighted average iterate), constant_nc with the quartic.
// Only schedule.mode and schedule.alpha are read; the remaining constants
// come from the objective. Seeds run in parallel.
RateResult clipped_sgd_rate(const RateSetup& setup, const optimize::ClipSchedule& schedule,
                            const std::vector<std::size_t>& T_grid, std::size_t seeds, std::uint64_t root_seed);

struct GenBoundInputs {
  Matrix U, U0, V;  // U, U0: h x d_x ; V: d_y x h
  Matrix X;         // m x d_x
  double K = 2.0;
  double delta_conf = 0.05;
  std::optional<std::vector<double>> alpha_caps;  // ||v_j|| <= alpha_j; defaults to the actual norms
  std::optional<std::vector<double>> beta_caps;   // ||u_j - u0_j|| <= beta_j; defaults likewise
  double empirical_risk = 0.0;
};

struct GenBound {
  double rademacher = 0.0;  // (2K sqrt(d_y)/sqrt(m)) ||alpha|| (||beta|| rms||x|| + rms||U0 x||)
  double combined = 0.0;    // ||U0||_2 ||V||_F + ||U - U0||_F ||V||_F + sqrt(h)
  double full = 0.0;        // empirical + 2 rademacher + 3 sqrt(ln(2/delta_conf) / 2m)
  std::vector<double> alpha, beta;
};

GenBound gen_bound(const GenBoundInputs& in);

// (test - train) * n_star
double rel_gen_error(double train_loss, double test_loss, double n_star = 1.0);

// max_i ||2 (f(x_i) - y_i)||: gradient of the squared error in f over a dataset.
double loss_lipschitz(const model::ModelParams& p, const data::Dataset& ds);

struct Check {
  std::string name;
  nlohmann::json inputs;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
};

nlohmann::json to_json(const Check& c);

// Suites: "lemmas", "complexity", "flow", "lemma3", "all".
std::vector<Check> run_suite(const std::string& suite, std::uint64_t seed);

}  // namespace advreg::theory
