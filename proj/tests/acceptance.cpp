// Acceptance harness: one PASS/FAIL line per criterion. ADVREG_ACCEPT=1,4,5
// restricts the run to the listed criteria.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "advreg/config.hpp"
#include "advreg/critic.hpp"
#include "advreg/data.hpp"
#include "advreg/kernels.hpp"
#include "advreg/model.hpp"
#include "advreg/nta.hpp"
#include "advreg/theory.hpp"
#include "advreg/trainer.hpp"
#include "fd_oracle.hpp"

namespace fs = std::filesystem;
using namespace advreg;
using nlohmann::json;
using testing::fd_gradient;
using testing::gaussian_matrix;
using testing::min_abs;
using testing::relative_error;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 6) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double mean_of(const Matrix& m) {
  double s = 0.0;
  for (double v : m.values()) s += v;
  return s / static_cast<double>(m.size());
}

// ---------------------------------------------------------------- 1

Outcome gradient_checks() {
  const auto t0 = std::chrono::steady_clock::now();
  const double tol = 1e-4;
  double worst_sup = 0, worst_adv = 0, worst_critic = 0, worst_input = 0;
  int n_sup = 0, n_adv = 0, n_critic = 0, n_input = 0;

  for (std::uint64_t seed = 0; n_sup < 20; ++seed) {
    auto p = model::init_params(3 + seed % 4, 4 + seed % 5, 2 + seed % 3, seed % 4 == 3 ? 4 : 2,
                                seed % 2 ? model::Activation::elu : model::Activation::relu, seed);
    const Matrix x = gaussian_matrix(5, p.input_dim(), 100 + seed);
    const Matrix y = gaussian_matrix(5, p.output_dim(), 200 + seed);
    if (p.activation == model::Activation::relu && min_abs(model::forward(p, x).pre[0]) < 1e-3) continue;
    const auto a = model::supervised_loss_and_grads(p, x, y).grads;
    const auto f = fd_gradient(p.layers, [&] { return model::mse(model::predict(p, x), y); });
    worst_sup = std::max(worst_sup, relative_error(a, f));
    ++n_sup;
  }

  for (std::uint64_t seed = 0; n_adv < 20; ++seed) {
    auto p = model::init_params(4, 6, 3, seed % 3 == 2 ? 3 : 2,
                                seed % 2 ? model::Activation::elu : model::Activation::relu, seed);
    const auto c = init_critic(3, seed % 4 == 0 ? 0 : 16, 10.0, CriticInit::uniform, seed + 50);
    const Matrix x = gaussian_matrix(7, 4, 300 + seed);
    const auto cache = model::forward(p, x);
    double margin = min_abs(cache.pre[0]);
    if (!c.linear()) margin = std::min(margin, min_abs(kernels::matmul_nt(cache.output, c.layers[0])));
    if (margin < 1e-3) continue;
    const auto a = model::adversarial_grads(p, c, x);
    const auto f = fd_gradient(p.layers, [&] { return -mean_of(critic_score(c, model::predict(p, x))); });
    worst_adv = std::max(worst_adv, relative_error(a, f));
    ++n_adv;
  }

  for (std::uint64_t seed = 0; n_critic < 20; ++seed) {
    auto c = init_critic(3, seed % 5 == 0 ? 0 : 10, 10.0, CriticInit::uniform, seed);
    const Matrix real = gaussian_matrix(6, 3, 70 + seed), fake = gaussian_matrix(6, 3, 90 + seed);
    if (!c.linear()) {
      const auto z = gradient_penalty(c, real, fake, seed).interpolates;
      const double margin = std::min({min_abs(kernels::matmul_nt(z, c.layers[0])),
                                      min_abs(kernels::matmul_nt(real, c.layers[0])),
                                      min_abs(kernels::matmul_nt(fake, c.layers[0]))});
      if (margin < 1e-3) continue;
    }
    GradientSet a = critic_mean_score_grad(c, fake);
    a.add_scaled(critic_mean_score_grad(c, real), -1.0);
    a += gradient_penalty(c, real, fake, seed).grads;
    const auto f = fd_gradient(c.layers, [&] {
      return mean_of(critic_score(c, fake)) - mean_of(critic_score(c, real)) +
             gradient_penalty(c, real, fake, seed).penalty;
    });
    worst_critic = std::max(worst_critic, relative_error(a, f));
    ++n_critic;
  }

  // Input gradient used inside the penalty, against differences in z.
  for (std::uint64_t seed = 0; n_input < 20; ++seed) {
    const auto c = init_critic(3, 12, 10.0, CriticInit::uniform, seed);
    const Matrix z = gaussian_matrix(6, 3, 50 + seed);
    if (min_abs(kernels::matmul_nt(z, c.layers[0])) < 1e-3) continue;
    const Matrix a = critic_input_grad(c, z);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      double diff = 0.0, na = 0.0;
      for (std::size_t j = 0; j < z.cols(); ++j) {
        Matrix up = z, down = z;
        up(i, j) += 1e-6;
        down(i, j) -= 1e-6;
        const double fd = (critic_score(c, up)(i, 0) - critic_score(c, down)(i, 0)) / 2e-6;
        diff += (fd - a(i, j)) * (fd - a(i, j));
        na += a(i, j) * a(i, j);
      }
      if (na > 1e-20) worst_input = std::max(worst_input, std::sqrt(diff / na));
    }
    ++n_input;
  }

  const double secs = seconds_since(t0);
  const double worst = std::max({worst_sup, worst_adv, worst_critic, worst_input});
  return {worst < tol && secs < 60.0,
          "max rel err sup=" + fmt(worst_sup, 3) + " adv=" + fmt(worst_adv, 3) + " critic=" + fmt(worst_critic, 3) +
              " gp-input=" + fmt(worst_input, 3) + " over 4x20 configs (< 1e-4), " + fmt(secs, 3) + " s (< 60 s)"};
}

// ---------------------------------------------------------------- 2, 3

struct SweepOutcome {
  std::vector<trainer::SweepRow> rows;
  double seconds = 0.0;
};

const SweepOutcome& mnist_sweep() {
  static std::optional<SweepOutcome> cache;
  if (cache) return *cache;
  trainer::TrainConfig base;
  base.dataset = "mnist";
  base.data_dir = config::default_data_dir();
  base.subsample = 5000;
  base.test_subsample = 1000;
  base.mse_threshold = 0.005;
  base.max_epochs = 300;
  base.aug_weight = 0.1;
  std::vector<trainer::TrainConfig> configs;
  for (std::size_t h : {256, 1024})
    for (std::uint64_t seed : {0, 1, 2})
      for (auto mode : {trainer::Mode::sup, trainer::Mode::aug}) {
        auto c = base;
        c.h = h;
        c.seed = seed;
        c.mode = mode;
        configs.push_back(c);
      }
  const auto t0 = std::chrono::steady_clock::now();
  SweepOutcome out;
  out.rows = trainer::sweep(configs);
  out.seconds = seconds_since(t0);
  for (const auto& r : out.rows)
    std::printf("  run h=%zu seed=%llu mode=%s converged=%s epochs=%zu status=%s\n", r.h,
                static_cast<unsigned long long>(r.seed), trainer::to_string(r.mode).c_str(),
                r.converged_epoch ? std::to_string(*r.converged_epoch).c_str() : "-", r.epochs_run,
                r.status.c_str());
  cache = out;
  return *cache;
}

const trainer::SweepRow* find_row(const std::vector<trainer::SweepRow>& rows, std::size_t h, std::uint64_t seed,
                                  trainer::Mode mode) {
  for (const auto& r : rows)
    if (r.h == h && r.seed == seed && r.mode == mode) return &r;
  return nullptr;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome gradient_ordering() {
  const auto& s = mnist_sweep();
  // Cell (h, layer): median over seeds of the final-10% median spectral norm.
  int good = 0, cells = 0;
  std::string detail;
  for (std::size_t h : {256, 1024})
    for (std::size_t layer = 0; layer < 2; ++layer) {
      std::vector<double> sup, aug;
      for (std::uint64_t seed : {0, 1, 2}) {
        const auto* a = find_row(s.rows, h, seed, trainer::Mode::sup);
        const auto* b = find_row(s.rows, h, seed, trainer::Mode::aug);
        if (!a || !b || a->status != "ok" || b->status != "ok") continue;
        sup.push_back(a->tail_grad_sn[layer]);
        aug.push_back(b->tail_grad_sn[layer]);
      }
      ++cells;
      if (sup.empty()) continue;
      const double ms = median(sup), ma = median(aug);
      good += ma >= ms;
      detail += " h" + std::to_string(h) + "/L" + std::to_string(layer) + ":" + fmt(ma, 3) + (ma >= ms ? ">=" : "<") +
                fmt(ms, 3);
    }
  const bool fast = s.seconds < 1200.0;
  return {good >= 3 && fast, std::to_string(good) + "/" + std::to_string(cells) + " cells aug>=sup (need 3);" +
                                 detail + "; sweep " + fmt(s.seconds, 4) + " s (< 1200 s)"};
}

Outcome iteration_direction() {
  const auto& s = mnist_sweep();
  int cells = 0, good = 0;
  std::string detail;
  for (std::size_t h : {256, 1024})
    for (std::uint64_t seed : {0, 1, 2}) {
      const auto* a = find_row(s.rows, h, seed, trainer::Mode::sup);
      const auto* b = find_row(s.rows, h, seed, trainer::Mode::aug);
      if (!a || !b || !a->converged_epoch || !b->converged_epoch) continue;
      ++cells;
      const bool ok = *b->converged_epoch <= *a->converged_epoch + 1;
      good += ok;
      detail += " h" + std::to_string(h) + "s" + std::to_string(seed) + ":" + std::to_string(*b->converged_epoch) +
                "/" + std::to_string(*a->converged_epoch);
    }
  const bool pass = cells > 0 && good * 5 >= cells * 4;
  return {pass, std::to_string(good) + "/" + std::to_string(cells) +
                    " converged cells with epochs(aug) <= epochs(sup)+1 (need 80%); aug/sup" + detail};
}

// ---------------------------------------------------------------- 4, 5, 8

Outcome suite(const std::string& name, double limit_s) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto checks = theory::run_suite(name, 0);
  const double secs = seconds_since(t0);
  int failed = 0;
  std::string detail;
  for (const auto& c : checks) {
    failed += !c.pass;
    detail += " " + c.name + " " + fmt(c.measured, 7) + " vs " + fmt(c.bound, 7) + (c.pass ? " ok;" : " FAILED;");
  }
  return {failed == 0 && !checks.empty() && secs < limit_s,
          std::to_string(checks.size() - failed) + "/" + std::to_string(checks.size()) + " checks," + detail + " " +
              fmt(secs, 3) + " s"};
}

// The flow suite already compares against the closed form; this adds the
// explicit oracle values pinned by the criterion.
Outcome flow_criterion() {
  auto out = suite("flow", 60.0);
  const auto checks = theory::run_suite("flow", 0);
  for (const auto& c : checks) {
    if (c.name == "flow_kappa_closed_form") {
      const bool near = std::abs(c.measured - 0.09346) < 5e-6 && std::abs(c.measured - c.bound) <= 1e-6;
      out.pass = out.pass && near;
    }
    if (c.name == "flow_kappa_le_bound") out.pass = out.pass && c.bound == 0.25;
  }
  return out;
}

// ---------------------------------------------------------------- 6, 7

Outcome rate(const std::string& objective, double lo, double hi) {
  const auto t0 = std::chrono::steady_clock::now();
  theory::RateSetup setup;
  setup.objective = objective;
  optimize::ClipSchedule sched;
  sched.mode = objective == "strongly-convex-quadratic" ? optimize::ClipMode::adaptive_sc : optimize::ClipMode::constant_nc;
  sched.alpha = 2.0;
  const auto r = theory::clipped_sgd_rate(setup, sched, {100, 1000, 10000}, 20, 0);
  const double secs = seconds_since(t0);
  std::string gaps;
  for (const auto& p : r.points) gaps += " T=" + std::to_string(p.T) + ":" + fmt(p.gap, 4);
  return {r.slope >= lo && r.slope <= hi && secs < 600.0,
          "slope " + fmt(r.slope, 5) + " in [" + fmt(lo) + ", " + fmt(hi) + "] (theory " + fmt(r.theory_slope, 3) +
              ");" + gaps + "; " + fmt(secs, 3) + " s"};
}

// ---------------------------------------------------------------- 9

double fro(const Matrix& m) {
  double s = 0.0;
  for (double v : m.values()) s += v * v;
  return std::sqrt(s);
}

// Largest singular value through power iteration on M^T M.
double spectral(const Matrix& m) {
  std::vector<double> v(m.cols(), 1.0), mv(m.rows()), w(m.cols());
  double sigma2 = 0.0;
  for (int it = 0; it < 20000; ++it) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j) * v[j];
      mv[i] = s;
    }
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = 0; j < m.cols(); ++j) w[j] += m(i, j) * mv[i];
    double n = 0.0;
    for (double x : w) n += x * x;
    n = std::sqrt(n);
    const double prev = sigma2;
    sigma2 = n;
    for (std::size_t j = 0; j < w.size(); ++j) v[j] = w[j] / n;
    if (it > 100 && std::abs(sigma2 - prev) <= 1e-16 * sigma2) break;
  }
  return std::sqrt(sigma2);
}

Outcome generalization() {
  const auto split = data::load_named("mnist", config::default_data_dir());
  trainer::TrainConfig base;
  base.subsample = 500;
  base.test_subsample = 1000;
  base.mse_threshold = 0.005;
  base.max_epochs = 1000;
  base.aug_weight = 0.1;
  bool pass = true;
  double worst = 0.0;
  std::string detail;
  for (std::size_t h = 32; h <= 1024; h *= 2) {
    auto c = base;
    c.h = h;
    const auto log = trainer::train(c, split);
    const auto used = trainer::prepare_split(c, split);
    const auto& p = log.final_params;
    theory::GenBoundInputs in;
    in.U = p.layers[0];
    in.U0 = p.initial_first;
    in.V = p.layers[1];
    in.X = used.train.inputs;
    in.K = theory::loss_lipschitz(p, used.train);
    in.empirical_risk = log.rows.back().train_mse;
    const auto gb = theory::gen_bound(in);
    Matrix diff = in.U;
    for (std::size_t i = 0; i < diff.size(); ++i) diff.values()[i] -= in.U0.values()[i];
    const double oracle =
        spectral(in.U0) * fro(in.V) + fro(diff) * fro(in.V) + std::sqrt(static_cast<double>(h));
    const double err = std::abs(gb.combined - oracle);
    worst = std::max(worst, err);
    const bool finite = std::isfinite(gb.rademacher) && std::isfinite(gb.full) && std::isfinite(gb.combined);
    pass = pass && log.converged_epoch.has_value() && finite && err <= 1e-10;

    c.mode = trainer::Mode::aug;
    const auto alog = trainer::train(c, split);
    const auto rel = [&](const trainer::RunLog& l) {
      return theory::rel_gen_error(l.rows.back().train_mse, l.rows.back().test_mse);
    };
    detail += " h" + std::to_string(h) + (log.converged_epoch ? "" : "(not converged)") + ":combined=" +
              fmt(gb.combined, 5) + ",rel sup/aug=" + fmt(rel(log), 3) + "/" + fmt(rel(alog), 3);
  }
  return {pass, "max |combined - oracle| = " + fmt(worst, 3) + " (<= 1e-10);" + detail +
                    " (rel_gen_error comparison is an observation only)"};
}

// ---------------------------------------------------------------- 10

Matrix blobs(std::size_t per, std::size_t dim, double spread, std::uint64_t seed, std::vector<int>* labels) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, spread);
  Matrix x(3 * per, dim);
  for (std::size_t b = 0; b < 3; ++b)
    for (std::size_t i = 0; i < per; ++i) {
      const double ang = 2.0 * std::acos(-1.0) * static_cast<double>(b) / 3.0;
      for (std::size_t j = 0; j < dim; ++j)
        x(b * per + i, j) = (j == 0 ? 10.0 * std::cos(ang) : j == 1 ? 10.0 * std::sin(ang) : 0.0) + n(rng);
      if (labels) labels->push_back(static_cast<int>(b));
    }
  return x;
}

double sq(const Matrix& x, std::size_t a, std::size_t b) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.cols(); ++j) s += (x(a, j) - x(b, j)) * (x(a, j) - x(b, j));
  return s;
}

double brute_force(const Matrix& x, double preference) {
  const std::size_t n = x.rows();
  double best = -std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        total += preference;
        continue;
      }
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < n; ++k)
        if (mask & (1u << k)) nearest = std::min(nearest, sq(x, i, k));
      total -= nearest;
    }
    best = std::max(best, total);
  }
  return best;
}

Outcome nta_pipeline() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string detail;

  // n <= 12: AP is exactly optimal.
  int exact = 0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const Matrix x = blobs(2 + seed % 3, 2, 0.5, 100 + seed, nullptr);
    const auto r = nta::affinity_propagation(x, {}, seed);
    const bool ok = r.converged && r.clusters() == 3 &&
                    std::abs(nta::net_similarity(x, r) - brute_force(x, r.preference)) <= 1e-6;
    exact += ok;
  }
  pass = pass && exact == 8;
  detail += "small sets optimal " + std::to_string(exact) + "/8";

  // n = 300 through t-SNE then AP.
  std::vector<int> truth;
  const Matrix x = blobs(100, 5, 1.0, 21, &truth);
  const auto e = nta::tsne(x, {}, 7);
  std::vector<double> intra, inter;
  for (std::size_t i = 0; i < 300; ++i)
    for (std::size_t j = i + 1; j < 300; ++j) (truth[i] == truth[j] ? intra : inter).push_back(std::sqrt(sq(e.y, i, j)));
  std::sort(intra.begin(), intra.end());
  const double q90 = intra[static_cast<std::size_t>(0.9 * static_cast<double>(intra.size()))];
  const double min_inter = *std::min_element(inter.begin(), inter.end());
  const auto ap = nta::affinity_propagation(e.y);
  bool medoids = ap.clusters() == 3;
  bool pure = true;
  for (std::size_t c = 0; medoids && c < 3; ++c) {
    double own = 0.0, best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < 300; ++k) {
      if (ap.labels[k] != static_cast<int>(c)) continue;
      double sum = 0.0;
      for (std::size_t i = 0; i < 300; ++i)
        if (ap.labels[i] == static_cast<int>(c)) sum += sq(e.y, i, k);
      best = std::min(best, sum);
      if (k == ap.exemplars[c]) own = sum;
      pure = pure && truth[k] == truth[ap.exemplars[c]];
    }
    medoids = medoids && std::abs(own - best) <= 1e-12 * best;
  }
  pass = pass && min_inter > q90 && ap.clusters() == 3 && medoids && pure;
  detail += "; n=300 min inter " + fmt(min_inter, 4) + " > intra q90 " + fmt(q90, 4) + ", " +
            std::to_string(ap.clusters()) + " clusters, medoid exemplars " + (medoids ? "yes" : "no") + ", pure " +
            (pure ? "yes" : "no");

  // Perturbation energy: mean fraction within 3 standard errors over 200 seeds.
  const auto p = model::init_params(20, 64, 10, 2, model::Activation::relu, 2);
  double worst_z = 0.0;
  for (double fraction : {0.01, 0.1, 0.5})
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      const double w2 = std::pow(fro(p.layers[l]), 2);
      double sum = 0.0, sum2 = 0.0;
      for (int s = 0; s < 200; ++s) {
        const auto q = nta::perturb_params(p, fraction, static_cast<std::uint64_t>(s));
        Matrix d = q.layers[l];
        for (std::size_t i = 0; i < d.size(); ++i) d.values()[i] -= p.layers[l].values()[i];
        const double ratio = std::pow(fro(d), 2) / w2;
        sum += ratio;
        sum2 += ratio * ratio;
      }
      const double mean = sum / 200.0;
      const double se = std::sqrt((sum2 / 200.0 - mean * mean) / 199.0);
      worst_z = std::max(worst_z, std::abs(mean - fraction) / se);
    }
  pass = pass && worst_z <= 3.0;
  const double secs = seconds_since(t0);
  pass = pass && secs < 300.0;
  detail += "; perturbation worst |z| " + fmt(worst_z, 3) + " (<= 3); " + fmt(secs, 3) + " s (< 300 s)";
  return {pass, detail};
}

// ---------------------------------------------------------------- 11

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string without_column(const std::string& csv, const std::string& column) {
  std::istringstream in(csv);
  std::string line, out;
  int drop = -1;
  bool header = true;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (header) {
      for (std::size_t i = 0; i < cells.size(); ++i)
        if (cells[i] == column) drop = static_cast<int>(i);
      header = false;
    }
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (static_cast<int>(i) != drop) out += cells[i] + ",";
    out += '\n';
  }
  return out;
}

int shell(const std::string& args) {
  const std::string cmd = std::string(ADVREG_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "advreg_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto r = [&](const std::string& name) { return (root / name).string(); };
  const std::string small = " --subsample 300 --test_subsample 100 --max_epochs 3";

  struct Case {
    std::string name, args;
    std::vector<std::string> files;
  };
  const std::vector<Case> cases = {
      {"train", "train --mode aug --h 32" + small, {"metrics.csv"}},
      {"sweep", "sweep --sweep.h 8,16 --sweep.seeds 0" + small,
       {"sweep.csv", "run_0/metrics.csv", "run_1/metrics.csv", "run_2/metrics.csv", "run_3/metrics.csv"}},
      {"verify-bounds", "verify-bounds --suite all", {"report.json"}},
      {"rate-check", "rate-check --rate.T 50,100,200 --rate.seeds 4", {"rate.csv"}},
      {"flow", "flow", {"flow.csv"}},
      {"genbound", "genbound --checkpoint " + r("train_a") + "/final.ckpt --subsample 300 --test_subsample 100",
       {"report.json"}},
      {"nta", "nta --checkpoint " + r("train_a") + "/final.ckpt --tsne.perplexity 5 --tsne.iterations 300",
       {"topology.csv", "topology_initial.csv"}},
  };
  int same = 0;
  std::string detail;
  for (const auto& c : cases) {
    const auto a = r(c.name + "_a"), b = r(c.name + "_b");
    const int ca = shell(c.args + " --out " + a);
    const int cb = shell(c.name + " --config " + a + "/manifest.json --out " + b);
    bool ok = ca == cb && fs::exists(fs::path(a) / "manifest.json");
    for (const auto& f : c.files) {
      const auto fa = slurp(fs::path(a) / f), fb = slurp(fs::path(b) / f);
      ok = ok && !fa.empty() && without_column(fa, "wall_ms") == without_column(fb, "wall_ms");
    }
    same += ok;
    detail += " " + c.name + (ok ? ":same" : ":DIFFERENT");
  }
  fs::remove_all(root);
  return {same == static_cast<int>(cases.size()),
          std::to_string(same) + "/" + std::to_string(cases.size()) + " commands reproduce from manifest;" + detail};
}

}  // namespace

int main() {
  std::set<int> only;
  if (const char* sel = std::getenv("ADVREG_ACCEPT")) {
    std::stringstream ss(sel);
    std::string item;
    while (std::getline(ss, item, ',')) only.insert(std::stoi(item));
  }
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, gradient_checks},
      {2, gradient_ordering},
      {3, iteration_direction},
      {4, [] { return suite("complexity", 60.0); }},
      {5, flow_criterion},
      {6, [] { return rate("strongly-convex-quadratic", -1.2, -0.8); }},
      {7, [] { return rate("smooth-nonconvex-quartic", -0.65, -0.35); }},
      {8, [] { return suite("lemma3", 60.0); }},
      {9, generalization},
      {10, nta_pipeline},
      {11, determinism},
  };
  int failed = 0;
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2d %s %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
