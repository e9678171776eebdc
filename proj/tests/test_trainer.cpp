#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "advreg/config.hpp"
#include "advreg/data.hpp"
#include "advreg/errors.hpp"
#include "advreg/model.hpp"
#include "advreg/rng.hpp"
#include "advreg/trainer.hpp"

using namespace advreg;
using trainer::Mode;
using trainer::TrainConfig;

namespace {

// Four well-separated Gaussian classes in 6 dimensions.
data::Split toy_split(std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  auto make = [&](std::size_t count) {
    data::Dataset ds;
    ds.name = "toy";
    ds.inputs = Matrix(count, 6);
    std::vector<int> labels(count);
    for (std::size_t i = 0; i < count; ++i) {
      labels[i] = static_cast<int>(i % 4);
      for (std::size_t j = 0; j < 6; ++j) ds.inputs(i, j) = (j == i % 4 ? 2.0 : 0.0) + noise(rng);
    }
    ds.targets = data::one_hot(labels, 4);
    return ds;
  };
  return {make(m), make(m / 2)};
}

TrainConfig toy_config() {
  TrainConfig c;
  c.dataset = "toy";
  c.h = 16;
  c.max_epochs = 5;
  c.batch_size = 16;
  c.mse_threshold = 1e-9;
  c.critic_hidden = 8;
  c.lipschitz_samples = 32;
  return c;
}

std::string read(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("supervised training on an MNIST subsample lowers the training error") {
  const auto split = data::load_named("mnist", config::default_data_dir());
  TrainConfig c;
  c.subsample = 1000;
  c.test_subsample = 500;
  c.h = 32;
  c.max_epochs = 5;
  const auto log = trainer::train(c, split);
  REQUIRE(log.rows.size() == 5);
  CHECK(log.rows.back().train_mse < log.initial_train_mse);
  for (std::size_t i = 0; i < log.rows.size(); ++i) {
    CHECK(log.rows[i].epoch == i + 1);
    CHECK(log.rows[i].grad_sn.size() == 2);
  }
}

TEST_CASE("zero learning rate freezes the parameters") {
  auto c = toy_config();
  c.lr = 0.0;
  const auto log = trainer::train(c, toy_split(64, 1));
  for (const auto& r : log.rows) CHECK(r.train_mse == log.initial_train_mse);
  CHECK(log.final_params == log.initial_params);
}

TEST_CASE("augmented mode with a silent critic matches supervised training bitwise") {
  auto c = toy_config();
  c.lambda_gp = 0.0;
  c.n_critic = 0;
  c.critic_init = CriticInit::zero;
  const auto split = toy_split(64, 2);
  const auto sup = trainer::train(c, split);
  c.mode = Mode::aug;
  const auto aug = trainer::train(c, split);
  REQUIRE(sup.rows.size() == aug.rows.size());
  for (std::size_t i = 0; i < sup.rows.size(); ++i) {
    CHECK(sup.rows[i].train_mse == aug.rows[i].train_mse);
    CHECK(sup.rows[i].test_mse == aug.rows[i].test_mse);
    CHECK(sup.rows[i].grad_sn == aug.rows[i].grad_sn);
  }
  CHECK(sup.final_params == aug.final_params);
}

TEST_CASE("training is deterministic per seed") {
  auto c = toy_config();
  c.mode = Mode::aug;
  const auto split = toy_split(64, 3);
  const auto a = trainer::train(c, split);
  const auto b = trainer::train(c, split);
  CHECK(a.final_params == b.final_params);
  for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].train_mse == b.rows[i].train_mse);
  c.seed = 1;
  const auto d = trainer::train(c, split);
  CHECK_FALSE(a.final_params == d.final_params);
}

TEST_CASE("augmented gradient never falls below the supervised one when the two agree") {
  auto c = toy_config();
  c.mode = Mode::aug;
  c.max_epochs = 3;
  const auto log = trainer::train(c, toy_split(128, 4));
  CHECK(log.lower_bound_violations == 0);
  CHECK(log.generator_steps == 3 * 8);
  CHECK(log.critic_steps == log.generator_steps);
}

TEST_CASE("convergence epoch is the first epoch at or below the threshold") {
  CHECK(trainer::epochs_to_convergence({0.05, 0.02, 0.0009}, 0.001) == 3);
  CHECK_FALSE(trainer::epochs_to_convergence({0.05, 0.02}, 0.001).has_value());
  CHECK(trainer::epochs_to_convergence({0.05, 0.02}, 0.1) == 1);
  CHECK_THROWS_AS(trainer::epochs_to_convergence(trainer::RunLog{}, 0.1), InvalidInputError);

  auto c = toy_config();
  c.max_epochs = 50;
  c.mse_threshold = 0.05;
  const auto log = trainer::train(c, toy_split(128, 5));
  REQUIRE(log.converged_epoch.has_value());
  CHECK(*log.converged_epoch == log.rows.size());
  CHECK(log.rows.back().train_mse <= 0.05);
  for (std::size_t i = 0; i + 1 < log.rows.size(); ++i) CHECK(log.rows[i].train_mse > 0.05);
}

TEST_CASE("Lipschitz estimate equals the feature norm when only the top layer moves") {
  const auto p = model::init_params(5, 7, 3, 2, model::Activation::relu, 11);
  Rng rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix x(9, 5);
  for (double& v : x.values()) v = n(rng);

  // Features phi(x) = [U x]_+; ||(V1 - V2) phi|| / ||V1 - V2||_F <= ||phi||, with
  // equality for a rank-one step along the largest feature vector.
  const auto fwd = model::forward(p, x);
  const Matrix& phi = fwd.activations[1];
  std::size_t best = 0;
  double best_norm = 0.0;
  for (std::size_t i = 0; i < phi.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < phi.cols(); ++j) s += phi(i, j) * phi(i, j);
    if (std::sqrt(s) > best_norm) best_norm = std::sqrt(s), best = i;
  }
  auto q = p;
  for (std::size_t j = 0; j < phi.cols(); ++j) q.layers[1](0, j) += 0.3 * phi(best, j);
  auto r = p;
  r.layers[1](2, 1) += 0.5;  // a weaker direction, must not raise the maximum

  const double est = trainer::estimate_lipschitz({p, q, r}, x);
  CHECK(est == doctest::Approx(best_norm).epsilon(1e-6));

  CHECK_THROWS_AS(trainer::estimate_lipschitz({p, p}, x), EstimationError);
  CHECK_FALSE(trainer::lipschitz_ratio(p, p, x).has_value());
}

TEST_CASE("Lipschitz ratio doubles with the inputs for a top-layer step") {
  const auto p = model::init_params(4, 6, 2, 2, model::Activation::relu, 13);
  auto q = p;
  q.layers[1](1, 3) -= 0.2;
  q.layers[1](0, 0) += 0.1;
  Matrix x(5, 4);
  Rng rng(14);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double& v : x.values()) v = n(rng);
  Matrix x2 = x;
  x2 *= 2.0;
  const double a = *trainer::lipschitz_ratio(p, q, x);
  const double b = *trainer::lipschitz_ratio(p, q, x2);
  CHECK(b == doctest::Approx(2.0 * a).epsilon(1e-12));
}

TEST_CASE("tail median of gradient norms") {
  trainer::RunLog log;
  for (std::size_t e = 1; e <= 20; ++e) {
    trainer::EpochRow r;
    r.epoch = e;
    r.grad_sn = {static_cast<double>(e), 100.0 - static_cast<double>(e)};
    log.rows.push_back(r);
  }
  // Last 2 epochs: 19, 20 and 81, 80.
  const auto m = trainer::tail_median_grad_sn(log, 0.1);
  CHECK(m[0] == 19.5);
  CHECK(m[1] == 80.5);
  CHECK(trainer::tail_median_grad_sn(log, 0.15)[0] == 19.0);
}

TEST_CASE("sweep records every run and repeats exactly") {
  std::vector<TrainConfig> configs;
  for (std::size_t h : {8, 32})
    for (Mode m : {Mode::sup, Mode::aug}) {
      auto c = toy_config();
      c.h = h;
      c.mode = m;
      c.max_epochs = 2;
      configs.push_back(c);
    }
  // sweep loads datasets by name: an unknown name exercises the failure path.
  auto bad = configs;
  for (auto& c : bad) c.dataset = "no-such-dataset";
  const auto failed = trainer::sweep(bad);
  REQUIRE(failed.size() == 4);
  for (const auto& r : failed) CHECK(r.status == "config");

  for (auto& c : configs) {
    c.dataset = "mnist";
    c.data_dir = config::default_data_dir();
    c.subsample = 200;
    c.test_subsample = 100;
  }
  const auto dir = std::filesystem::temp_directory_path() / "advreg_sweep_test";
  std::filesystem::remove_all(dir);
  const auto a = trainer::sweep(configs, dir / "a");
  const auto b = trainer::sweep(configs, dir / "b");
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a[i].status == "ok");
    CHECK(a[i].h == configs[i].h);
    CHECK(a[i].mode == configs[i].mode);
    CHECK(a[i].epochs_run == 2);
    CHECK(a[i].final_train_mse == b[i].final_train_mse);
    CHECK(a[i].tail_grad_sn == b[i].tail_grad_sn);
  }
  trainer::write_sweep_csv(dir / "a.csv", a);
  trainer::write_sweep_csv(dir / "b.csv", b);
  CHECK(read(dir / "a.csv") == read(dir / "b.csv"));
  CHECK(std::filesystem::exists(dir / "a" / "run_3" / "metrics.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("configuration validation names the field") {
  auto c = toy_config();
  c.mse_threshold = 0.0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("mse_threshold"), ConfigError);
  c = toy_config();
  c.clip.mode = optimize::ClipMode::adaptive_sc;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("momentum"), ConfigError);
  c = toy_config();
  c.max_epochs = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
