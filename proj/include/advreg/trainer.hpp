#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "advreg/critic.hpp"
#include "advreg/data.hpp"
#include "advreg/errors.hpp"
#include "advreg/model.hpp"
#include "advreg/optimize.hpp"

namespace advreg::trainer {

enum class Mode { sup, aug };

Mode parse_mode(const std::string& name);
std::string to_string(Mode m);

struct TrainConfig {
  std::string dataset = "mnist";
  std::filesystem::path data_dir;
  std::size_t subsample = 0;       // first m' training samples; 0 keeps all
  std::size_t test_subsample = 0;  // first test samples; 0 keeps all
  bool random_labels = false;

  std::size_t h = 32;
  std::size_t depth = 2;
  model::Activation activation = model::Activation::relu;
  Mode mode = Mode::sup;

  double lr = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 1000;
  double mse_threshold = 0.001;
  std::uint64_t seed = 0;

  // augmented mode
  double lambda_gp = 10.0;
  std::size_t n_critic = 1;
  std::size_t critic_hidden = 64;  // 0 gives a linear critic
  CriticInit critic_init = CriticInit::uniform;
  std::optional<double> critic_lr;        // defaults to lr
  std::optional<double> critic_momentum;  // defaults to momentum
  double aug_weight = 1.0;

  optimize::ClipSchedule clip;

  std::size_t lipschitz_samples = 256;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

struct EpochRow {
  std::size_t epoch = 0;  // 1-based
  double train_mse = 0.0;
  double test_mse = 0.0;
  std::vector<double> grad_sn;  // spectral norm of the epoch-mean applied gradient, per layer
  double critic_gap = 0.0;      // mean over the epoch's critic steps
  double gp_penalty = 0.0;
  double wall_ms = 0.0;
};

struct RunLog {
  std::vector<EpochRow> rows;
  std::optional<std::size_t> converged_epoch;
  double initial_train_mse = 0.0;
  model::ModelParams initial_params;
  model::ModelParams final_params;
  std::optional<CriticParams> critic;
  std::optional<double> lipschitz;  // max over consecutive epoch snapshots
  std::size_t generator_steps = 0;
  std::size_t critic_steps = 0;
  // Batches where <sup, adv> >= 0 but ||sup + w adv|| < ||sup||; always 0.
  std::size_t lower_bound_violations = 0;
  std::size_t correlated_batches = 0;
};

struct TrainingDivergedError : DivergenceError {
  TrainingDivergedError(const std::string& w, RunLog partial)
      : DivergenceError(w), log(std::move(partial)) {}
  RunLog log;
};

// The training and test sets a run actually sees: subsample heads, then label randomization.
data::Split prepare_split(const TrainConfig& cfg, const data::Split& split);

// Loads cfg.dataset from cfg.data_dir and trains.
RunLog train(const TrainConfig& cfg);
// Trains on an already loaded split (subsample / random_labels still apply).
RunLog train(const TrainConfig& cfg, const data::Split& split);

// First 1-based epoch with train_mse <= threshold.
std::optional<std::size_t> epochs_to_convergence(const std::vector<double>& train_mse, double threshold);
std::optional<std::size_t> epochs_to_convergence(const RunLog& log, double threshold);

// max over snapshot pairs and rows x of ||f(a;x) - f(b;x)|| / ||a - b||, with
// parameters flattened jointly. Identical pairs are skipped; throws
// EstimationError when no usable pair remains.
double estimate_lipschitz(const std::vector<model::ModelParams>& snapshots, const Matrix& inputs);
// Same restricted to the pair (a, b); nullopt when a == b.
std::optional<double> lipschitz_ratio(const model::ModelParams& a, const model::ModelParams& b,
                                      const Matrix& inputs);

// Per-layer median of grad_sn over the last ceil(fraction * epochs) epochs.
std::vector<double> tail_median_grad_sn(const RunLog& log, double fraction = 0.1);

// Per-run artifacts.
void write_metrics_csv(const std::filesystem::path& path, const RunLog& log);
nlohmann::json final_norms(const model::ModelParams& p);
nlohmann::json run_summary(const RunLog& log);

struct SweepRow {
  std::size_t h = 0;
  Mode mode = Mode::sup;
  std::uint64_t seed = 0;
  std::optional<double> final_train_mse;
  std::optional<std::size_t> converged_epoch;
  std::size_t epochs_run = 0;
  std::vector<double> tail_grad_sn;  // per layer, see tail_median_grad_sn
  std::string status = "ok";  // or the error kind of a failed run
};

// Runs every config in order; a failing run is recorded and the sweep goes on.
// When `out_dir` is non-empty each run's metrics.csv lands in out_dir/run_<i>.
std::vector<SweepRow> sweep(const std::vector<TrainConfig>& configs, const std::filesystem::path& out_dir = {});
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

}  // namespace advreg::trainer
