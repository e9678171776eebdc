#include "advreg/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "advreg/kernels.hpp"
#include "advreg/linalg.hpp"
#include "advreg/rng.hpp"

namespace advreg::trainer {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Full-set MSE in chunks so activations of wide nets stay small.
double evaluate_mse(const model::ModelParams& p, const data::Dataset& ds) {
  constexpr std::size_t kChunk = 1024;
  const std::size_t m = ds.samples();
  double total = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < m; start += kChunk) {
    const std::size_t end = std::min(m, start + kChunk);
    idx.resize(end - start);
    for (std::size_t i = start; i < end; ++i) idx[i - start] = i;
    const Matrix x = gather_rows(ds.inputs, idx);
    const Matrix y = gather_rows(ds.targets, idx);
    total += model::mse(model::predict(p, x), y) * static_cast<double>(end - start);
  }
  return total / static_cast<double>(m);
}

double squared_distance(const model::ModelParams& a, const model::ModelParams& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.layers.size(); ++k) {
    auto x = a.layers[k].values();
    auto y = b.layers[k].values();
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  }
  return s;
}

}  // namespace

Mode parse_mode(const std::string& name) {
  if (name == "sup") return Mode::sup;
  if (name == "aug") return Mode::aug;
  throw ConfigError("unknown mode '" + name + "' (expected sup or aug)");
}

std::string to_string(Mode m) { return m == Mode::sup ? "sup" : "aug"; }

void TrainConfig::validate() const {
  if (!(mse_threshold > 0.0)) throw ConfigError("mse_threshold must be positive");
  if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (h < 1) throw ConfigError("h must be at least 1");
  if (depth < 2) throw ConfigError("depth must be at least 2");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be a finite nonnegative number");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (mode == Mode::aug) {
    if (!(lambda_gp >= 0.0)) throw ConfigError("critic.lambda_gp must be nonnegative");
    if (critic_lr && !(*critic_lr >= 0.0)) throw ConfigError("critic.lr must be nonnegative");
    if (critic_momentum && !(*critic_momentum >= 0.0 && *critic_momentum < 1.0))
      throw ConfigError("critic.momentum must lie in [0, 1)");
    if (!std::isfinite(aug_weight)) throw ConfigError("aug.weight must be finite");
  }
  clip.validate();
  if (clip.mode != optimize::ClipMode::none && momentum > 0.0)
    throw ConfigError("clip.mode " + optimize::to_string(clip.mode) + " requires momentum = 0");
}

std::optional<std::size_t> epochs_to_convergence(const std::vector<double>& train_mse, double threshold) {
  for (std::size_t i = 0; i < train_mse.size(); ++i)
    if (train_mse[i] <= threshold) return i + 1;
  return std::nullopt;
}

std::optional<std::size_t> epochs_to_convergence(const RunLog& log, double threshold) {
  if (log.rows.empty()) throw InvalidInputError("epochs_to_convergence: empty run log");
  std::vector<double> mse;
  for (const auto& r : log.rows) mse.push_back(r.train_mse);
  return epochs_to_convergence(mse, threshold);
}

std::optional<double> lipschitz_ratio(const model::ModelParams& a, const model::ModelParams& b,
                                      const Matrix& inputs) {
  if (a.layers.size() != b.layers.size()) throw DimensionError("lipschitz: architectures differ");
  const double dtheta = std::sqrt(squared_distance(a, b));
  if (dtheta == 0.0) return std::nullopt;
  const Matrix fa = model::predict(a, inputs);
  const Matrix fb = model::predict(b, inputs);
  double best = 0.0;
  for (std::size_t i = 0; i < fa.rows(); ++i) {
    double d2 = 0.0;
    auto ra = fa.row(i), rb = fb.row(i);
    for (std::size_t j = 0; j < ra.size(); ++j) d2 += (ra[j] - rb[j]) * (ra[j] - rb[j]);
    best = std::max(best, std::sqrt(d2));
  }
  return best / dtheta;
}

double estimate_lipschitz(const std::vector<model::ModelParams>& snapshots, const Matrix& inputs) {
  if (snapshots.size() < 2) throw EstimationError("lipschitz estimate needs at least 2 snapshots");
  std::optional<double> best;
  for (std::size_t i = 0; i < snapshots.size(); ++i)
    for (std::size_t j = i + 1; j < snapshots.size(); ++j)
      if (auto r = lipschitz_ratio(snapshots[i], snapshots[j], inputs)) best = std::max(best.value_or(0.0), *r);
  if (!best) throw EstimationError("lipschitz estimate: all snapshots are identical");
  return *best;
}

RunLog train(const TrainConfig& cfg) {
  cfg.validate();
  return train(cfg, data::load_named(cfg.dataset, cfg.data_dir));
}

data::Split prepare_split(const TrainConfig& cfg, const data::Split& split) {
  data::Split out{data::head(split.train, cfg.subsample), data::head(split.test, cfg.test_subsample)};
  if (cfg.random_labels) out.train = data::randomize_labels(out.train, cfg.seed);
  data::validate(out.train);
  return out;
}

RunLog train(const TrainConfig& cfg, const data::Split& split) {
  cfg.validate();
  const data::Split prepared = prepare_split(cfg, split);
  const data::Dataset& train_set = prepared.train;
  const data::Dataset& test_set = prepared.test;

  RunLog log;
  model::ModelParams params = model::init_params(train_set.input_dim(), cfg.h, train_set.output_dim(),
                                                 cfg.depth, cfg.activation, cfg.seed);
  log.initial_params = params;
  log.initial_train_mse = evaluate_mse(params, train_set);
  auto state = optimize::MomentumState::for_params(params.layers, cfg.momentum);

  const bool aug = cfg.mode == Mode::aug;
  std::optional<CriticParams> critic;
  if (aug)
    critic = init_critic(train_set.output_dim(), cfg.critic_hidden, cfg.lambda_gp, cfg.critic_init, cfg.seed);
  const double critic_lr = cfg.critic_lr.value_or(cfg.lr);
  const double critic_momentum = cfg.critic_momentum.value_or(cfg.momentum);

  const std::size_t lip_rows = std::min(cfg.lipschitz_samples, train_set.samples());
  std::vector<std::size_t> lip_idx(lip_rows);
  for (std::size_t i = 0; i < lip_rows; ++i) lip_idx[i] = i;
  const Matrix lip_inputs = gather_rows(train_set.inputs, lip_idx);
  model::ModelParams previous = params;

  data::BatchStream stream(train_set, cfg.batch_size, substream_seed(cfg.seed, "data"));
  const std::size_t batches = stream.batches_per_epoch();

  auto fail = [&](const std::string& why) {
    log.final_params = params;
    log.critic = critic;
    throw TrainingDivergedError(why, log);
  };

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = Clock::now();
    GradientSet grad_sum = GradientSet::zeros_like(params.layers);
    double gap_sum = 0.0, pen_sum = 0.0;
    std::size_t critic_steps_epoch = 0;

    for (std::size_t b = 0; b < batches; ++b) {
      auto [x, y] = stream.next_batch();
      auto sup = model::supervised_loss_and_grads(params, x, y);
      if (!std::isfinite(sup.loss)) fail("supervised loss is not finite at epoch " + std::to_string(epoch));
      GradientSet grads = std::move(sup.grads);

      if (aug) {
        for (std::size_t s = 0; s < cfg.n_critic; ++s) {
          try {
            const auto r = critic_step(*critic, y, sup.cache.output, critic_lr, critic_momentum,
                                       substream_seed(cfg.seed, "gp", log.critic_steps));
            gap_sum += r.gap;
            pen_sum += r.penalty;
          } catch (const CriticDivergenceError& e) {
            fail(e.what());
          }
          ++log.critic_steps;
          ++critic_steps_epoch;
        }
        const GradientSet adv = model::adversarial_grads(params, *critic, sup.cache);
        const double sup_norm = grads.norm();
        const bool correlated = dot(grads, adv) * cfg.aug_weight >= 0.0;
        grads.add_scaled(adv, cfg.aug_weight);
        if (correlated) {
          ++log.correlated_batches;
          if (grads.norm() < sup_norm) ++log.lower_bound_violations;
        }
      }

      double lr = cfg.lr;
      if (cfg.clip.mode == optimize::ClipMode::adaptive_sc) {
        const auto step = optimize::schedule_sc(log.generator_steps + 1, cfg.clip);
        grads = optimize::clip_global(grads, step.tau);
        lr = step.eta;
      } else if (cfg.clip.mode == optimize::ClipMode::constant_nc) {
        const auto step = optimize::schedule_nc(cfg.clip);
        grads = optimize::clip_global(grads, step.tau);
        lr = step.eta;
      }
      grad_sum += grads;
      try {
        optimize::sgd_momentum_step(params.layers, grads, state, lr);
      } catch (const DivergenceError& e) {
        fail(std::string(e.what()) + " at epoch " + std::to_string(epoch));
      }
      ++log.generator_steps;
    }

    EpochRow row;
    row.epoch = epoch;
    row.train_mse = evaluate_mse(params, train_set);
    row.test_mse = evaluate_mse(params, test_set);
    if (!std::isfinite(row.train_mse)) fail("train mse is not finite at epoch " + std::to_string(epoch));
    grad_sum *= 1.0 / static_cast<double>(batches);
    for (const auto& g : grad_sum.layers) row.grad_sn.push_back(linalg::spectral_norm(g).value);
    if (critic_steps_epoch > 0) {
      row.critic_gap = gap_sum / static_cast<double>(critic_steps_epoch);
      row.gp_penalty = pen_sum / static_cast<double>(critic_steps_epoch);
    }
    if (auto r = lipschitz_ratio(previous, params, lip_inputs))
      log.lipschitz = std::max(log.lipschitz.value_or(0.0), *r);
    previous = params;
    row.wall_ms = elapsed_ms(t0);
    log.rows.push_back(std::move(row));

    if (log.rows.back().train_mse <= cfg.mse_threshold) {
      log.converged_epoch = epoch;
      break;
    }
  }
  log.final_params = std::move(params);
  log.critic = std::move(critic);
  return log;
}

void write_metrics_csv(const std::filesystem::path& path, const RunLog& log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  const std::size_t layers = log.rows.empty() ? log.final_params.depth() : log.rows.front().grad_sn.size();
  out << "epoch,train_mse,test_mse";
  for (std::size_t k = 0; k < layers; ++k) out << ",grad_sn_layer" << k;
  out << ",critic_gap,gp_penalty,wall_ms\n";
  for (const auto& r : log.rows) {
    out << r.epoch << ',' << fmt(r.train_mse) << ',' << fmt(r.test_mse);
    for (double v : r.grad_sn) out << ',' << fmt(v);
    out << ',' << fmt(r.critic_gap) << ',' << fmt(r.gp_penalty) << ',' << fmt(r.wall_ms) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

nlohmann::json final_norms(const model::ModelParams& p) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& w : p.layers)
    layers.push_back({{"rows", w.rows()},
                      {"cols", w.cols()},
                      {"frobenius", linalg::frobenius_norm(w)},
                      {"spectral", linalg::spectral_norm(w).value}});
  return {{"layers", layers},
          {"first_layer_distance_from_init", linalg::frobenius_norm(p.layers.front() - p.initial_first)}};
}

nlohmann::json run_summary(const RunLog& log) {
  nlohmann::json j;
  j["epochs_run"] = log.rows.size();
  j["converged_epoch"] = log.converged_epoch ? nlohmann::json(*log.converged_epoch) : nlohmann::json(nullptr);
  j["initial_train_mse"] = log.initial_train_mse;
  j["final_train_mse"] = log.rows.empty() ? nlohmann::json(nullptr) : nlohmann::json(log.rows.back().train_mse);
  j["final_test_mse"] = log.rows.empty() ? nlohmann::json(nullptr) : nlohmann::json(log.rows.back().test_mse);
  j["lipschitz_estimate"] = log.lipschitz ? nlohmann::json(*log.lipschitz) : nlohmann::json(nullptr);
  j["generator_steps"] = log.generator_steps;
  j["critic_steps"] = log.critic_steps;
  j["correlated_batches"] = log.correlated_batches;
  j["lower_bound_violations"] = log.lower_bound_violations;
  j["final_norms"] = final_norms(log.final_params);
  return j;
}

std::vector<double> tail_median_grad_sn(const RunLog& log, double fraction) {
  if (log.rows.empty()) throw InvalidInputError("tail_median_grad_sn: empty run log");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidInputError("tail_median_grad_sn: fraction must lie in (0, 1]");
  const std::size_t n = log.rows.size();
  const auto tail = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))));
  std::vector<double> out;
  for (std::size_t k = 0; k < log.rows.front().grad_sn.size(); ++k) {
    std::vector<double> v;
    for (std::size_t i = n - tail; i < n; ++i) v.push_back(log.rows[i].grad_sn[k]);
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    out.push_back(m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]));
  }
  return out;
}

std::vector<SweepRow> sweep(const std::vector<TrainConfig>& configs, const std::filesystem::path& out_dir) {
  std::map<std::pair<std::string, std::string>, data::Split> cache;
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto& cfg = configs[i];
    SweepRow row;
    row.h = cfg.h;
    row.mode = cfg.mode;
    row.seed = cfg.seed;
    try {
      const auto key = std::make_pair(cfg.dataset, cfg.data_dir.string());
      auto it = cache.find(key);
      if (it == cache.end()) it = cache.emplace(key, data::load_named(cfg.dataset, cfg.data_dir)).first;
      const RunLog log = train(cfg, it->second);
      row.final_train_mse = log.rows.back().train_mse;
      row.converged_epoch = log.converged_epoch;
      row.epochs_run = log.rows.size();
      row.tail_grad_sn = tail_median_grad_sn(log);
      if (!out_dir.empty()) {
        const auto dir = out_dir / ("run_" + std::to_string(i));
        std::filesystem::create_directories(dir);
        write_metrics_csv(dir / "metrics.csv", log);
      }
    } catch (const TrainingDivergedError& e) {
      row.status = e.kind();
      row.epochs_run = e.log.rows.size();
    } catch (const Error& e) {
      row.status = e.kind();
    }
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "h,mode,seed,final_train_mse,converged_epoch,epochs_run,status\n";
  for (const auto& r : rows) {
    out << r.h << ',' << to_string(r.mode) << ',' << r.seed << ','
        << (r.final_train_mse ? fmt(*r.final_train_mse) : "") << ','
        << (r.converged_epoch ? std::to_string(*r.converged_epoch) : "") << ',' << r.epochs_run << ','
        << r.status << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace advreg::trainer
