#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "advreg/checkpoint.hpp"
#include "advreg/config.hpp"
#include "advreg/data.hpp"
#include "advreg/errors.hpp"
#include "advreg/nta.hpp"
#include "advreg/synthetic.hpp"
#include "advreg/theory.hpp"
#include "advreg/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace advreg;

namespace {

constexpr int kFailedCheck = 1;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json manifest(const config::Settings& s) {
  return {{"command", s.command()}, {"config", s.to_json()}};
}

fs::path output_dir(const config::Settings& s) {
  if (!s.has("out")) throw ConfigError("key 'out' is required");
  return s.text("out");
}

std::vector<trainer::Mode> parse_modes(const std::string& list) {
  std::vector<trainer::Mode> out;
  std::string item;
  for (char c : list + ",") {
    if (c == ',') {
      if (!item.empty()) out.push_back(trainer::parse_mode(item));
      item.clear();
    } else if (c != ' ') {
      item += c;
    }
  }
  if (out.empty()) throw ConfigError("key 'sweep.modes': no modes given");
  return out;
}

// Every command first builds a prepared job (all config errors surface
// here), then runs it. Nothing is written before preparation succeeds.
using Job = std::function<int()>;

Job prepare_train(const config::Settings& s) {
  const auto out = output_dir(s);
  const auto cfg = config::to_train_config(s);
  return [=] {
    fs::create_directories(out);
    json m = manifest(s);
    trainer::RunLog log;
    int code = 0;
    try {
      log = trainer::train(cfg);
    } catch (const trainer::TrainingDivergedError& e) {
      log = e.log;
      m["error"] = {{"kind", e.kind()}, {"message", e.what()}};
      std::cerr << "error: " << e.kind() << ": " << e.what() << '\n';
      code = kRuntimeError;
    }
    trainer::write_metrics_csv(out / "metrics.csv", log);
    if (code == 0) {
      checkpoint::save(out / "init.ckpt", log.initial_params);
      checkpoint::save(out / "final.ckpt", log.final_params);
      if (log.critic) checkpoint::save(out / "critic.ckpt", *log.critic);
      m["converged_epoch"] = log.converged_epoch ? json(*log.converged_epoch) : json(nullptr);
      m["final_norms"] = trainer::final_norms(log.final_params);
      m["summary"] = trainer::run_summary(log);
    }
    write_json(out / "manifest.json", m);
    return code;
  };
}

Job prepare_sweep(const config::Settings& s) {
  const auto out = output_dir(s);
  const auto base = config::to_train_config(s);
  const auto hs = s.counts("sweep.h");
  const auto modes = parse_modes(s.text("sweep.modes"));
  const auto seeds = s.counts("sweep.seeds");
  std::vector<trainer::TrainConfig> configs;
  for (auto h : hs)
    for (auto seed : seeds)
      for (auto mode : modes) {
        auto c = base;
        c.h = h;
        c.seed = seed;
        c.mode = mode;
        c.validate();
        configs.push_back(c);
      }
  return [=] {
    fs::create_directories(out);
    const auto rows = trainer::sweep(configs, out);
    trainer::write_sweep_csv(out / "sweep.csv", rows);

    // Seed-paired sup/aug comparisons.
    json cells = json::array();
    std::size_t epoch_cells = 0, epoch_ok = 0, grad_cells = 0, grad_ok = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].mode != trainer::Mode::sup) continue;
      for (std::size_t j = 0; j < rows.size(); ++j) {
        if (rows[j].mode != trainer::Mode::aug || rows[j].h != rows[i].h || rows[j].seed != rows[i].seed) continue;
        const auto &sup = rows[i], &aug = rows[j];
        json cell = {{"h", sup.h}, {"seed", sup.seed}, {"run_sup", i}, {"run_aug", j}};
        if (sup.converged_epoch && aug.converged_epoch) {
          const bool ok = *aug.converged_epoch <= *sup.converged_epoch + 1;
          cell["epochs_sup"] = *sup.converged_epoch;
          cell["epochs_aug"] = *aug.converged_epoch;
          cell["aug_within_one_epoch"] = ok;
          ++epoch_cells;
          epoch_ok += ok;
        }
        if (sup.status == "ok" && aug.status == "ok") {
          json layers = json::array();
          for (std::size_t k = 0; k < sup.tail_grad_sn.size() && k < aug.tail_grad_sn.size(); ++k) {
            const bool ok = aug.tail_grad_sn[k] >= sup.tail_grad_sn[k];
            layers.push_back({{"layer", k}, {"sup", sup.tail_grad_sn[k]}, {"aug", aug.tail_grad_sn[k]}, {"aug_ge_sup", ok}});
            ++grad_cells;
            grad_ok += ok;
          }
          cell["tail_grad_sn"] = layers;
        }
        cells.push_back(cell);
      }
    }
    json m = manifest(s);
    json report = {{"cells", cells},
                   {"epoch_cells", epoch_cells},
                   {"epoch_cells_aug_within_one", epoch_ok},
                   {"grad_cells", grad_cells},
                   {"grad_cells_aug_ge_sup", grad_ok}};
    json runs = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i)
      runs.push_back({{"run", i},
                      {"h", rows[i].h},
                      {"mode", trainer::to_string(rows[i].mode)},
                      {"seed", rows[i].seed},
                      {"converged_epoch", rows[i].converged_epoch ? json(*rows[i].converged_epoch) : json(nullptr)},
                      {"epochs_run", rows[i].epochs_run},
                      {"status", rows[i].status}});
    report["runs"] = runs;
    write_json(out / "report.json", report);
    m["report"] = "report.json";
    write_json(out / "manifest.json", m);
    return 0;
  };
}

Job prepare_verify(const config::Settings& s) {
  const auto out = output_dir(s);
  const auto suite = s.text("suite");
  const std::uint64_t seed = s.count("seed");
  if (suite != "all" && suite != "lemmas" && suite != "complexity" && suite != "flow" && suite != "lemma3")
    throw ConfigError("key 'suite': unknown suite '" + suite + "'");
  return [=] {
    const auto checks = theory::run_suite(suite, seed);
    fs::create_directories(out);
    json list = json::array();
    std::size_t failed = 0;
    for (const auto& c : checks) {
      list.push_back(theory::to_json(c));
      failed += !c.pass;
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " measured=" << fmt(c.measured)
                << " bound=" << fmt(c.bound) << '\n';
    }
    write_json(out / "report.json", {{"suite", suite}, {"checks", list}, {"failed", failed}});
    json m = manifest(s);
    m["failed"] = failed;
    write_json(out / "manifest.json", m);
    return failed ? kFailedCheck : 0;
  };
}

Job prepare_rate(const config::Settings& s) {
  const auto out = output_dir(s);
  theory::RateSetup setup;
  setup.objective = s.text("rate.objective");
  setup.dim = s.count("rate.dim");
  setup.mu = s.real("rate.mu");
  setup.adversary_gamma = s.real("rate.gamma");
  setup.noise_sigma = s.real("rate.sigma");
  setup.theta0 = s.real("rate.theta0");
  optimize::ClipSchedule sched;
  if (s.has("clip.mode")) {
    sched.mode = optimize::parse_clip_mode(s.text("clip.mode"));
  } else if (setup.objective == "strongly-convex-quadratic") {
    sched.mode = optimize::ClipMode::adaptive_sc;
  } else if (setup.objective == "smooth-nonconvex-quartic") {
    sched.mode = optimize::ClipMode::constant_nc;
  } else {
    throw ConfigError("key 'rate.objective': unknown objective '" + setup.objective + "'");
  }
  sched.alpha = s.real("clip.alpha");
  const auto grid = s.counts("rate.T");
  const auto seeds = s.count("rate.seeds");
  const auto tol = s.real("rate.tolerance");
  const std::uint64_t root = s.count("seed");
  return [=] {
    const auto r = theory::clipped_sgd_rate(setup, sched, grid, seeds, root);
    fs::create_directories(out);
    std::ofstream csv(out / "rate.csv");
    if (!csv) throw IoError("cannot write " + (out / "rate.csv").string());
    csv << "T,gap,gap_se,generator_gap,seeds_used,seeds_diverged\n";
    for (const auto& p : r.points)
      csv << p.T << ',' << fmt(p.gap) << ',' << fmt(p.gap_se) << ',' << fmt(p.generator_gap) << ','
          << p.seeds_used << ',' << p.seeds_diverged << '\n';
    csv.close();
    const bool pass = std::abs(r.slope - r.theory_slope) <= tol;
    std::cout << (pass ? "PASS" : "FAIL") << " slope=" << fmt(r.slope) << " theory=" << fmt(r.theory_slope) << '\n';
    write_json(out / "report.json", {{"slope", r.slope},
                                     {"theory_slope", r.theory_slope},
                                     {"tolerance", tol},
                                     {"pass", pass},
                                     {"schedule",
                                      {{"mode", optimize::to_string(r.schedule.mode)},
                                       {"G", r.schedule.G},
                                       {"mu", r.schedule.mu},
                                       {"alpha", r.schedule.alpha},
                                       {"L", r.schedule.L},
                                       {"R0", r.schedule.R0}}}});
    json m = manifest(s);
    m["pass"] = pass;
    write_json(out / "manifest.json", m);
    return pass ? 0 : kFailedCheck;
  };
}

Job prepare_flow(const config::Settings& s) {
  const auto out = output_dir(s);
  auto l = data::parse_synthetic(s.text("flow.objective"));
  if (!l.minimizer) throw ConfigError("key 'flow.objective': objective has no known minimizer");
  const double gamma = s.real("flow.gamma");
  if (gamma < 0.0) throw ConfigError("key 'flow.gamma': must be nonnegative");
  const double T = s.real("flow.T");
  if (!(T > 0.0)) throw ConfigError("key 'flow.T': must be positive");
  const double dt = s.real("flow.dt");
  const std::vector<double> theta0(l.dim, s.real("flow.theta0"));
  return [=] {
    std::optional<data::SyntheticFunction> g;
    if (gamma > 0.0) g = theory::concave_quadratic(gamma, *l.minimizer);
    const auto r = theory::flow_simulate(l, g ? &*g : nullptr, theta0, T, dt);
    const auto plain = g ? theory::flow_simulate(l, nullptr, theta0, T, dt) : r;
    fs::create_directories(out);
    std::ofstream csv(out / "flow.csv");
    if (!csv) throw IoError("cannot write " + (out / "flow.csv").string());
    csv << "t";
    for (std::size_t i = 0; i < l.dim; ++i) csv << ",theta_" << i;
    csv << '\n';
    for (std::size_t k = 0; k < r.times.size(); ++k) {
      csv << fmt(r.times[k]);
      for (double v : r.trajectory[k]) csv << ',' << fmt(v);
      csv << '\n';
    }
    csv.close();
    // The average is a trapezoid quadrature; its error is far below 1e-6 on the default grid.
    const bool within = r.kappa <= r.bound + 1e-6;
    const bool reduced = !g || r.kappa < plain.kappa;
    const bool pass = within && reduced;
    std::cout << (pass ? "PASS" : "FAIL") << " kappa=" << fmt(r.kappa) << " bound=" << fmt(r.bound) << '\n';
    write_json(out / "report.json", {{"kappa", r.kappa},
                                     {"pi", r.pi},
                                     {"bound", r.bound},
                                     {"kappa_without_adversary", plain.kappa},
                                     {"within_bound", within},
                                     {"adversary_reduces_kappa", reduced},
                                     {"average", r.average},
                                     {"pass", pass}});
    json m = manifest(s);
    m["pass"] = pass;
    write_json(out / "manifest.json", m);
    return pass ? 0 : kFailedCheck;
  };
}

Job prepare_genbound(const config::Settings& s) {
  const auto out = output_dir(s);
  if (!s.has("checkpoint")) throw ConfigError("key 'checkpoint' is required");
  const fs::path ckpt = s.text("checkpoint");
  trainer::TrainConfig cfg;
  cfg.dataset = s.text("dataset");
  cfg.data_dir = s.has("data_dir") ? fs::path(s.text("data_dir")) : config::default_data_dir();
  cfg.subsample = s.count("subsample");
  cfg.test_subsample = s.count("test_subsample");
  cfg.random_labels = s.boolean("random_labels");
  cfg.seed = s.count("seed");
  const double delta = s.real("delta_conf");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("key 'delta_conf': must lie in (0, 1)");
  const double n_star = s.real("n_star");
  const std::optional<double> K = s.has("K") ? std::optional(s.real("K")) : std::nullopt;
  return [=] {
    const auto p = checkpoint::load_model(ckpt);
    if (p.depth() != 2) throw DimensionError("genbound needs a two-layer model, checkpoint has depth " + std::to_string(p.depth()));
    const auto split = trainer::prepare_split(cfg, data::load_named(cfg.dataset, cfg.data_dir));
    if (split.train.inputs.cols() != p.input_dim() || split.train.targets.cols() != p.output_dim())
      throw DimensionError("checkpoint does not match dataset '" + cfg.dataset + "'");
    const double train_mse = model::mse(model::predict(p, split.train.inputs), split.train.targets);
    const double test_mse = model::mse(model::predict(p, split.test.inputs), split.test.targets);
    theory::GenBoundInputs in;
    in.U = p.layers[0];
    in.U0 = p.initial_first;
    in.V = p.layers[1];
    in.X = split.train.inputs;
    in.K = K ? *K : theory::loss_lipschitz(p, split.train);
    in.delta_conf = delta;
    in.empirical_risk = train_mse;
    const auto gb = theory::gen_bound(in);
    const double rel = theory::rel_gen_error(train_mse, test_mse, n_star);
    const bool finite = std::isfinite(gb.rademacher) && std::isfinite(gb.combined) && std::isfinite(gb.full);
    fs::create_directories(out);
    write_json(out / "report.json", {{"h", p.hidden()},
                                     {"m", split.train.inputs.rows()},
                                     {"K", in.K},
                                     {"train_mse", train_mse},
                                     {"test_mse", test_mse},
                                     {"rel_gen_error", rel},
                                     {"rademacher", gb.rademacher},
                                     {"combined", gb.combined},
                                     {"full", gb.full},
                                     {"finite", finite}});
    json m = manifest(s);
    m["finite"] = finite;
    write_json(out / "manifest.json", m);
    std::cout << (finite ? "PASS" : "FAIL") << " combined=" << fmt(gb.combined) << " full=" << fmt(gb.full) << '\n';
    return finite ? 0 : kFailedCheck;
  };
}

Job prepare_nta(const config::Settings& s) {
  const auto out = output_dir(s);
  if (!s.has("checkpoint")) throw ConfigError("key 'checkpoint' is required");
  const fs::path ckpt = s.text("checkpoint");
  const std::optional<fs::path> before =
      s.has("before_checkpoint") ? std::optional(fs::path(s.text("before_checkpoint"))) : std::nullopt;
  const double fraction = s.real("perturb");
  if (!(fraction >= 0.0)) throw ConfigError("key 'perturb': must be nonnegative");
  const auto layer = nta::parse_layer(s.text("layer"));
  const auto subset = nta::parse_subset(s.text("subset"));
  nta::TopologySettings ts;
  ts.seed = s.count("seed");
  ts.tsne.perplexity = s.real("tsne.perplexity");
  ts.tsne.iterations = s.count("tsne.iterations");
  ts.tsne.exaggeration = s.real("tsne.exaggeration");
  ts.tsne.exaggeration_iters = s.count("tsne.exaggeration_iters");
  ts.tsne.learning_rate = s.real("tsne.learning_rate");
  ts.tsne.pca_dims = s.count("tsne.pca_dims");
  ts.ap.damping = s.real("ap.damping");
  if (s.has("ap.preference")) ts.ap.preference = s.real("ap.preference");
  ts.ap.max_iter = s.count("ap.max_iter");
  ts.ap.convergence_iter = s.count("ap.convergence_iter");
  ts.ap.adaptive_damping = s.boolean("ap.adaptive_damping");
  return [=] {
    const auto after = checkpoint::load_model(ckpt);
    const auto ref = before ? checkpoint::load_model(*before) : nta::perturb_params(after, fraction, ts.seed);
    const auto report = nta::topology_report(ref, after, layer, subset, ts);
    fs::create_directories(out);
    nta::write_report(out, report);
    json m = manifest(s);
    m["summary"] = report.summary;
    write_json(out / "manifest.json", m);
    return 0;
  };
}

Job prepare(const config::Settings& s) {
  const auto& c = s.command();
  if (c == "train") return prepare_train(s);
  if (c == "sweep") return prepare_sweep(s);
  if (c == "verify-bounds") return prepare_verify(s);
  if (c == "rate-check") return prepare_rate(s);
  if (c == "flow") return prepare_flow(s);
  if (c == "genbound") return prepare_genbound(s);
  if (c == "nta") return prepare_nta(s);
  throw ConfigError("unknown command '" + c + "'");
}

const char* describe(const std::string& command) {
  if (command == "train") return "Train one network and write metrics.csv, checkpoints and manifest.json";
  if (command == "sweep") return "Train over sweep.h x sweep.seeds x sweep.modes and compare the modes";
  if (command == "verify-bounds") return "Check the analytic bounds on synthetic problems";
  if (command == "rate-check") return "Measure clipped SGD convergence rates under heavy-tailed noise";
  if (command == "flow") return "Simulate gradient flow with and without a concave adversary";
  if (command == "genbound") return "Evaluate the norm-based generalization bound of a trained model";
  return "Embed and cluster neurons before and after training";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial regularization laboratory"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "Print this help message and exit");  // -h is taken by the width flag

  struct Bound {
    CLI::App* sub;
    std::string config_file;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
  };
  std::vector<std::unique_ptr<Bound>> bound;
  for (const auto& command : config::commands()) {
    auto b = std::make_unique<Bound>();
    b->sub = app.add_subcommand(command, describe(command));
    b->sub->add_option("--config", b->config_file, "key = value file or a manifest.json")->check(CLI::ExistingFile);
    for (const auto& k : config::keys(command)) {
      std::string help = k.help;
      if (!k.fallback.empty()) help += (help.empty() ? "" : " ") + std::string("[") + k.fallback + "]";
      b->options[k.key] = b->sub->add_option("--" + k.key, b->values[k.key], help);
    }
    bound.push_back(std::move(b));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return kConfigError;
  }

  for (const auto& b : bound) {
    if (!b->sub->parsed()) continue;
    Job job;
    try {
      std::map<std::string, std::string> overrides;
      for (const auto& [key, opt] : b->options)
        if (opt->count() > 0) overrides[key] = b->values[key];
      const std::optional<fs::path> file =
          b->config_file.empty() ? std::nullopt : std::optional(fs::path(b->config_file));
      const auto settings = config::resolve(b->sub->get_name(), file, overrides);
      for (const auto& w : settings.warnings()) std::cerr << "warning: " << w << '\n';
      job = prepare(settings);
    } catch (const Error& e) {
      std::cerr << "error: " << e.kind() << ": " << e.what() << '\n';
      return e.kind() == "config" ? kConfigError : kRuntimeError;
    }
    try {
      return job();
    } catch (const Error& e) {
      std::cerr << "error: " << e.kind() << ": " << e.what() << '\n';
      return kRuntimeError;
    } catch (const std::exception& e) {
      std::cerr << "error: internal: " << e.what() << '\n';
      return kRuntimeError;
    }
  }
  return kConfigError;
}
