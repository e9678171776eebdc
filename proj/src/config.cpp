#include "advreg/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "advreg/errors.hpp"

namespace advreg::config {

namespace {

std::vector<KeySpec> data_keys() {
  return {
      {"dataset", Type::text, "mnist", "mnist, fashion-mnist or cifar10"},
      {"data_dir", Type::text, "", "dataset root (default: <source>/data)"},
      {"subsample", Type::count, "0", "first m' training samples, 0 keeps all"},
      {"test_subsample", Type::count, "0", "first test samples, 0 keeps all"},
      {"random_labels", Type::boolean, "false", "replace labels with seeded random classes"},
  };
}

std::vector<KeySpec> train_keys() {
  auto k = data_keys();
  const std::vector<KeySpec> rest = {
      {"out", Type::text, "", "output directory"},
      {"seed", Type::count, "0", "root seed"},
      {"h", Type::count, "32", "hidden width"},
      {"depth", Type::count, "2", "number of weight layers"},
      {"activation", Type::text, "relu", "relu or elu"},
      {"mode", Type::text, "sup", "sup or aug"},
      {"lr", Type::real, "0.01", "generator learning rate"},
      {"momentum", Type::real, "0.9", "generator momentum"},
      {"batch_size", Type::count, "64", "minibatch size"},
      {"max_epochs", Type::count, "1000", "epoch cap"},
      {"mse_threshold", Type::real, "", "convergence threshold (default by dataset)"},
      {"lipschitz_samples", Type::count, "256", "training rows used for the Lipschitz estimate"},
      {"critic.lambda_gp", Type::real, "10", "gradient penalty weight"},
      {"critic.n_critic", Type::count, "1", "critic steps per generator step"},
      {"critic.hidden", Type::count, "64", "critic hidden width, 0 for linear"},
      {"critic.init", Type::text, "uniform", "uniform or zero"},
      {"critic.lr", Type::real, "", "critic learning rate (default: lr)"},
      {"critic.momentum", Type::real, "", "critic momentum (default: momentum)"},
      {"aug.weight", Type::real, "1", "weight of the adversarial gradient"},
      {"clip.mode", Type::text, "none", "none, adaptive_sc or constant_nc"},
      {"clip.G", Type::real, "1", "noise moment bound"},
      {"clip.mu", Type::real, "1", "strong convexity"},
      {"clip.alpha", Type::real, "2", "moment order in (1, 2]"},
      {"clip.L", Type::real, "1", "smoothness"},
      {"clip.R0", Type::real, "1", "initial gap"},
      {"clip.T", Type::count, "1", "horizon"},
  };
  k.insert(k.end(), rest.begin(), rest.end());
  return k;
}

std::vector<KeySpec> sweep_keys() {
  auto k = train_keys();
  k.push_back({"sweep.h", Type::counts, "32,64,128,256,512,1024", "hidden widths"});
  k.push_back({"sweep.modes", Type::text, "sup,aug", "modes, comma separated"});
  k.push_back({"sweep.seeds", Type::counts, "0,1,2", "seeds"});
  return k;
}

std::vector<KeySpec> verify_keys() {
  return {
      {"out", Type::text, "", "output directory"},
      {"seed", Type::count, "0", "root seed"},
      {"suite", Type::text, "all", "lemmas, complexity, flow, lemma3 or all"},
  };
}

std::vector<KeySpec> rate_keys() {
  return {
      {"out", Type::text, "", "output directory"},
      {"seed", Type::count, "0", "root seed"},
      {"rate.objective", Type::text, "strongly-convex-quadratic", "or smooth-nonconvex-quartic"},
      {"rate.dim", Type::count, "5", "dimension"},
      {"rate.mu", Type::real, "1", "smallest curvature of the quadratic"},
      {"rate.gamma", Type::real, "0", "adversary curvature (quadratic only)"},
      {"rate.sigma", Type::real, "1", "gradient noise scale"},
      {"rate.theta0", Type::real, "0", "start value per coordinate, 0 for the objective default"},
      {"rate.T", Type::counts, "100,200,400,800,1600,3200", "horizons"},
      {"rate.seeds", Type::count, "32", "seeds per horizon"},
      {"rate.tolerance", Type::real, "0.2", "allowed |slope - theory|"},
      {"clip.mode", Type::text, "", "adaptive_sc or constant_nc (default by objective)"},
      {"clip.alpha", Type::real, "1.5", "moment order in (1, 2]"},
  };
}

std::vector<KeySpec> flow_keys() {
  return {
      {"out", Type::text, "", "output directory"},
      {"seed", Type::count, "0", "root seed"},
      {"flow.objective", Type::text, "quadratic(dim=2,theta_star=1)", "synthetic objective"},
      {"flow.gamma", Type::real, "0.5", "adversary curvature, 0 for none"},
      {"flow.theta0", Type::real, "0", "start value per coordinate"},
      {"flow.T", Type::real, "10", "time horizon"},
      {"flow.dt", Type::real, "0", "step, 0 for automatic"},
  };
}

std::vector<KeySpec> genbound_keys() {
  auto k = data_keys();
  const std::vector<KeySpec> rest = {
      {"out", Type::text, "", "output directory"},
      {"seed", Type::count, "0", "root seed"},
      {"checkpoint", Type::text, "", "trained generator checkpoint"},
      {"delta_conf", Type::real, "0.05", "confidence parameter"},
      {"n_star", Type::real, "1", "relative generalization scale"},
      {"K", Type::real, "", "loss Lipschitz constant (default: estimated)"},
  };
  k.insert(k.end(), rest.begin(), rest.end());
  return k;
}

std::vector<KeySpec> nta_keys() {
  return {
      {"out", Type::text, "", "output directory"},
      {"seed", Type::count, "0", "root seed"},
      {"checkpoint", Type::text, "", "generator checkpoint (after)"},
      {"before_checkpoint", Type::text, "", "reference checkpoint (default: perturbed copy)"},
      {"perturb", Type::real, "0.1", "noise energy fraction when no reference is given"},
      {"layer", Type::text, "hidden", "hidden or top"},
      {"subset", Type::text, "all", "all, B-E or random:N[:SEED]"},
      {"tsne.perplexity", Type::real, "30", ""},
      {"tsne.iterations", Type::count, "1000", ""},
      {"tsne.exaggeration", Type::real, "12", ""},
      {"tsne.exaggeration_iters", Type::count, "250", ""},
      {"tsne.learning_rate", Type::real, "0", "0 for automatic"},
      {"tsne.pca_dims", Type::count, "10", ""},
      {"ap.damping", Type::real, "0.5", ""},
      {"ap.preference", Type::real, "", "default: median similarity"},
      {"ap.max_iter", Type::count, "200", ""},
      {"ap.convergence_iter", Type::count, "15", ""},
      {"ap.adaptive_damping", Type::boolean, "true", ""},
  };
}

std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

[[noreturn]] void mismatch(const std::string& key, const std::string& value, const char* what) {
  throw ConfigError("key '" + key + "': expected " + what + ", got '" + value + "'");
}

std::size_t to_count(const std::string& key, const std::string& v) {
  if (v.empty() || !std::all_of(v.begin(), v.end(), [](char c) { return c >= '0' && c <= '9'; }))
    mismatch(key, v, "a nonnegative integer");
  errno = 0;
  const auto x = std::strtoull(v.c_str(), nullptr, 10);
  if (errno == ERANGE) mismatch(key, v, "a nonnegative integer");
  return static_cast<std::size_t>(x);
}

std::int64_t to_integer(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const auto x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || errno == ERANGE || std::isspace(static_cast<unsigned char>(v[0])))
    mismatch(key, v, "an integer");
  return x;
}

double to_real(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || !std::isfinite(x) || std::isspace(static_cast<unsigned char>(v[0])))
    mismatch(key, v, "a finite number");
  return x;
}

bool to_boolean(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  mismatch(key, v, "a boolean");
}

void check(const KeySpec& k, const std::string& v) {
  if (v.empty()) return;
  switch (k.type) {
    case Type::text: break;
    case Type::count: to_count(k.key, v); break;
    case Type::integer: to_integer(k.key, v); break;
    case Type::real: to_real(k.key, v); break;
    case Type::boolean: to_boolean(k.key, v); break;
    case Type::counts:
      for (const auto& x : split_list(v)) to_count(k.key, x);
      break;
    case Type::reals:
      for (const auto& x : split_list(v)) to_real(k.key, x);
      break;
  }
}

// JSON scalar or array to the flat text form. Numbers use the shortest text
// that reads back to the same double.
std::string json_to_text(const std::string& key, const nlohmann::json& j) {
  if (j.is_null()) return {};
  if (j.is_string()) return j.get<std::string>();
  if (j.is_boolean()) return j.get<bool>() ? "true" : "false";
  if (j.is_number()) return j.dump();
  if (j.is_array()) {
    std::string out;
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) out += ",";
      out += json_to_text(key, j[i]);
    }
    return out;
  }
  throw ConfigError("key '" + key + "': unsupported value in manifest");
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"train", "sweep", "verify-bounds", "rate-check", "flow", "genbound", "nta"};
  return c;
}

const std::vector<KeySpec>& keys(const std::string& command) {
  static const std::map<std::string, std::vector<KeySpec>> all = {
      {"train", train_keys()},   {"sweep", sweep_keys()},       {"verify-bounds", verify_keys()},
      {"rate-check", rate_keys()}, {"flow", flow_keys()},       {"genbound", genbound_keys()},
      {"nta", nta_keys()},
  };
  const auto it = all.find(command);
  if (it == all.end()) throw ConfigError("unknown command '" + command + "'");
  return it->second;
}

Raw parse_text(const std::string& text, const std::string& origin) {
  Raw raw;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(origin + ": invalid JSON: " + e.what());
    }
    if (!j.contains("config") || !j["config"].is_object())
      throw ConfigError(origin + ": manifest has no \"config\" object");
    if (j.contains("command") && j["command"].is_string()) raw.command = j["command"].get<std::string>();
    for (const auto& [k, v] : j["config"].items()) raw.values[k] = json_to_text(k, v);
    return raw;
  }
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (raw.values.count(key))
      raw.warnings.push_back(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                             "', last value wins");
    raw.values[key] = value;
  }
  return raw;
}

Raw parse_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path.string());
}

const KeySpec& Settings::spec(const std::string& key) const {
  for (const auto& k : keys(command_))
    if (k.key == key) return k;
  throw ConfigError("unknown key '" + key + "' for command " + command_);
}

bool Settings::has(const std::string& key) const {
  spec(key);
  const auto it = values_.find(key);
  return it != values_.end() && !it->second.empty();
}

std::string Settings::text(const std::string& key) const {
  spec(key);
  const auto it = values_.find(key);
  return it == values_.end() ? std::string{} : it->second;
}

namespace {
std::string require(const Settings& s, const std::string& key) {
  if (!s.has(key)) throw ConfigError("key '" + key + "' is required");
  return s.text(key);
}
}  // namespace

std::size_t Settings::count(const std::string& key) const { return to_count(key, require(*this, key)); }
std::int64_t Settings::integer(const std::string& key) const { return to_integer(key, require(*this, key)); }
double Settings::real(const std::string& key) const { return to_real(key, require(*this, key)); }
bool Settings::boolean(const std::string& key) const { return to_boolean(key, require(*this, key)); }

std::vector<std::size_t> Settings::counts(const std::string& key) const {
  std::vector<std::size_t> out;
  for (const auto& x : split_list(require(*this, key))) out.push_back(to_count(key, x));
  return out;
}

std::vector<double> Settings::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& x : split_list(require(*this, key))) out.push_back(to_real(key, x));
  return out;
}

nlohmann::json Settings::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& k : keys(command_)) {
    if (!has(k.key)) {
      j[k.key] = nullptr;
      continue;
    }
    switch (k.type) {
      case Type::text: j[k.key] = text(k.key); break;
      case Type::count: j[k.key] = count(k.key); break;
      case Type::integer: j[k.key] = integer(k.key); break;
      case Type::real: j[k.key] = real(k.key); break;
      case Type::boolean: j[k.key] = boolean(k.key); break;
      case Type::counts: j[k.key] = counts(k.key); break;
      case Type::reals: j[k.key] = reals(k.key); break;
    }
  }
  return j;
}

Settings resolve_raw(const std::string& command, const Raw& file, const std::map<std::string, std::string>& overrides) {
  const auto& specs = keys(command);
  if (file.command && *file.command != command)
    throw ConfigError("manifest was written by '" + *file.command + "', not '" + command + "'");
  Settings s;
  s.command_ = command;
  s.warnings_ = file.warnings;
  for (const auto& k : specs) s.values_[k.key] = k.fallback;
  auto apply = [&](const std::map<std::string, std::string>& layer) {
    for (const auto& [key, value] : layer) {
      const auto it = std::find_if(specs.begin(), specs.end(), [&](const KeySpec& k) { return k.key == key; });
      if (it == specs.end()) throw ConfigError("unknown key '" + key + "' for command " + command);
      check(*it, value);
      s.values_[key] = value;
    }
  };
  apply(file.values);
  apply(overrides);
  return s;
}

Settings resolve(const std::string& command, const std::optional<std::filesystem::path>& file,
                 const std::map<std::string, std::string>& overrides) {
  return resolve_raw(command, file ? parse_file(*file) : Raw{}, overrides);
}

std::filesystem::path default_data_dir() { return std::filesystem::path(ADVREG_SOURCE_DIR) / "data"; }

trainer::TrainConfig to_train_config(const Settings& s) {
  trainer::TrainConfig c;
  c.dataset = s.text("dataset");
  c.data_dir = s.has("data_dir") ? std::filesystem::path(s.text("data_dir")) : default_data_dir();
  c.subsample = s.count("subsample");
  c.test_subsample = s.count("test_subsample");
  c.random_labels = s.boolean("random_labels");
  c.h = s.count("h");
  c.depth = s.count("depth");
  c.activation = model::parse_activation(s.text("activation"));
  c.mode = trainer::parse_mode(s.text("mode"));
  c.lr = s.real("lr");
  c.momentum = s.real("momentum");
  c.batch_size = s.count("batch_size");
  c.max_epochs = s.count("max_epochs");
  if (s.has("mse_threshold")) {
    c.mse_threshold = s.real("mse_threshold");
  } else if (c.dataset == "mnist" || c.dataset == "fashion-mnist") {
    c.mse_threshold = 0.001;
  } else if (c.dataset == "cifar10") {
    c.mse_threshold = 0.02;
  } else {
    throw ConfigError("unknown dataset '" + c.dataset + "'");
  }
  c.seed = s.count("seed");
  c.lipschitz_samples = s.count("lipschitz_samples");
  c.lambda_gp = s.real("critic.lambda_gp");
  c.n_critic = s.count("critic.n_critic");
  c.critic_hidden = s.count("critic.hidden");
  c.critic_init = parse_critic_init(s.text("critic.init"));
  if (s.has("critic.lr")) c.critic_lr = s.real("critic.lr");
  if (s.has("critic.momentum")) c.critic_momentum = s.real("critic.momentum");
  c.aug_weight = s.real("aug.weight");
  c.clip.mode = optimize::parse_clip_mode(s.text("clip.mode"));
  c.clip.G = s.real("clip.G");
  c.clip.mu = s.real("clip.mu");
  c.clip.alpha = s.real("clip.alpha");
  c.clip.L = s.real("clip.L");
  c.clip.R0 = s.real("clip.R0");
  c.clip.T = s.count("clip.T");
  c.validate();
  return c;
}

}  // namespace advreg::config
