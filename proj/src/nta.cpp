#include "advreg/nta.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "advreg/errors.hpp"
#include "advreg/kernels.hpp"
#include "advreg/linalg.hpp"
#include "advreg/rng.hpp"

namespace advreg::nta {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t parse_count(const std::string& s, const std::string& whole) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size() || s.front() == '-') throw ConfigError("bad neuron subset '" + whole + "'");
  return static_cast<std::size_t>(v);
}

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  const double hi = v[n / 2];
  if (n % 2) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + n / 2));
}

}  // namespace

Layer parse_layer(const std::string& s) {
  if (s == "hidden") return Layer::hidden;
  if (s == "top") return Layer::top;
  throw ConfigError("nta.layer must be hidden or top, got '" + s + "'");
}

std::string to_string(Layer l) { return l == Layer::hidden ? "hidden" : "top"; }

SubsetSpec SubsetSpec::range(std::size_t begin, std::size_t end) {
  SubsetSpec s;
  s.kind = Kind::range;
  s.begin = begin;
  s.end = end;
  return s;
}

SubsetSpec SubsetSpec::random(std::size_t count, std::uint64_t seed) {
  SubsetSpec s;
  s.kind = Kind::random;
  s.count = count;
  s.seed = seed;
  return s;
}

SubsetSpec parse_subset(const std::string& s) {
  if (s == "all") return {};
  if (s.rfind("random:", 0) == 0) {
    const std::string rest = s.substr(7);
    const auto colon = rest.find(':');
    if (colon == std::string::npos) return SubsetSpec::random(parse_count(rest, s), 0);
    return SubsetSpec::random(parse_count(rest.substr(0, colon), s), parse_count(rest.substr(colon + 1), s));
  }
  const auto dash = s.find('-');
  if (dash == std::string::npos) throw ConfigError("bad neuron subset '" + s + "' (all, B-E or random:N[:SEED])");
  return SubsetSpec::range(parse_count(s.substr(0, dash), s), parse_count(s.substr(dash + 1), s));
}

std::string to_string(const SubsetSpec& s) {
  switch (s.kind) {
    case SubsetSpec::Kind::all:
      return "all";
    case SubsetSpec::Kind::range:
      return std::to_string(s.begin) + "-" + std::to_string(s.end);
    case SubsetSpec::Kind::random:
      return "random:" + std::to_string(s.count) + ":" + std::to_string(s.seed);
  }
  return "all";
}

NeuronCloud select_neurons(const model::ModelParams& p, Layer layer, const SubsetSpec& subset) {
  if (p.layers.empty()) throw InvalidInputError("select_neurons: empty model");
  const Matrix& first = p.layers.front();
  const Matrix& last = p.layers.back();
  const std::size_t width = layer == Layer::hidden ? first.rows() : last.cols();

  NeuronCloud c;
  c.layer = layer;
  c.subset = subset;
  switch (subset.kind) {
    case SubsetSpec::Kind::all:
      c.ids.resize(width);
      std::iota(c.ids.begin(), c.ids.end(), std::size_t{0});
      break;
    case SubsetSpec::Kind::range:
      if (subset.begin >= subset.end || subset.end > width)
        throw BoundsError("neuron range " + to_string(subset) + " does not fit a layer of width " +
                          std::to_string(width));
      c.ids.resize(subset.end - subset.begin);
      std::iota(c.ids.begin(), c.ids.end(), subset.begin);
      break;
    case SubsetSpec::Kind::random: {
      if (subset.count == 0 || subset.count > width)
        throw BoundsError("random subset of " + std::to_string(subset.count) + " neurons from a layer of width " +
                          std::to_string(width));
      std::vector<std::size_t> all(width);
      std::iota(all.begin(), all.end(), std::size_t{0});
      Rng rng = make_rng(subset.seed, "nta");
      // partial Fisher-Yates on our own uniform draws
      for (std::size_t i = 0; i < subset.count; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(width - i));
        std::swap(all[i], all[j]);
      }
      c.ids.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(subset.count));
      std::sort(c.ids.begin(), c.ids.end());
      break;
    }
  }

  const std::size_t d = layer == Layer::hidden ? first.cols() : last.rows();
  c.points = Matrix(c.ids.size(), d);
  for (std::size_t i = 0; i < c.ids.size(); ++i)
    for (std::size_t j = 0; j < d; ++j)
      c.points(i, j) = layer == Layer::hidden ? first(c.ids[i], j) : last(j, c.ids[i]);
  return c;
}

Matrix joint_affinities(const Matrix& points, double perplexity) {
  const std::size_t n = points.rows();
  const Matrix d2 = kernels::pairwise_sq_dists(points);
  const double target = std::log(perplexity);
  Matrix cond(n, n);

#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    std::vector<double> row(n, 0.0);
    for (int step = 0; step < 200; ++step) {
      // shift by the nearest distance so the exponentials never all underflow
      double dmin = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) dmin = std::min(dmin, d2(i, j));
      double sum = 0.0, weighted = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        row[j] = std::exp(-beta * (d2(i, j) - dmin));
        sum += row[j];
        weighted += row[j] * (d2(i, j) - dmin);
      }
      const double entropy = std::log(sum) + beta * weighted / sum;
      for (std::size_t j = 0; j < n; ++j) row[j] = j == i ? 0.0 : row[j] / sum;
      const double diff = entropy - target;
      if (std::abs(diff) < 1e-5) break;
      if (diff > 0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    for (std::size_t j = 0; j < n; ++j) cond(i, j) = row[j];
  }

  Matrix p(n, n);
  const double norm = 2.0 * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) p(i, j) = std::max((cond(i, j) + cond(j, i)) / norm, 1e-12);
  return p;
}

Embedding tsne(const Matrix& points, const TsneSettings& s, std::uint64_t seed) {
  const std::size_t n = points.rows();
  if (!(s.perplexity > 0.0)) throw ParameterError("perplexity must be positive");
  if (static_cast<double>(n) < 3.0 * s.perplexity)
    throw ParameterError("perplexity " + fmt(s.perplexity) + " needs at least " +
                         std::to_string(static_cast<std::size_t>(std::ceil(3.0 * s.perplexity))) + " points, got " +
                         std::to_string(n) + "; largest feasible perplexity is " +
                         fmt(std::floor(static_cast<double>(n) / 3.0)));
  if (!points.all_finite()) throw InvalidInputError("t-SNE input is not finite");

  const Matrix p = joint_affinities(points, s.perplexity);
  Matrix p_ex = p;
  p_ex *= s.exaggeration;

  Embedding out;
  out.y = Matrix(n, 2);
  Rng rng = make_rng(seed, "nta", 1);
  std::normal_distribution<double> init(0.0, 1e-2);
  for (double& v : out.y.values()) v = init(rng);

  const double eta = s.learning_rate > 0.0 ? s.learning_rate
                                           : std::max(static_cast<double>(n) / s.exaggeration / 4.0, 50.0);
  Matrix update(n, 2), gains(n, 2, 1.0), grad;
  for (std::size_t it = 0; it < s.iterations; ++it) {
    const bool early = it < s.exaggeration_iters;
    kernels::tsne_gradient(early ? p_ex : p, out.y, grad);
    const double momentum = early ? 0.5 : 0.8;
    for (std::size_t k = 0; k < out.y.size(); ++k) {
      double& gain = gains.values()[k];
      const double g = grad.values()[k];
      double& u = update.values()[k];
      gain = (g > 0.0) != (u > 0.0) ? gain + 0.2 : gain * 0.8;
      gain = std::max(gain, 0.01);
      u = momentum * u - eta * gain * g;
      out.y.values()[k] += u;
    }
    for (std::size_t c = 0; c < 2; ++c) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += out.y(i, c);
      mean /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) out.y(i, c) -= mean;
    }
    if (!out.y.all_finite()) throw DivergenceError("t-SNE diverged at iteration " + std::to_string(it + 1));
    if (s.kl_every > 0 && (it + 1) % s.kl_every == 0) out.kl_trace.emplace_back(it + 1, kernels::tsne_kl(p, out.y));
  }
  out.final_kl = kernels::tsne_kl(p, out.y);
  return out;
}

Embedding embed(const NeuronCloud& cloud, const TsneSettings& s, std::uint64_t seed) {
  if (cloud.layer == Layer::hidden && cloud.points.cols() > s.pca_dims)
    return tsne(linalg::pca_project(cloud.points, s.pca_dims).projected, s, seed);
  return tsne(cloud.points, s, seed);
}

namespace {

// Message passing on distinct points with a fixed preference.
ApResult ap_distinct(const Matrix& points, double preference, const ApSettings& s, std::uint64_t seed) {
  const std::size_t n = points.rows();
  ApResult r;
  r.preference = preference;
  r.damping = s.damping;
  if (n == 1) {
    r.labels = {0};
    r.exemplars = {0};
    r.is_exemplar = {true};
    r.converged = true;
    return r;
  }

  Matrix sim = kernels::pairwise_sq_dists(points);
  sim *= -1.0;
  for (std::size_t i = 0; i < n; ++i) sim(i, i) = preference;
  const Matrix clean = sim;

  // Jitter far below any meaningful similarity difference, so exact ties cannot oscillate.
  Rng rng = make_rng(seed, "nta", 2);
  const double tiny = std::numeric_limits<double>::min() * 100.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (double& v : sim.values()) v += (eps * v + tiny) * uniform01(rng);

  Matrix resp(n, n), avail(n, n);
  std::vector<bool> current(n, false);
  std::size_t stable = 0;
  for (std::size_t it = 0; it < s.max_iter; ++it) {
    kernels::ap_update_responsibilities(sim, avail, resp, s.damping);
    kernels::ap_update_availabilities(resp, avail, s.damping);
    r.iterations = it + 1;
    std::vector<bool> next(n);
    bool any = false;
    for (std::size_t k = 0; k < n; ++k) {
      next[k] = resp(k, k) + avail(k, k) > 0.0;
      any = any || next[k];
    }
    stable = (next == current) ? stable + 1 : 0;
    current = std::move(next);
    if (any && stable >= s.convergence_iter) {
      r.converged = true;
      break;
    }
  }

  std::vector<std::size_t> ex;
  for (std::size_t k = 0; k < n; ++k)
    if (current[k]) ex.push_back(k);

  auto assign = [&](const std::vector<std::size_t>& exemplars) {
    std::vector<std::size_t> owner(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < exemplars.size(); ++c)
        if (clean(i, exemplars[c]) > clean(i, exemplars[best])) best = c;
      owner[i] = best;
    }
    for (std::size_t c = 0; c < exemplars.size(); ++c) owner[exemplars[c]] = c;
    return owner;
  };

  if (ex.empty()) {
    // medoid of the whole set
    std::size_t best = 0;
    double best_sum = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (i != k) sum += clean(i, k);
      if (sum > best_sum) {
        best_sum = sum;
        best = k;
      }
    }
    ex = {best};
  } else {
    // move each exemplar to the medoid of its cluster, then reassign
    const auto owner = assign(ex);
    for (std::size_t c = 0; c < ex.size(); ++c) {
      double best_sum = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < n; ++k) {
        if (owner[k] != c) continue;
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          if (owner[i] == c && i != k) sum += clean(i, k);
        if (sum > best_sum) {
          best_sum = sum;
          ex[c] = k;
        }
      }
    }
    std::sort(ex.begin(), ex.end());
    ex.erase(std::unique(ex.begin(), ex.end()), ex.end());
  }

  const auto owner = assign(ex);
  r.exemplars = ex;
  r.labels.resize(n);
  r.is_exemplar.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) r.labels[i] = static_cast<int>(owner[i]);
  for (std::size_t k : ex) r.is_exemplar[k] = true;
  return r;
}

}  // namespace

ApResult affinity_propagation(const Matrix& points, const ApSettings& s, std::uint64_t seed) {
  const std::size_t n = points.rows();
  if (n == 0) throw InvalidInputError("affinity propagation needs at least one point");
  if (!(s.damping >= 0.5 && s.damping < 1.0)) throw ParameterError("damping must lie in [0.5, 1)");
  if (!points.all_finite()) throw InvalidInputError("affinity propagation input is not finite");

  const Matrix d2 = kernels::pairwise_sq_dists(points);
  double preference = 0.0;
  if (s.preference) {
    preference = *s.preference;
  } else if (n > 1) {
    std::vector<double> off;
    off.reserve(n * (n - 1));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        if (i != k) off.push_back(-d2(i, k));
    preference = median(off);
  }

  // Exact duplicates make the messages oscillate between copies; pass messages
  // between distinct points and let every copy follow its first occurrence.
  std::vector<std::size_t> rep(n), distinct;
  for (std::size_t i = 0; i < n; ++i) {
    rep[i] = distinct.size();
    bool found = false;
    for (std::size_t u = 0; u < distinct.size() && !found; ++u)
      if (d2(i, distinct[u]) == 0.0) {
        rep[i] = u;
        found = true;
      }
    if (!found) distinct.push_back(i);
  }
  const Matrix unique = distinct.size() == n ? Matrix{} : gather_rows(points, distinct);
  const Matrix& pts = distinct.size() == n ? points : unique;
  ApResult sub = ap_distinct(pts, preference, s, seed);
  for (double d : {0.7, 0.9}) {
    if (sub.converged || !s.adaptive_damping || d <= s.damping) continue;
    ApSettings retry = s;
    retry.damping = d;
    sub = ap_distinct(pts, preference, retry, seed);
  }
  if (distinct.size() == n) return sub;

  ApResult r;
  r.preference = preference;
  r.damping = sub.damping;
  r.iterations = sub.iterations;
  r.converged = sub.converged;
  for (std::size_t e : sub.exemplars) r.exemplars.push_back(distinct[e]);
  r.labels.resize(n);
  r.is_exemplar.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) r.labels[i] = sub.labels[rep[i]];
  for (std::size_t e : r.exemplars) r.is_exemplar[e] = true;
  return r;
}

double net_similarity(const Matrix& points, const ApResult& r) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    if (r.is_exemplar[i]) {
      total += r.preference;
      continue;
    }
    const auto a = points.row(i), b = points.row(r.exemplars[static_cast<std::size_t>(r.labels[i])]);
    double d = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) d += (a[j] - b[j]) * (a[j] - b[j]);
    total -= d;
  }
  return total;
}

model::ModelParams perturb_params(const model::ModelParams& p, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0)) throw ParameterError("perturbation fraction must be nonnegative");
  model::ModelParams out = p;
  if (fraction == 0.0) return out;
  const double scale = std::sqrt(fraction);
  for (std::size_t l = 0; l < out.layers.size(); ++l) {
    Matrix& w = out.layers[l];
    const double n = static_cast<double>(w.size());
    double mean = 0.0;
    for (double v : w.values()) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : w.values()) var += (v - mean) * (v - mean);
    var /= n;
    Rng rng = make_rng(seed, "nta", 100 + l);
    std::normal_distribution<double> noise(mean, std::sqrt(var));
    for (double& v : w.values()) v += scale * noise(rng);
  }
  return out;
}

TopologyResult analyze(const model::ModelParams& p, Layer layer, const SubsetSpec& subset,
                       const TopologySettings& s) {
  TopologyResult r;
  r.cloud = select_neurons(p, layer, subset);
  r.embedding = embed(r.cloud, s.tsne, s.seed);
  r.clusters = affinity_propagation(r.embedding.y, s.ap, s.seed);
  const Matrix d2 = kernels::pairwise_sq_dists(r.embedding.y);
  const std::size_t n = d2.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) best = std::min(best, d2(i, j));
    total += std::sqrt(best);
  }
  r.mean_nn_distance = n > 1 ? total / static_cast<double>(n) : 0.0;
  return r;
}

TopologyReport topology_report(const model::ModelParams& before, const model::ModelParams& after, Layer layer,
                               const SubsetSpec& subset, const TopologySettings& s) {
  if (before.layers.size() != after.layers.size())
    throw DimensionError("topology_report: parameter sets differ in depth");
  for (std::size_t l = 0; l < before.layers.size(); ++l)
    require_same_shape(before.layers[l], after.layers[l], "topology_report");

  TopologyReport rep;
  rep.before = analyze(before, layer, subset, s);
  rep.after = analyze(after, layer, subset, s);
  auto side = [](const TopologyResult& t) {
    nlohmann::json kl = nlohmann::json::array();
    for (const auto& [it, v] : t.embedding.kl_trace) kl.push_back({{"iteration", it}, {"kl", v}});
    return nlohmann::json{{"clusters", t.clusters.clusters()},
                          {"ap_iterations", t.clusters.iterations},
                          {"ap_converged", t.clusters.converged},
                          {"ap_preference", t.clusters.preference},
                          {"final_kl", t.embedding.final_kl},
                          {"kl_trace", kl},
                          {"mean_nn_distance", t.mean_nn_distance}};
  };
  rep.summary = {{"layer", to_string(layer)},
                 {"subset", to_string(subset)},
                 {"neurons", rep.after.cloud.ids.size()},
                 {"settings",
                  {{"perplexity", s.tsne.perplexity},
                   {"iterations", s.tsne.iterations},
                   {"exaggeration", s.tsne.exaggeration},
                   {"exaggeration_iters", s.tsne.exaggeration_iters},
                   {"learning_rate", s.tsne.learning_rate},
                   {"pca_dims", s.tsne.pca_dims},
                   {"damping", s.ap.damping},
                   {"max_iter", s.ap.max_iter},
                   {"seed", s.seed}}},
                 {"initial", side(rep.before)},
                 {"final", side(rep.after)}};
  return rep;
}

void write_topology_csv(const std::filesystem::path& path, const TopologyResult& r) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "neuron_id,layer,x,y,cluster,is_exemplar\n";
  const std::string layer = to_string(r.cloud.layer);
  for (std::size_t i = 0; i < r.cloud.ids.size(); ++i)
    out << r.cloud.ids[i] << ',' << layer << ',' << fmt(r.embedding.y(i, 0)) << ',' << fmt(r.embedding.y(i, 1)) << ','
        << r.clusters.labels[i] << ',' << (r.clusters.is_exemplar[i] ? 1 : 0) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

void write_report(const std::filesystem::path& dir, const TopologyReport& r) {
  std::filesystem::create_directories(dir);
  write_topology_csv(dir / "topology.csv", r.after);
  write_topology_csv(dir / "topology_initial.csv", r.before);
  std::ofstream out(dir / "topology.json");
  if (!out) throw IoError("cannot write " + (dir / "topology.json").string());
  out << r.summary.dump(2) << '\n';
}

}  // namespace advreg::nta
