#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "advreg/matrix.hpp"
#include "advreg/model.hpp"

namespace advreg::nta {

// hidden: rows of the first layer (one point per hidden unit, in R^{d_x}).
// top: columns of the last layer (one point per last hidden unit, in R^{d_y}).
enum class Layer { hidden, top };

Layer parse_layer(const std::string& s);
std::string to_string(Layer l);

struct SubsetSpec {
  enum class Kind { all, range, random } kind = Kind::all;
  std::size_t begin = 0;  // range: [begin, end)
  std::size_t end = 0;
  std::size_t count = 0;  // random: count distinct neurons, sorted
  std::uint64_t seed = 0;

  static SubsetSpec range(std::size_t begin, std::size_t end);
  static SubsetSpec random(std::size_t count, std::uint64_t seed);
};

// "all", "B-E" (half-open) or "random:COUNT[:SEED]".
SubsetSpec parse_subset(const std::string& s);
std::string to_string(const SubsetSpec& s);

struct NeuronCloud {
  Layer layer = Layer::hidden;
  Matrix points;                 // n x d
  std::vector<std::size_t> ids;  // neuron index of each row
  SubsetSpec subset;
};

// Throws BoundsError when the subset does not fit the layer width.
NeuronCloud select_neurons(const model::ModelParams& p, Layer layer, const SubsetSpec& subset);

struct TsneSettings {
  double perplexity = 30.0;
  std::size_t iterations = 1000;
  double exaggeration = 12.0;
  std::size_t exaggeration_iters = 250;
  double learning_rate = 0.0;  // 0: max(n / exaggeration / 4, 50)
  std::size_t pca_dims = 10;  // hidden layer only
  std::size_t kl_every = 50;
};

struct Embedding {
  Matrix y;                                           // n x 2
  std::vector<std::pair<std::size_t, double>> kl_trace;  // (iteration, KL) every kl_every
  double final_kl = 0.0;
};

// Symmetric joint affinities with per-point bandwidths found by bisection on
// the conditional entropy (target log perplexity).
Matrix joint_affinities(const Matrix& points, double perplexity);

// Exact t-SNE to two dimensions. Throws ParameterError unless n >= 3 perplexity.
Embedding tsne(const Matrix& points, const TsneSettings& s, std::uint64_t seed);

// Hidden clouds go through PCA to s.pca_dims first; top clouds are embedded directly.
Embedding embed(const NeuronCloud& cloud, const TsneSettings& s, std::uint64_t seed);

struct ApSettings {
  double damping = 0.5;
  std::optional<double> preference;  // default: median off-diagonal similarity
  std::size_t max_iter = 200;
  std::size_t convergence_iter = 15;
  // Damping 0.5 oscillates on tight, well-separated groups (typical t-SNE output).
  // When set, an unconverged run is repeated at damping 0.7 and then 0.9.
  bool adaptive_damping = true;
};

struct ApResult {
  std::vector<int> labels;              // contiguous from 0, ordered by exemplar index
  std::vector<std::size_t> exemplars;   // exemplar point of cluster c
  std::vector<bool> is_exemplar;
  std::size_t iterations = 0;
  bool converged = false;
  double preference = 0.0;
  double damping = 0.0;  // of the run that produced the labels
  std::size_t clusters() const { return exemplars.size(); }
};

// Similarity is the negative squared Euclidean distance. A tiny seeded jitter
// breaks ties between identical similarities. When message passing finds no
// exemplar, everything falls into one cluster around the medoid.
ApResult affinity_propagation(const Matrix& points, const ApSettings& s = {}, std::uint64_t seed = 0);

// Sum over points of s(i, exemplar(i)), with s(k, k) = preference for exemplars.
double net_similarity(const Matrix& points, const ApResult& r);

// Adds sqrt(fraction) * N(mean_W, std_W) to every weight of every layer, so the
// expected noise energy is fraction * ||W||^2 per layer. The input is not modified.
model::ModelParams perturb_params(const model::ModelParams& p, double fraction, std::uint64_t seed);

struct TopologySettings {
  TsneSettings tsne;
  ApSettings ap;
  std::uint64_t seed = 0;
};

struct TopologyResult {
  NeuronCloud cloud;
  Embedding embedding;
  ApResult clusters;
  double mean_nn_distance = 0.0;  // in the embedding
};

TopologyResult analyze(const model::ModelParams& p, Layer layer, const SubsetSpec& subset,
                       const TopologySettings& s);

struct TopologyReport {
  TopologyResult before, after;
  nlohmann::json summary;
};

// Same subset and seed for both parameter sets. Throws DimensionError on an architecture mismatch.
TopologyReport topology_report(const model::ModelParams& before, const model::ModelParams& after, Layer layer,
                               const SubsetSpec& subset, const TopologySettings& s);

// neuron_id,layer,x,y,cluster,is_exemplar
void write_topology_csv(const std::filesystem::path& path, const TopologyResult& r);

// topology.csv (after), topology_initial.csv (before), topology.json (diagnostics).
void write_report(const std::filesystem::path& dir, const TopologyReport& r);

}  // namespace advreg::nta
