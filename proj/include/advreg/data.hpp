#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "advreg/matrix.hpp"
#include "advreg/rng.hpp"

namespace advreg::data {

// Inputs scaled to [0, 1]; targets one-hot.
struct Dataset {
  std::string name;
  Matrix inputs;   // m x d_x
  Matrix targets;  // m x d_y
  std::size_t samples() const { return inputs.rows(); }
  std::size_t input_dim() const { return inputs.cols(); }
  std::size_t output_dim() const { return targets.cols(); }
  std::vector<int> labels() const;  // argmax of each target row
};

// Throws ConsistencyError when a target row is not one-hot or shapes disagree.
void validate(const Dataset& ds);

Matrix one_hot(const std::vector<int>& labels, std::size_t classes);

// IDX (big-endian) images 0x00000803 / labels 0x00000801. Gzip-compressed
// files (".gz" or gzip magic) are inflated transparently.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t classes = 10);
// Writes pixel bytes round(255 x) with the given image geometry. Inputs of the
// form b/255 reload bit-identically.
void write_idx(const Dataset& ds, const std::filesystem::path& images,
               const std::filesystem::path& labels, std::uint32_t rows, std::uint32_t cols);

// CIFAR-10 binary batches: 3073-byte records, byte 0 = label, then RGB planes.
Dataset load_cifar10(const std::vector<std::filesystem::path>& batches);

// First `count` samples (all when count == 0 or count >= m).
Dataset head(const Dataset& ds, std::size_t count);

// Replaces targets by uniformly random one-hot rows; inputs are untouched.
Dataset randomize_labels(const Dataset& ds, std::uint64_t seed);

// Seeded mini-batches over per-epoch permutations. Single consumer.
class BatchStream {
 public:
  BatchStream(const Dataset& ds, std::size_t batch_size, std::uint64_t seed);

  // Next batch of the current epoch; starts a new epoch when the previous one
  // is exhausted. The final batch of an epoch may be short.
  std::pair<Matrix, Matrix> next_batch();
  std::size_t batches_per_epoch() const;
  std::size_t epoch() const { return epoch_; }
  bool epoch_done() const { return cursor_ >= order_.size(); }
  const std::vector<std::size_t>& permutation() const { return order_; }
  std::vector<std::size_t> last_indices() const { return last_; }

 private:
  void reshuffle();

  const Dataset* ds_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::size_t epoch_ = 0;
  std::size_t cursor_ = 0;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> last_;
};

// Named datasets under a data directory: "mnist", "fashion-mnist" (IDX,
// optionally gzipped) and "cifar10" (binary batches).
struct Split {
  Dataset train;
  Dataset test;
};
Split load_named(const std::string& name, const std::filesystem::path& data_dir);

}  // namespace advreg::data
