#include "advreg/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

#include "advreg/errors.hpp"

namespace advreg::data {

namespace {

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (raw.size() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b) {
    gzFile gz = gzopen(path.string().c_str(), "rb");
    if (!gz) throw IoError("cannot inflate " + path.string());
    std::vector<unsigned char> out;
    unsigned char buf[1 << 16];
    int got;
    while ((got = gzread(gz, buf, sizeof buf)) > 0) out.insert(out.end(), buf, buf + got);
    const bool bad = got < 0;
    gzclose(gz);
    if (bad) throw FormatError(path.string() + ": corrupt gzip stream");
    return out;
  }
  return raw;
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off) {
  return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
         (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

std::vector<int> Dataset::labels() const {
  std::vector<int> out(samples());
  for (std::size_t i = 0; i < samples(); ++i) {
    auto r = targets.row(i);
    out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

void validate(const Dataset& ds) {
  if (ds.inputs.rows() != ds.targets.rows()) throw ConsistencyError(ds.name + ": input/target count mismatch");
  if (ds.samples() == 0) throw ConsistencyError(ds.name + ": empty dataset");
  if (!ds.inputs.all_finite()) throw ConsistencyError(ds.name + ": non-finite input");
  for (std::size_t i = 0; i < ds.samples(); ++i) {
    int ones = 0;
    double sum = 0.0;
    for (double v : ds.targets.row(i)) {
      if (v != 0.0) ++ones;
      sum += v;
    }
    if (ones != 1 || sum != 1.0) throw ConsistencyError(ds.name + ": target row is not one-hot");
  }
}

Matrix one_hot(const std::vector<int>& labels, std::size_t classes) {
  Matrix t(labels.size(), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes)
      throw FormatError("label " + std::to_string(labels[i]) + " outside [0, " + std::to_string(classes) + ")");
    t(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return t;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t classes) {
  const auto img = read_bytes(images);
  const auto lab = read_bytes(labels);
  if (img.size() < 16 || be32(img, 0) != 0x00000803)
    throw FormatError(images.string() + ": bad IDX image magic");
  if (lab.size() < 8 || be32(lab, 0) != 0x00000801)
    throw FormatError(labels.string() + ": bad IDX label magic");
  const std::size_t n = be32(img, 4), rows = be32(img, 8), cols = be32(img, 12);
  const std::size_t nl = be32(lab, 4);
  if (n != nl)
    throw ConsistencyError(images.string() + " has " + std::to_string(n) + " images but " +
                           labels.string() + " has " + std::to_string(nl) + " labels");
  const std::size_t d = rows * cols;
  if (img.size() != 16 + n * d) throw FormatError(images.string() + ": payload length mismatch");
  if (lab.size() != 8 + n) throw FormatError(labels.string() + ": payload length mismatch");

  Dataset ds;
  ds.name = images.filename().string();
  ds.inputs = Matrix(n, d);
  auto vals = ds.inputs.values();
  for (std::size_t i = 0; i < n * d; ++i) vals[i] = img[16 + i] / 255.0;
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = lab[8 + i];
  ds.targets = one_hot(y, classes);
  return ds;
}

void write_idx(const Dataset& ds, const std::filesystem::path& images,
               const std::filesystem::path& labels, std::uint32_t rows, std::uint32_t cols) {
  if (static_cast<std::size_t>(rows) * cols != ds.input_dim())
    throw DimensionError("write_idx: geometry does not match input dimension");
  std::ofstream img(images, std::ios::binary), lab(labels, std::ios::binary);
  if (!img || !lab) throw IoError("write_idx: cannot open output files");
  put_be32(img, 0x00000803);
  put_be32(img, static_cast<std::uint32_t>(ds.samples()));
  put_be32(img, rows);
  put_be32(img, cols);
  std::vector<char> bytes(ds.inputs.size());
  auto v = ds.inputs.values();
  for (std::size_t i = 0; i < bytes.size(); ++i)
    bytes[i] = static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v[i], 0.0, 1.0) * 255.0)));
  img.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  put_be32(lab, 0x00000801);
  put_be32(lab, static_cast<std::uint32_t>(ds.samples()));
  for (int y : ds.labels()) lab.put(static_cast<char>(y));
}

Dataset load_cifar10(const std::vector<std::filesystem::path>& batches) {
  constexpr std::size_t kRecord = 3073, kPixels = 3072;
  std::vector<double> pixels;
  std::vector<int> y;
  for (const auto& path : batches) {
    const auto b = read_bytes(path);
    if (b.size() % kRecord != 0)
      throw FormatError(path.string() + ": length " + std::to_string(b.size()) +
                        " is not a multiple of 3073");
    for (std::size_t off = 0; off < b.size(); off += kRecord) {
      y.push_back(b[off]);
      for (std::size_t j = 1; j <= kPixels; ++j) pixels.push_back(b[off + j] / 255.0);
    }
  }
  Dataset ds;
  ds.name = "cifar10";
  ds.inputs = Matrix(y.size(), kPixels, std::move(pixels));
  ds.targets = one_hot(y, 10);
  return ds;
}

Dataset head(const Dataset& ds, std::size_t count) {
  if (count == 0 || count >= ds.samples()) return ds;
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), 0);
  Dataset out;
  out.name = ds.name;
  out.inputs = gather_rows(ds.inputs, idx);
  out.targets = gather_rows(ds.targets, idx);
  return out;
}

Dataset randomize_labels(const Dataset& ds, std::uint64_t seed) {
  Rng rng = make_rng(seed, "labels");
  const double classes = static_cast<double>(ds.output_dim());
  std::vector<int> y(ds.samples());
  for (int& v : y) v = static_cast<int>(uniform01(rng) * classes);
  Dataset out;
  out.name = ds.name + "-random-labels";
  out.inputs = ds.inputs;
  out.targets = one_hot(y, ds.output_dim());
  return out;
}

BatchStream::BatchStream(const Dataset& ds, std::size_t batch_size, std::uint64_t seed)
    : ds_(&ds), batch_size_(batch_size), seed_(seed) {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  order_.resize(ds.samples());
  reshuffle();
}

void BatchStream::reshuffle() {
  std::iota(order_.begin(), order_.end(), 0);
  Rng rng = make_rng(seed_, "data", epoch_);
  // Fisher-Yates with our own uniform draw keeps the permutation independent of
  // the standard library's shuffle implementation.
  for (std::size_t i = order_.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(order_[i - 1], order_[std::min(j, i - 1)]);
  }
  cursor_ = 0;
}

std::size_t BatchStream::batches_per_epoch() const {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

std::pair<Matrix, Matrix> BatchStream::next_batch() {
  if (epoch_done()) {
    ++epoch_;
    reshuffle();
  }
  const std::size_t end = std::min(order_.size(), cursor_ + batch_size_);
  last_.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
               order_.begin() + static_cast<std::ptrdiff_t>(end));
  cursor_ = end;
  return {gather_rows(ds_->inputs, last_), gather_rows(ds_->targets, last_)};
}

Split load_named(const std::string& name, const std::filesystem::path& data_dir) {
  auto pick = [&](const std::filesystem::path& dir, const std::string& stem) {
    auto gz = dir / (stem + ".gz");
    if (std::filesystem::exists(gz)) return gz;
    return dir / stem;
  };
  if (name == "mnist" || name == "fashion-mnist") {
    const auto dir = data_dir / name;
    Split s;
    s.train = load_idx(pick(dir, "train-images-idx3-ubyte"), pick(dir, "train-labels-idx1-ubyte"));
    s.test = load_idx(pick(dir, "t10k-images-idx3-ubyte"), pick(dir, "t10k-labels-idx1-ubyte"));
    s.train.name = name;
    s.test.name = name + "-test";
    return s;
  }
  if (name == "cifar10") {
    const auto dir = data_dir / "cifar10";
    std::vector<std::filesystem::path> train;
    for (int i = 1; i <= 5; ++i) train.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
    Split s;
    s.train = load_cifar10(train);
    s.test = load_cifar10({dir / "test_batch.bin"});
    s.test.name = "cifar10-test";
    return s;
  }
  throw ConfigError("unknown dataset '" + name + "'");
}

}  // namespace advreg::data
