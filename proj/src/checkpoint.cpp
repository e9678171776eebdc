#include "advreg/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "advreg/errors.hpp"

namespace advreg::checkpoint {

namespace {

constexpr std::array<char, 4> kMagic{'A', 'R', 'W', 'T'};
constexpr std::uint32_t kGenerator = 0;
constexpr std::uint32_t kCritic = 1;

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  }
  template <typename T>
  void put(T v) {
    v = to_little(v);
    out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void put_matrix(const Matrix& m) {
    for (double v : m.values()) put(v);
  }
  void finish() {
    out_.flush();
    if (!out_) throw IoError("write failed for " + path_.string());
  }
  std::ofstream& stream() { return out_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + path.string());
  }
  template <typename T>
  T get() {
    T v;
    if (!in_.read(reinterpret_cast<char*>(&v), sizeof v))
      throw FormatError(path_.string() + ": truncated checkpoint");
    return to_little(v);
  }
  Matrix get_matrix(std::uint64_t rows, std::uint64_t cols) {
    Matrix m(rows, cols);
    for (double& v : m.values()) v = get<double>();
    return m;
  }
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof())
      throw FormatError(path_.string() + ": trailing bytes after checkpoint payload");
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

void write_header(Writer& w, std::uint32_t kind, std::uint32_t activation,
                  const std::vector<Matrix>& layers, double extra) {
  w.stream().write(kMagic.data(), kMagic.size());
  w.put(kVersion);
  w.put(kind);
  w.put(activation);
  w.put(static_cast<std::uint32_t>(layers.size()));
  w.put(extra);
  for (const auto& m : layers) {
    w.put(static_cast<std::uint64_t>(m.rows()));
    w.put(static_cast<std::uint64_t>(m.cols()));
  }
  for (const auto& m : layers) w.put_matrix(m);
}

struct Header {
  std::uint32_t kind;
  std::uint32_t activation;
  double extra;
  std::vector<Matrix> layers;
};

Header read_header(Reader& r) {
  std::array<char, 4> magic{};
  for (char& c : magic) c = static_cast<char>(r.get<std::uint8_t>());
  if (magic != kMagic) throw FormatError(r.path().string() + ": not a weight checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion)
    throw FormatError(r.path().string() + ": unsupported checkpoint version " + std::to_string(version));
  Header h;
  h.kind = r.get<std::uint32_t>();
  h.activation = r.get<std::uint32_t>();
  const auto depth = r.get<std::uint32_t>();
  h.extra = r.get<double>();
  if (depth == 0 || depth > 64) throw FormatError(r.path().string() + ": implausible layer count");
  std::vector<std::pair<std::uint64_t, std::uint64_t>> shapes(depth);
  for (auto& [rows, cols] : shapes) {
    rows = r.get<std::uint64_t>();
    cols = r.get<std::uint64_t>();
    if (rows == 0 || cols == 0 || rows > (1u << 24) || cols > (1u << 24))
      throw FormatError(r.path().string() + ": implausible layer shape");
  }
  for (const auto& [rows, cols] : shapes) h.layers.push_back(r.get_matrix(rows, cols));
  return h;
}

}  // namespace

void save(const std::filesystem::path& path, const model::ModelParams& p) {
  Writer w(path);
  write_header(w, kGenerator, static_cast<std::uint32_t>(p.activation), p.layers, 0.0);
  w.put_matrix(p.initial_first);
  w.finish();
}

void save(const std::filesystem::path& path, const CriticParams& c) {
  Writer w(path);
  write_header(w, kCritic, 0, c.layers, c.lambda_gp);
  w.finish();
}

model::ModelParams load_model(const std::filesystem::path& path) {
  Reader r(path);
  Header h = read_header(r);
  if (h.kind != kGenerator) throw FormatError(path.string() + ": checkpoint holds a critic");
  if (h.activation > 1) throw FormatError(path.string() + ": unknown activation code");
  model::ModelParams p;
  p.activation = static_cast<model::Activation>(h.activation);
  p.layers = std::move(h.layers);
  for (std::size_t k = 1; k < p.layers.size(); ++k)
    if (p.layers[k].cols() != p.layers[k - 1].rows())
      throw FormatError(path.string() + ": layer shapes do not chain");
  p.initial_first = r.get_matrix(p.layers[0].rows(), p.layers[0].cols());
  r.expect_end();
  return p;
}

CriticParams load_critic(const std::filesystem::path& path) {
  Reader r(path);
  Header h = read_header(r);
  if (h.kind != kCritic) throw FormatError(path.string() + ": checkpoint holds a generator");
  r.expect_end();
  CriticParams c;
  c.lambda_gp = h.extra;
  c.layers = std::move(h.layers);
  if (c.layers.size() > 2 || c.layers.back().rows() != 1)
    throw FormatError(path.string() + ": unsupported critic shape");
  for (const auto& w : c.layers) c.velocity.emplace_back(w.rows(), w.cols());
  return c;
}

}  // namespace advreg::checkpoint
