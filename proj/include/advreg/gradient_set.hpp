#pragma once

#include <cmath>
#include <vector>

#include "advreg/matrix.hpp"

namespace advreg {

// One matrix per layer, shape-congruent with the parameter list it belongs to.
struct GradientSet {
  std::vector<Matrix> layers;

  static GradientSet zeros_like(const std::vector<Matrix>& shapes) {
    GradientSet g;
    for (const auto& m : shapes) g.layers.emplace_back(m.rows(), m.cols());
    return g;
  }

  // Joint squared Euclidean norm over every layer.
  double squared_norm() const {
    double s = 0.0;
    for (const auto& m : layers)
      for (double v : m.values()) s += v * v;
    return s;
  }
  double norm() const { return std::sqrt(squared_norm()); }

  bool all_finite() const {
    for (const auto& m : layers)
      if (!m.all_finite()) return false;
    return true;
  }

  GradientSet& operator+=(const GradientSet& o) {
    for (std::size_t k = 0; k < layers.size(); ++k) layers[k] += o.layers[k];
    return *this;
  }
  GradientSet& operator*=(double s) {
    for (auto& m : layers) m *= s;
    return *this;
  }
  // this += s * o
  void add_scaled(const GradientSet& o, double s) {
    for (std::size_t k = 0; k < layers.size(); ++k) {
      auto dst = layers[k].values();
      auto src = o.layers[k].values();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s * src[i];
    }
  }

  friend bool operator==(const GradientSet&, const GradientSet&) = default;
};

inline double dot(const GradientSet& a, const GradientSet& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.layers.size(); ++k) {
    auto x = a.layers[k].values();
    auto y = b.layers[k].values();
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  }
  return s;
}

}  // namespace advreg
