#include <algorithm>
#include <cmath>
#include <limits>

#include "advreg/errors.hpp"
#include "advreg/kernels.hpp"

namespace advreg::kernels::serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw DimensionError("matmul_nt: inner dimensions differ");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      c(i, j) = s;
    }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw DimensionError("matmul_tn: inner dimensions differ");
  Matrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k)
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aki * b(k, j);
    }
  return c;
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw DimensionError("matvec: inner dimensions differ");
  std::vector<double> y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

std::vector<double> matvec_t(const Matrix& a, std::span<const double> x) {
  if (a.rows() != x.size()) throw DimensionError("matvec_t: inner dimensions differ");
  std::vector<double> y(a.cols(), 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, j) * x[i];
    y[j] = s;
  }
  return y;
}

Matrix pairwise_sq_dists(const Matrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double t = x(i, k) - x(j, k);
        s += t * t;
      }
      out(i, j) = s;
      out(j, i) = s;
    }
  return out;
}

double tsne_gradient(const Matrix& p, const Matrix& y, Matrix& grad) {
  const std::size_t n = y.rows(), dims = y.cols();
  grad = Matrix(n, dims);
  Matrix num(n, n);
  std::vector<double> row_sums(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double d2 = 0.0;
      for (std::size_t k = 0; k < dims; ++k) {
        const double t = y(i, k) - y(j, k);
        d2 += t * t;
      }
      num(i, j) = 1.0 / (1.0 + d2);
      row_sums[i] += num(i, j);
    }
  double sum_q = 0.0;
  for (double s : row_sums) sum_q += s;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double mult = (p(i, j) - num(i, j) / sum_q) * num(i, j);
      for (std::size_t k = 0; k < dims; ++k) grad(i, k) += 4.0 * mult * (y(i, k) - y(j, k));
    }
  return sum_q;
}

double tsne_kl(const Matrix& p, const Matrix& y) {
  const std::size_t n = y.rows(), dims = y.cols();
  Matrix num(n, n);
  std::vector<double> row_sums(n, 0.0), row_kl(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double d2 = 0.0;
      for (std::size_t k = 0; k < dims; ++k) {
        const double t = y(i, k) - y(j, k);
        d2 += t * t;
      }
      num(i, j) = 1.0 / (1.0 + d2);
      row_sums[i] += num(i, j);
    }
  double sum_q = 0.0;
  for (double s : row_sums) sum_q += s;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || p(i, j) <= 0.0) continue;
      const double q = std::max(num(i, j) / sum_q, std::numeric_limits<double>::min());
      row_kl[i] += p(i, j) * std::log(p(i, j) / q);
    }
  double kl = 0.0;
  for (double c : row_kl) kl += c;
  return kl;
}

void ap_update_responsibilities(const Matrix& s, const Matrix& a, Matrix& r, double damping) {
  const std::size_t n = s.rows();
  for (std::size_t i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    double second = best;
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const double v = a(i, k) + s(i, k);
      if (v > best) {
        second = best;
        best = v;
        best_k = k;
      } else if (v > second) {
        second = v;
      }
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double fresh = s(i, k) - (k == best_k ? second : best);
      r(i, k) = damping * r(i, k) + (1.0 - damping) * fresh;
    }
  }
}

void ap_update_availabilities(const Matrix& r, Matrix& a, double damping) {
  const std::size_t n = r.rows();
  for (std::size_t k = 0; k < n; ++k) {
    double pos_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (i != k) pos_sum += std::max(0.0, r(i, k));
    for (std::size_t i = 0; i < n; ++i) {
      const double fresh =
          i == k ? pos_sum : std::min(0.0, r(k, k) + pos_sum - std::max(0.0, r(i, k)));
      a(i, k) = damping * a(i, k) + (1.0 - damping) * fresh;
    }
  }
}

}  // namespace advreg::kernels::serial
