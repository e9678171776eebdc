#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "advreg/errors.hpp"
#include "advreg/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace advreg::kernels {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using Map = Eigen::Map<RowMajor>;

ConstMap view(const Matrix& m) {
  return ConstMap(m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
}
Map view(Matrix& m) {
  return Map(m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
}

void check_inner(std::size_t a, std::size_t b, const char* op) {
  if (a != b) throw DimensionError(std::string(op) + ": inner dimensions differ");
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Eigen's blocked GEMM runs its own OpenMP team when built with -fopenmp.
Matrix matmul(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.rows(), "matmul");
  Matrix c(a.rows(), b.cols());
  if (a.cols() == 0) return c;
  view(c).noalias() = view(a) * view(b);
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.cols(), "matmul_nt");
  Matrix c(a.rows(), b.rows());
  if (a.cols() == 0) return c;
  view(c).noalias() = view(a) * view(b).transpose();
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  check_inner(a.rows(), b.rows(), "matmul_tn");
  Matrix c(a.cols(), b.cols());
  if (a.rows() == 0) return c;
  view(c).noalias() = view(a).transpose() * view(b);
  return c;
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
  check_inner(a.cols(), x.size(), "matvec");
  std::vector<double> y(a.rows());
  const auto n = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const double* row = a.data() + i * a.cols();
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

std::vector<double> matvec_t(const Matrix& a, std::span<const double> x) {
  check_inner(a.rows(), x.size(), "matvec_t");
  std::vector<double> y(a.cols(), 0.0);
  const auto m = static_cast<std::int64_t>(a.cols());
  // Column-parallel; each output accumulates rows in ascending order as the serial twin does.
#pragma omp parallel for schedule(static)
  for (std::int64_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, j) * x[i];
    y[j] = s;
  }
  return y;
}

Matrix pairwise_sq_dists(const Matrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  Matrix out(n, n);
  const auto nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < nn; ++i) {
    const double* xi = x.data() + i * d;
    for (std::size_t j = static_cast<std::size_t>(i) + 1; j < n; ++j) {
      const double* xj = x.data() + j * d;
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double t = xi[k] - xj[k];
        s += t * t;
      }
      out(i, j) = s;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) out(j, i) = out(i, j);
  return out;
}

double tsne_gradient(const Matrix& p, const Matrix& y, Matrix& grad) {
  const std::size_t n = y.rows(), dims = y.cols();
  grad = Matrix(n, dims);
  Matrix num(n, n);
  const auto nn = static_cast<std::int64_t>(n);
  std::vector<double> row_sums(n, 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < nn; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == static_cast<std::size_t>(i)) continue;
      double d2 = 0.0;
      for (std::size_t k = 0; k < dims; ++k) {
        const double t = y(i, k) - y(j, k);
        d2 += t * t;
      }
      const double q = 1.0 / (1.0 + d2);
      num(i, j) = q;
      s += q;
    }
    row_sums[i] = s;
  }
  double sum_q = 0.0;
  for (double s : row_sums) sum_q += s;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < nn; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == static_cast<std::size_t>(i)) continue;
      const double mult = (p(i, j) - num(i, j) / sum_q) * num(i, j);
      for (std::size_t k = 0; k < dims; ++k) grad(i, k) += 4.0 * mult * (y(i, k) - y(j, k));
    }
  }
  return sum_q;
}

double tsne_kl(const Matrix& p, const Matrix& y) {
  const std::size_t n = y.rows(), dims = y.cols();
  Matrix num(n, n);
  std::vector<double> row_sums(n, 0.0), row_kl(n, 0.0);
  const auto nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < nn; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == static_cast<std::size_t>(i)) continue;
      double d2 = 0.0;
      for (std::size_t k = 0; k < dims; ++k) {
        const double t = y(i, k) - y(j, k);
        d2 += t * t;
      }
      num(i, j) = 1.0 / (1.0 + d2);
      s += num(i, j);
    }
    row_sums[i] = s;
  }
  double sum_q = 0.0;
  for (double s : row_sums) sum_q += s;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < nn; ++i) {
    double c = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == static_cast<std::size_t>(i) || p(i, j) <= 0.0) continue;
      const double q = std::max(num(i, j) / sum_q, std::numeric_limits<double>::min());
      c += p(i, j) * std::log(p(i, j) / q);
    }
    row_kl[i] = c;
  }
  double kl = 0.0;
  for (double c : row_kl) kl += c;
  return kl;
}

void ap_update_responsibilities(const Matrix& s, const Matrix& a, Matrix& r, double damping) {
  const std::size_t n = s.rows();
  const auto nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < nn; ++i) {
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
  const auto nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < nn; ++k) {
    double pos_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (i != static_cast<std::size_t>(k)) pos_sum += std::max(0.0, r(i, k));
    for (std::size_t i = 0; i < n; ++i) {
      double fresh;
      if (i == static_cast<std::size_t>(k)) {
        fresh = pos_sum;
      } else {
        fresh = std::min(0.0, r(k, k) + pos_sum - std::max(0.0, r(i, k)));
      }
      a(i, k) = damping * a(i, k) + (1.0 - damping) * fresh;
    }
  }
}

}  // namespace advreg::kernels
