#include "advreg/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "advreg/errors.hpp"
#include "advreg/kernels.hpp"

namespace advreg::linalg {

namespace {

void require_finite(const Matrix& m, const char* op) {
  if (m.empty()) throw InvalidInputError(std::string(op) + ": empty matrix");
  if (!m.all_finite()) throw InvalidInputError(std::string(op) + ": non-finite entry");
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

SpectralNorm spectral_norm(const Matrix& m, double tol, std::size_t max_iter) {
  require_finite(m, "spectral_norm");
  if (!(tol > 0.0)) throw InvalidInputError("spectral_norm: tol must be positive");

  std::vector<double> v(m.cols(), 1.0 / std::sqrt(static_cast<double>(m.cols())));
  SpectralNorm out;
  double prev = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    auto w = kernels::matvec(m, v);
    const double est = norm2(w);
    auto z = kernels::matvec_t(m, w);
    const double zn = norm2(z);
    out.iterations = it + 1;
    if (zn == 0.0) {
      if (it == 0 && frobenius_norm(m) > 0.0) {
        // All-ones start is orthogonal to the row space; restart on the heaviest column.
        std::size_t best = 0;
        double best_norm = -1.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
          double s = 0.0;
          for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, j) * m(i, j);
          if (s > best_norm) best_norm = s, best = j;
        }
        std::fill(v.begin(), v.end(), 0.0);
        v[best] = 1.0;
        continue;
      }
      out.value = est;
      out.converged = true;
      return out;
    }
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = z[j] / zn;
    out.value = std::max(out.value, est);
    if (it > 0 && std::abs(est - prev) <= tol * est) {
      out.converged = true;
      return out;
    }
    prev = est;
  }
  return out;
}

double frobenius_norm(const Matrix& m) {
  require_finite(m, "frobenius_norm");
  double s = 0.0;
  for (double x : m.values()) s += x * x;
  return std::sqrt(s);
}

SymmetricEigen jacobi_eigen(const Matrix& sym, double tol, std::size_t max_sweeps) {
  require_finite(sym, "jacobi_eigen");
  if (sym.rows() != sym.cols()) throw DimensionError("jacobi_eigen: matrix not square");
  const std::size_t n = sym.rows();
  Matrix a = sym;
  Matrix v(n, n);
  const double total = frobenius_norm(a);
  SymmetricEigen out;

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  // a stays symmetric, so each rotation rewrites rows p and q and mirrors
  // them into the columns. vt holds the eigenvectors as rows.
  Matrix vt = Matrix::identity(n);
  while (out.sweeps < max_sweeps && off_norm() > tol * total) {
    ++out.sweeps;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        double* rp = &a(p, 0);
        double* rq = &a(q, 0);
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double apk = rp[k], aqk = rq[k];
          rp[k] = c * apk - s * aqk;
          rq[k] = s * apk + c * aqk;
          a(k, p) = rp[k];
          a(k, q) = rq[k];
        }
        rp[p] -= t * apq;
        rq[q] += t * apq;
        rp[q] = 0.0;
        rq[p] = 0.0;
        double* vp = &vt(p, 0);
        double* vq = &vt(q, 0);
        for (std::size_t k = 0; k < n; ++k) {
          const double x = vp[k], y = vq[k];
          vp[k] = c * x - s * y;
          vq[k] = s * x + c * y;
        }
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) v(j, i) = vt(i, j);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = v(k, order[j]);
  }
  return out;
}

PcaProjection pca_project(const Matrix& points, std::size_t k) {
  require_finite(points, "pca_project");
  const std::size_t n = points.rows(), d = points.cols();
  if (n < 2) throw InvalidInputError("pca_project: need at least two points");
  if (k > std::min(n, d)) throw InvalidInputError("pca_project: k exceeds min(n, d)");

  PcaProjection out;
  out.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out.mean[j] += points(i, j);
  for (double& m : out.mean) m /= static_cast<double>(n);

  Matrix centred = points;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) centred(i, j) -= out.mean[j];

  // Principal directions come from the smaller of the d x d covariance and
  // the n x n Gram matrix; both share their nonzero eigenvalues.
  const bool dual = n < d;
  const std::size_t m = dual ? n : d;
  Matrix sym = dual ? kernels::matmul_nt(centred, centred) : kernels::matmul_tn(centred, centred);
  sym *= 1.0 / static_cast<double>(n - 1);
  // Symmetrize exactly; GEMM may differ in the last bit across the diagonal.
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) sym(j, i) = sym(i, j);

  const auto eig = jacobi_eigen(sym);
  const double top = eig.values.empty() ? 0.0 : std::max(0.0, eig.values.front());
  const double rank_floor = 1e-12 * std::max(top, 1e-300);

  out.components = Matrix(k, d);
  out.variances.assign(k, 0.0);
  std::vector<double> dir(d);
  for (std::size_t c = 0; c < k; ++c) {
    if (eig.values[c] <= rank_floor) {
      ++out.padded_components;
      continue;
    }
    out.variances[c] = eig.values[c];
    if (dual) {
      // Covariance eigenvector: centred^T u, normalised.
      std::fill(dir.begin(), dir.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) dir[j] += centred(i, j) * eig.vectors(i, c);
      double norm = 0.0;
      for (double x : dir) norm += x * x;
      norm = std::sqrt(norm);
      for (double& x : dir) x /= norm;
    } else {
      for (std::size_t j = 0; j < d; ++j) dir[j] = eig.vectors(j, c);
    }
    std::size_t arg = 0;
    for (std::size_t j = 1; j < d; ++j)
      if (std::abs(dir[j]) > std::abs(dir[arg])) arg = j;
    const double sign = dir[arg] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < d; ++j) out.components(c, j) = sign * dir[j];
  }
  out.projected = kernels::matmul_nt(centred, out.components);
  return out;
}

}  // namespace advreg::linalg
