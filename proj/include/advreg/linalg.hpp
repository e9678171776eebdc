#pragma once

#include <cstddef>
#include <vector>

#include "advreg/matrix.hpp"

namespace advreg::linalg {

struct SpectralNorm {
  double value = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

inline constexpr double kSpectralTol = 1e-6;
inline constexpr std::size_t kSpectralMaxIter = 1000;

// Largest singular value by power iteration on M^T M from the normalized
// all-ones vector. Stops once the estimate changes by less than tol relative.
// Throws InvalidInputError on empty or non-finite input. When max_iter runs
// out the best estimate is returned with converged == false.
SpectralNorm spectral_norm(const Matrix& m, double tol = kSpectralTol,
                           std::size_t max_iter = kSpectralMaxIter);

double frobenius_norm(const Matrix& m);

struct SymmetricEigen {
  std::vector<double> values;  // descending
  Matrix vectors;              // column j pairs with values[j]
  std::size_t sweeps = 0;
};

// Cyclic Jacobi rotations until the off-diagonal Frobenius mass falls below
// tol times the matrix Frobenius norm.
SymmetricEigen jacobi_eigen(const Matrix& sym, double tol = 1e-10, std::size_t max_sweeps = 100);

struct PcaProjection {
  Matrix projected;                 // n x k
  Matrix components;                // k x d, unit rows (zero rows when padded)
  std::vector<double> variances;    // eigenvalues of the sample covariance, length k
  std::vector<double> mean;         // length d
  std::size_t padded_components = 0;  // trailing components beyond the data rank
};

// Mean-centred projection onto the top-k principal directions. Each
// component is oriented so that its entry of largest magnitude is positive.
PcaProjection pca_project(const Matrix& points, std::size_t k);

}  // namespace advreg::linalg
