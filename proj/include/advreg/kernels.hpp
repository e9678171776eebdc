#pragma once

// Data-parallel compute kernels. Every kernel in `advreg::kernels` has a plain
// serial twin in `advreg::kernels::serial`; the serial versions are the
// reference the tests compare against and the baseline of bench/kernels_bench.
//
// Row-parallel kernels keep the per-row arithmetic order of their serial twin,
// so their results are bitwise equal to it for any thread count. The GEMM
// kernels are blocked and only agree with the reference to rounding.

#include <span>

#include "advreg/matrix.hpp"

namespace advreg::kernels {

// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A * B^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// C = A^T * B
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// y = A * x
std::vector<double> matvec(const Matrix& a, std::span<const double> x);
// y = A^T * x
std::vector<double> matvec_t(const Matrix& a, std::span<const double> x);

// D(i,j) = ||x_i - x_j||^2, exactly symmetric with a zero diagonal.
Matrix pairwise_sq_dists(const Matrix& x);

// Exact t-SNE: writes dKL/dY into grad (n x dims) for joint affinities P
// (already exaggerated) and returns the normalizer sum_{k != l} 1/(1+|y_k-y_l|^2).
double tsne_gradient(const Matrix& p, const Matrix& y, Matrix& grad);
// KL(P || Q) for the embedding y.
double tsne_kl(const Matrix& p, const Matrix& y);

// One damped responsibility / availability sweep of affinity propagation.
void ap_update_responsibilities(const Matrix& s, const Matrix& a, Matrix& r, double damping);
void ap_update_availabilities(const Matrix& r, Matrix& a, double damping);

namespace serial {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
std::vector<double> matvec(const Matrix& a, std::span<const double> x);
std::vector<double> matvec_t(const Matrix& a, std::span<const double> x);
Matrix pairwise_sq_dists(const Matrix& x);
double tsne_gradient(const Matrix& p, const Matrix& y, Matrix& grad);
double tsne_kl(const Matrix& p, const Matrix& y);
void ap_update_responsibilities(const Matrix& s, const Matrix& a, Matrix& r, double damping);
void ap_update_availabilities(const Matrix& r, Matrix& a, double damping);
}  // namespace serial

// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads();

}  // namespace advreg::kernels
