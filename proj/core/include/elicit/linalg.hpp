#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "elicit/error.hpp"
#include "elicit/rng.hpp"

namespace elicit {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;

using DenseMatrix = Matrix<double>;

struct SvdOptions {
  std::size_t oversampling = 10;
  std::size_t power_iterations = 4;
};

/// Rank-k factorization A ~= left * right. `left` has orthonormal columns and the
/// singular values are folded into `right`, so right = left^T A.
struct SvdResult {
  DenseMatrix left;   // n x k
  DenseMatrix right;  // k x m
  Eigen::VectorXd singular_values;
  double residual = 0.0;   // ||A - left * right||_F
  bool converged = true;   // last power iteration changed the residual by <= epsilon (relative)
};

/// Randomized subspace iteration. Deterministic given `seed`.
SvdResult truncated_svd(const DenseMatrix& a, std::size_t k, double epsilon, std::uint64_t seed,
                        const SvdOptions& options = {});

struct MaxvolResult {
  std::vector<std::size_t> indices;  // row of B chosen for each column position
  std::size_t swaps = 0;
  bool converged = true;             // dominance reached before max_iter
  double max_coefficient = 0.0;      // max |B * B_S^{-1}| at exit
  double log_abs_det = 0.0;          // log |det B_S| at exit
  double initial_log_abs_det = 0.0;  // log |det B_S| after pivoted initialization
};

/// Selects k rows of an m x k matrix whose square submatrix is dominant:
/// every row of B is a combination of the selected rows with coefficients
/// bounded by 1 + delta. Throws NumericalError if B has rank < k.
MaxvolResult maxvol(const DenseMatrix& b, double delta = 0.01, std::size_t max_iter = 200);

/// X = (A^T A + lambda I)^{-1} A^T B.
DenseMatrix ridge_solve(const DenseMatrix& a, const DenseMatrix& b, double lambda = 1e-6);

inline constexpr double kGumbelClamp = 1e-12;

/// -log(-log(u)) with u clamped to [eps, 1 - eps].
inline double gumbel_from_uniform(double u) {
  u = std::clamp(u, kGumbelClamp, 1.0 - kGumbelClamp);
  return -std::log(-std::log(u));
}

template <typename T>
Matrix<T> gumbel_noise(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix<T> g(rows, cols);
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = static_cast<T>(gumbel_from_uniform(rng.uniform()));
  }
  return g;
}

/// Row-wise softmax of M / tau with max subtraction.
template <typename T>
Matrix<T> softmax_rows(const Matrix<T>& m, T tau) {
  if (!(tau > T(0))) throw Error("softmax temperature must be positive");
  Matrix<T> out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const T peak = m.row(i).maxCoeff();
    out.row(i) = ((m.row(i).array() - peak) / tau).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

}  // namespace elicit
