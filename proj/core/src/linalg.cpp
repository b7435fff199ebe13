#include "elicit/linalg.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace elicit {
namespace {

DenseMatrix orthonormal_basis(const DenseMatrix& y) {
  Eigen::HouseholderQR<DenseMatrix> qr(y);
  return qr.householderQ() * DenseMatrix::Identity(y.rows(), y.cols());
}

SvdResult project_and_truncate(const DenseMatrix& a, const DenseMatrix& q, std::size_t k) {
  const DenseMatrix projected = q.transpose() * a;
  Eigen::JacobiSVD<DenseMatrix> svd(projected, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto rank = static_cast<Eigen::Index>(k);
  SvdResult out;
  out.singular_values = svd.singularValues().head(rank);
  out.left = q * svd.matrixU().leftCols(rank);
  out.right = out.singular_values.asDiagonal() * svd.matrixV().leftCols(rank).transpose();
  out.residual = (a - out.left * out.right).norm();
  return out;
}

}  // namespace

SvdResult truncated_svd(const DenseMatrix& a, std::size_t k, double epsilon, std::uint64_t seed,
                        const SvdOptions& options) {
  const auto n = static_cast<std::size_t>(a.rows());
  const auto m = static_cast<std::size_t>(a.cols());
  if (k == 0 || k > std::min(n, m)) {
    throw Error("truncated_svd: rank " + std::to_string(k) + " outside [1, " +
                std::to_string(std::min(n, m)) + "]");
  }
  if (!a.allFinite()) throw NumericalError("truncated_svd: input has non-finite entries");

  const std::size_t width = std::min(k + options.oversampling, std::min(n, m));
  Rng rng(seed);
  DenseMatrix omega(a.cols(), static_cast<Eigen::Index>(width));
  for (Eigen::Index i = 0; i < omega.rows(); ++i) {
    for (Eigen::Index j = 0; j < omega.cols(); ++j) omega(i, j) = rng.normal();
  }

  DenseMatrix q = orthonormal_basis(a * omega);
  if (options.power_iterations == 0) return project_and_truncate(a, q, k);

  double previous_residual = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < options.power_iterations; ++it) {
    if (it + 1 == options.power_iterations) {
      previous_residual = project_and_truncate(a, q, k).residual;
    }
    const DenseMatrix z = orthonormal_basis(a.transpose() * q);
    q = orthonormal_basis(a * z);
  }
  SvdResult out = project_and_truncate(a, q, k);
  out.converged = (previous_residual - out.residual) <= epsilon * std::max(out.residual, 1e-300);
  return out;
}

MaxvolResult maxvol(const DenseMatrix& b, double delta, std::size_t max_iter) {
  const auto m = static_cast<std::size_t>(b.rows());
  const auto k = static_cast<std::size_t>(b.cols());
  if (k == 0 || m < k) throw Error("maxvol: need an m x k matrix with m >= k >= 1");
  if (!b.allFinite()) throw NumericalError("maxvol: input has non-finite entries");

  // Gaussian elimination with partial pivoting picks the starting rows.
  DenseMatrix work = b;
  const double scale = work.cwiseAbs().maxCoeff();
  std::vector<bool> used(m, false);
  MaxvolResult result;
  result.indices.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t pivot = m;
    double best = -1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (!used[i] && std::abs(work(i, j)) > best) {
        best = std::abs(work(i, j));
        pivot = i;
      }
    }
    if (!(best > 1e-12 * scale)) throw NumericalError("maxvol: matrix is rank deficient");
    used[pivot] = true;
    result.indices.push_back(pivot);
    const auto tail = static_cast<Eigen::Index>(k - j);
    const auto col = static_cast<Eigen::Index>(j);
    for (std::size_t i = 0; i < m; ++i) {
      if (used[i]) continue;
      const double factor = work(i, col) / work(pivot, col);
      work.row(i).tail(tail) -= factor * work.row(pivot).tail(tail);
    }
  }

  const auto submatrix = [&] {
    DenseMatrix s(k, k);
    for (std::size_t r = 0; r < k; ++r) s.row(r) = b.row(result.indices[r]);
    return s;
  };

  bool first = true;
  while (true) {
    Eigen::PartialPivLU<DenseMatrix> lu(submatrix().transpose());
    const double log_det = lu.matrixLU().diagonal().cwiseAbs().array().log().sum();
    result.log_abs_det = log_det;
    if (first) {
      result.initial_log_abs_det = log_det;
      first = false;
    }
    // C = B * B_S^{-1}, via B_S^T C^T = B^T.
    const DenseMatrix coeffs = lu.solve(b.transpose()).transpose();
    Eigen::Index row = 0, col = 0;
    result.max_coefficient = coeffs.cwiseAbs().maxCoeff(&row, &col);
    if (result.max_coefficient <= 1.0 + delta) break;
    if (result.swaps >= max_iter) {
      result.converged = false;
      break;
    }
    result.indices[static_cast<std::size_t>(col)] = static_cast<std::size_t>(row);
    ++result.swaps;
  }
  return result;
}

DenseMatrix ridge_solve(const DenseMatrix& a, const DenseMatrix& b, double lambda) {
  if (a.rows() != b.rows()) throw Error("ridge_solve: row counts differ");
  if (lambda < 0.0) throw Error("ridge_solve: lambda must be non-negative");
  if (!a.allFinite() || !b.allFinite()) throw NumericalError("ridge_solve: non-finite input");
  DenseMatrix normal = a.transpose() * a;
  normal.diagonal().array() += lambda;
  Eigen::LLT<DenseMatrix> llt(normal);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("ridge_solve: normal matrix is not positive definite");
  }
  DenseMatrix x = llt.solve(a.transpose() * b);
  if (!x.allFinite()) throw NumericalError("ridge_solve: solution is not finite");
  return x;
}

}  // namespace elicit
