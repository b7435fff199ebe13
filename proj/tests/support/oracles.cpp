#include "oracles.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numeric>

namespace elicit::testing {

std::vector<double> jacobi_singular_values(const DenseMatrix& a_in) {
  // Work on the orientation with fewer columns.
  DenseMatrix u = a_in.rows() >= a_in.cols() ? a_in : DenseMatrix(a_in.transpose());
  const auto n = u.cols();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (Eigen::Index i = 0; i < u.rows(); ++i) {
          alpha += u(i, p) * u(i, p);
          beta += u(i, q) * u(i, q);
          gamma += u(i, p) * u(i, q);
        }
        if (gamma == 0.0) continue;
        off = std::max(off, std::abs(gamma) / std::sqrt(alpha * beta));
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index i = 0; i < u.rows(); ++i) {
          const double up = u(i, p), uq = u(i, q);
          u(i, p) = c * up - s * uq;
          u(i, q) = s * up + c * uq;
        }
      }
    }
    if (off < 1e-15) break;
  }
  std::vector<double> sv(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < u.rows(); ++i) sum += u(i, j) * u(i, j);
    sv[static_cast<std::size_t>(j)] = std::sqrt(sum);
  }
  std::sort(sv.begin(), sv.end(), std::greater<>());
  return sv;
}

double best_rank_k_error(const DenseMatrix& a, std::size_t k) {
  const auto sv = jacobi_singular_values(a);
  double tail = 0.0;
  for (std::size_t i = k; i < sv.size(); ++i) tail += sv[i] * sv[i];
  return std::sqrt(tail);
}

DenseMatrix qr_ridge(const DenseMatrix& a, const DenseMatrix& b, double lambda) {
  const auto n = a.rows(), k = a.cols();
  Eigen::MatrixXd stacked = Eigen::MatrixXd::Zero(n + k, k);
  stacked.topRows(n) = a;
  stacked.bottomRows(k) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(k, k);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + k, b.cols());
  rhs.topRows(n) = b;
  return Eigen::HouseholderQR<Eigen::MatrixXd>(stacked).solve(rhs);
}

double cofactor_det(const DenseMatrix& a) {
  const auto n = a.rows();
  if (n == 1) return a(0, 0);
  if (n == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  double det = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    DenseMatrix minor(n - 1, n - 1);
    for (Eigen::Index r = 1; r < n; ++r) {
      Eigen::Index c2 = 0;
      for (Eigen::Index c = 0; c < n; ++c) {
        if (c == j) continue;
        minor(r - 1, c2++) = a(r, c);
      }
    }
    det += ((j % 2 == 0) ? 1.0 : -1.0) * a(0, j) * cofactor_det(minor);
  }
  return det;
}

BruteForceVolume brute_force_maxvol(const DenseMatrix& b) {
  const auto m = static_cast<std::size_t>(b.rows());
  const auto k = static_cast<std::size_t>(b.cols());
  std::vector<bool> mask(m, false);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(k), true);
  BruteForceVolume best;
  do {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < m; ++i) {
      if (mask[i]) rows.push_back(i);
    }
    DenseMatrix sub(k, k);
    for (std::size_t r = 0; r < k; ++r) sub.row(static_cast<Eigen::Index>(r)) = b.row(static_cast<Eigen::Index>(rows[r]));
    const double d = std::abs(cofactor_det(sub));
    if (d > best.abs_det) best = {rows, d};
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return best;
}

std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double h) {
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double chi_square_sf(double statistic, double dof) {
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), statistic));
}

}  // namespace elicit::testing
