#include <doctest.h>

#include <cmath>

#include "elicit/linalg.hpp"
#include "oracles.hpp"

using namespace elicit;
using elicit::testing::brute_force_maxvol;

namespace {

DenseMatrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = rng.normal();
  return a;
}

double max_rel(const DenseMatrix& a, const DenseMatrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1e-300, b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("svd of a diagonal matrix") {
  DenseMatrix a = DenseMatrix::Zero(3, 3);
  a(0, 0) = 3;
  a(1, 1) = 2;
  a(2, 2) = 1;
  const auto r = truncated_svd(a, 2, 1e-6, 1);
  CHECK(r.right.row(0).norm() == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(r.right.row(1).norm() == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(r.residual == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.singular_values(0) == doctest::Approx(3.0));
}

TEST_CASE("svd recovers a rank-one matrix") {
  const DenseMatrix a = gaussian(30, 1, 2) * gaussian(1, 20, 3);
  for (std::size_t k : {1u, 3u}) {
    const auto r = truncated_svd(a, k, 1e-6, 4);
    CHECK((a - r.left * r.right).norm() <= 1e-8);
  }
}

TEST_CASE("svd residual is near optimal against a Jacobi oracle") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto a = gaussian(50, 40, seed);
    const double eps = 0.05;
    const auto r = truncated_svd(a, 10, eps, seed);
    const double best = elicit::testing::best_rank_k_error(a, 10);
    CHECK(r.residual <= (1 + eps) * best);
    CHECK(r.residual == doctest::Approx((a - r.left * r.right).norm()));
    const DenseMatrix gram = r.left.transpose() * r.left;
    CHECK((gram - DenseMatrix::Identity(10, 10)).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((r.right - r.left.transpose() * a).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("svd oracle agrees with Eigen on the spectrum") {
  const auto a = gaussian(12, 7, 9);
  const auto sv = elicit::testing::jacobi_singular_values(a);
  const Eigen::JacobiSVD<Eigen::MatrixXd> ref(a);
  for (std::size_t i = 0; i < sv.size(); ++i) CHECK(sv[i] == doctest::Approx(ref.singularValues()(static_cast<Eigen::Index>(i))).epsilon(1e-10));
}

TEST_CASE("svd residual does not grow with more power iterations") {
  const auto a = gaussian(60, 45, 21);
  double prev = INFINITY;
  for (std::size_t q = 0; q <= 4; ++q) {
    const auto r = truncated_svd(a, 8, 1e-6, 5, {10, q});
    CHECK(r.residual <= prev * (1 + 1e-12));
    prev = r.residual;
  }
}

TEST_CASE("svd is deterministic and validates k") {
  const auto a = gaussian(20, 15, 1);
  const auto x = truncated_svd(a, 4, 1e-6, 99);
  const auto y = truncated_svd(a, 4, 1e-6, 99);
  CHECK(x.left == y.left);
  CHECK(x.right == y.right);
  CHECK_THROWS_AS(truncated_svd(a, 0, 1e-6, 1), Error);
  CHECK_THROWS_AS(truncated_svd(a, 16, 1e-6, 1), Error);
}

TEST_CASE("maxvol on the hand example") {
  DenseMatrix b(4, 2);
  b << 10, 0, 0, 10, 1, 1, 0.5, 0.5;
  const auto r = maxvol(b);
  std::vector<std::size_t> got = r.indices;
  std::sort(got.begin(), got.end());
  CHECK(got == std::vector<std::size_t>{0, 1});
  CHECK(brute_force_maxvol(b).rows == std::vector<std::size_t>{0, 1});
}

TEST_CASE("maxvol on a square matrix takes every row") {
  const auto b = gaussian(4, 4, 3);
  const auto r = maxvol(b);
  std::vector<std::size_t> got = r.indices;
  std::sort(got.begin(), got.end());
  CHECK(got == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(r.swaps == 0);
}

TEST_CASE("maxvol dominance, monotone volume, near-maximal determinant") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto b = gaussian(12, 3, 100 + seed);
    const auto r = maxvol(b, 0.01);
    CHECK(r.converged);
    CHECK(r.log_abs_det >= r.initial_log_abs_det - 1e-12);
    DenseMatrix sub(3, 3);
    for (int i = 0; i < 3; ++i) sub.row(i) = b.row(static_cast<Eigen::Index>(r.indices[static_cast<std::size_t>(i)]));
    const DenseMatrix c = b * sub.inverse();
    CHECK(c.cwiseAbs().maxCoeff() <= 1.01 + 1e-9);
    const double det = std::abs(sub.determinant());
    CHECK(std::log(det) == doctest::Approx(r.log_abs_det).epsilon(1e-9));
    // Hadamard bound for a (1+delta)-dominant submatrix.
    const double bound = std::pow(std::sqrt(3.0) * 1.01, 3.0);
    CHECK(det * bound >= brute_force_maxvol(b).abs_det);
  }
}

TEST_CASE("maxvol usually lands near the global maximum") {
  int near = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto b = gaussian(12, 3, 5000 + seed);
    const auto r = maxvol(b, 0.01);
    if (std::exp(r.log_abs_det) >= 0.9 * brute_force_maxvol(b).abs_det) ++near;
  }
  CHECK(near >= 180);
}

TEST_CASE("maxvol rejects rank-deficient input") {
  DenseMatrix b(5, 2);
  b << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10;
  CHECK_THROWS_AS(maxvol(b), NumericalError);
  CHECK_THROWS_AS(maxvol(gaussian(2, 3, 1)), Error);
}

TEST_CASE("ridge with identity design returns B") {
  const auto b = gaussian(5, 3, 2);
  const auto x = ridge_solve(DenseMatrix::Identity(5, 5), b, 1e-14);
  CHECK(max_rel(x, b) < 1e-12);
}

TEST_CASE("ridge with orthonormal columns and no regularization") {
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(10, 4, 3));
  const DenseMatrix q = qr.householderQ() * Eigen::MatrixXd::Identity(10, 4);
  const auto b = gaussian(10, 6, 4);
  const auto x = ridge_solve(q, b, 0.0);
  CHECK(max_rel(x, q.transpose() * b) < 1e-12);
}

TEST_CASE("ridge matches the QR oracle and satisfies the normal equations") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto a = gaussian(20, 5, seed);
    const auto b = gaussian(20, 7, 50 + seed);
    const auto x = ridge_solve(a, b, 1e-6);
    CHECK(max_rel(x, elicit::testing::qr_ridge(a, b, 1e-6)) <= 1e-6);
    const DenseMatrix atb = a.transpose() * b;
    const DenseMatrix res = atb - (a.transpose() * a + 1e-6 * DenseMatrix::Identity(5, 5)) * x;
    CHECK(res.norm() <= 1e-8 * atb.norm());
  }
}

TEST_CASE("ridge reports a singular normal matrix") {
  DenseMatrix a = DenseMatrix::Zero(4, 2);
  a.col(0).setOnes();
  CHECK_THROWS_AS(ridge_solve(a, gaussian(4, 2, 1), 0.0), NumericalError);
}

TEST_CASE("gumbel transform and sample mean") {
  CHECK(gumbel_from_uniform(std::exp(-1.0)) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(std::isfinite(gumbel_from_uniform(0.0)));
  CHECK(std::isfinite(gumbel_from_uniform(1.0)));
  Rng rng(2024);
  const auto g = gumbel_noise<double>(1000, 1000, rng);
  CHECK(std::abs(g.mean() - 0.5772156649) <= 0.01);
  Rng a(3), b(3);
  CHECK(gumbel_noise<double>(4, 5, a) == gumbel_noise<double>(4, 5, b));
}

TEST_CASE("softmax examples") {
  DenseMatrix m(3, 3);
  m << 0, 0, 0, 5, 0, 0, 1, 2, 3;
  const auto half = softmax_rows<double>(m.topLeftCorner(1, 2), 1.0);
  CHECK(half(0, 0) == 0.5);
  CHECK(half(0, 1) == 0.5);
  const auto sharp = softmax_rows<double>(m.block(1, 0, 1, 2), 0.01);
  CHECK(std::abs(sharp(0, 0) - 1.0) <= 1e-9);
  CHECK(sharp(0, 1) <= 1e-9);
  const auto s = softmax_rows<double>(m.bottomRows(1), 1.0);
  CHECK(s(0, 0) == doctest::Approx(0.09003057317038046).epsilon(1e-12));
  CHECK(s(0, 1) == doctest::Approx(0.24472847105479767).epsilon(1e-12));
  CHECK(s(0, 2) == doctest::Approx(0.6652409557748219).epsilon(1e-12));
  CHECK_THROWS_AS(softmax_rows<double>(m, 0.0), Error);
  CHECK_THROWS_AS(softmax_rows<double>(m, -1.0), Error);
}

TEST_CASE("softmax rows sum to one and ignore per-row shifts") {
  const DenseMatrix m = gaussian(6, 9, 7) * 30.0;
  for (const double tau : {0.01, 0.1, 1.0, 10.0}) {
    const auto s = softmax_rows<double>(m, tau);
    for (Eigen::Index i = 0; i < s.rows(); ++i) CHECK(std::abs(s.row(i).sum() - 1.0) <= 1e-9);
    DenseMatrix shifted = m;
    for (Eigen::Index i = 0; i < m.rows(); ++i) shifted.row(i).array() += 100.0 * static_cast<double>(i) - 7.0;
    CHECK((softmax_rows<double>(shifted, tau) - s).cwiseAbs().maxCoeff() <= 1e-12);
  }
}
