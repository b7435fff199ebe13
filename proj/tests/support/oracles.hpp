#pragma once

// Independent reference implementations. None of these share code with the
// library routines they check.

#include <cstddef>
#include <functional>
#include <vector>

#include "elicit/linalg.hpp"

namespace elicit::testing {

// Singular values (descending) by one-sided Jacobi rotations.
std::vector<double> jacobi_singular_values(const DenseMatrix& a);

// Best rank-k Frobenius error from the full singular spectrum.
double best_rank_k_error(const DenseMatrix& a, std::size_t k);

// Ridge solution via Householder QR of the stacked system [A; sqrt(lambda) I] X = [B; 0].
DenseMatrix qr_ridge(const DenseMatrix& a, const DenseMatrix& b, double lambda);

// Determinant by cofactor expansion (small matrices only).
double cofactor_det(const DenseMatrix& a);

struct BruteForceVolume {
  std::vector<std::size_t> rows;
  double abs_det = 0.0;
};

// max |det B_S| over all k-subsets of rows of the m x k matrix B.
BruteForceVolume brute_force_maxvol(const DenseMatrix& b);

// Central differences of f at x, one coordinate at a time.
std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x, double h);

// Upper tail of the chi-square distribution.
double chi_square_sf(double statistic, double dof);

}  // namespace elicit::testing
