#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "elicit/data.hpp"
#include "elicit/linalg.hpp"
#include "elicit/model.hpp"
#include "elicit/rng.hpp"
#include "elicit/seeds.hpp"

namespace elicit {

/// Positive-interaction count per item over `users`.
std::vector<std::size_t> item_popularity(const RatingMatrix& matrix, std::span<const UserIndex> users);

/// Uniform sample without replacement.
SeedItemset select_random(std::size_t m, std::size_t k, Rng& rng);

/// Top-k by popularity over `users`, ties to the lower index.
SeedItemset select_popular(const RatingMatrix& matrix, std::span<const UserIndex> users, std::size_t k);

/// Dense |users| x m 0/1 matrix.
DenseMatrix dense_ratings(const RatingMatrix& matrix, std::span<const UserIndex> users);

/// Rank-k truncated SVD of R[users], then Maxvol on the transposed right factor.
SeedItemset rbmf_select(const RatingMatrix& matrix, std::span<const UserIndex> users, std::size_t k,
                        double delta = 0.01, std::uint64_t seed = 0);

/// Linear reconstruction r_hat = z X.
struct LinearDecoder {
  DenseMatrix x;  // k x m
  SeedItemset seeds;

  std::vector<double> predict(std::span<const float> feedback) const;
};

/// X = ridge_solve(R[users][:, S], R[users], lambda).
LinearDecoder rbmf_decoder(const RatingMatrix& matrix, std::span<const UserIndex> users,
                           const SeedItemset& seeds, double lambda = 1e-6);

/// Fresh decoder trained on hard seed feedback for cfg.epochs, keeping the best
/// validation snapshot. Seeds from select_random / select_popular / rbmf_select
/// give RAN++ / POP++ / RBMF++.
DecoderParams plusplus_decoder(const RatingMatrix& matrix, const SplitSpec& split,
                               const SeedItemset& seeds, const TrainConfig& cfg);

/// Popularity ranking over all items except `excluded`, identical for every user.
std::vector<ItemIndex> mostpop_ranking(std::span<const std::size_t> popularity,
                                       const SeedItemset& excluded, std::size_t n);

}  // namespace elicit
