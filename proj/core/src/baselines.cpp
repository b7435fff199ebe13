#include "elicit/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "elicit/error.hpp"
#include "elicit/eval.hpp"

namespace elicit {

std::vector<std::size_t> item_popularity(const RatingMatrix& matrix, std::span<const UserIndex> users) {
  std::vector<std::size_t> counts(matrix.num_items(), 0);
  for (const auto u : users) {
    for (const auto item : matrix.row(u)) ++counts[item];
  }
  return counts;
}

SeedItemset select_random(std::size_t m, std::size_t k, Rng& rng) {
  if (k > m) throw Error("cannot select " + std::to_string(k) + " of " + std::to_string(m) + " items");
  std::vector<ItemIndex> items(m);
  std::iota(items.begin(), items.end(), ItemIndex{0});
  // Partial Fisher-Yates: the first k slots are a uniform sample.
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(m - i));
    std::swap(items[i], items[j]);
  }
  items.resize(k);
  return {std::move(items)};
}

SeedItemset select_popular(const RatingMatrix& matrix, std::span<const UserIndex> users, std::size_t k) {
  const auto counts = item_popularity(matrix, users);
  if (k > counts.size()) throw Error("k exceeds the number of items");
  std::vector<double> scores(counts.begin(), counts.end());
  return {top_n(std::span<const double>(scores), SeedItemset{}, k)};
}

DenseMatrix dense_ratings(const RatingMatrix& matrix, std::span<const UserIndex> users) {
  DenseMatrix r = DenseMatrix::Zero(static_cast<Eigen::Index>(users.size()),
                                    static_cast<Eigen::Index>(matrix.num_items()));
  for (std::size_t b = 0; b < users.size(); ++b) {
    for (const auto item : matrix.row(users[b])) r(static_cast<Eigen::Index>(b), item) = 1.0;
  }
  return r;
}

SeedItemset rbmf_select(const RatingMatrix& matrix, std::span<const UserIndex> users, std::size_t k,
                        double delta, std::uint64_t seed) {
  const DenseMatrix r = dense_ratings(matrix, users);
  const auto svd = truncated_svd(r, k, 1e-3, seed);
  const auto mv = maxvol(svd.right.transpose(), delta);
  SeedItemset seeds;
  for (const auto row : mv.indices) seeds.items.push_back(static_cast<ItemIndex>(row));
  return seeds;
}

std::vector<double> LinearDecoder::predict(std::span<const float> feedback) const {
  if (feedback.size() != static_cast<std::size_t>(x.rows())) {
    throw Error("expected " + std::to_string(x.rows()) + " feedback values");
  }
  std::vector<double> out(static_cast<std::size_t>(x.cols()), 0.0);
  for (Eigen::Index j = 0; j < x.rows(); ++j) {
    const double z = feedback[static_cast<std::size_t>(j)];
    if (z == 0.0) continue;
    for (Eigen::Index i = 0; i < x.cols(); ++i) out[static_cast<std::size_t>(i)] += z * x(j, i);
  }
  return out;
}

LinearDecoder rbmf_decoder(const RatingMatrix& matrix, std::span<const UserIndex> users,
                           const SeedItemset& seeds, double lambda) {
  validate_seeds(seeds, matrix.num_items());
  const DenseMatrix r = dense_ratings(matrix, users);
  DenseMatrix a(r.rows(), static_cast<Eigen::Index>(seeds.size()));
  for (std::size_t j = 0; j < seeds.size(); ++j) a.col(static_cast<Eigen::Index>(j)) = r.col(seeds.items[j]);
  return {ridge_solve(a, r, lambda), seeds};
}

DecoderParams plusplus_decoder(const RatingMatrix& matrix, const SplitSpec& split,
                               const SeedItemset& seeds, const TrainConfig& cfg) {
  TrainConfig checked = cfg;
  checked.k = seeds.size();
  checked.validate(matrix.num_items());
  Rng init_rng(derive_seed(cfg.seed, "plusplus/init", 0));
  DecoderParams theta = init_decoder(seeds.size(), cfg.hidden, matrix.num_items(), init_rng);
  DecoderFitOptions options;
  options.epochs = cfg.epochs;
  options.lr = cfg.lr;
  options.batch_size = cfg.batch_size;
  options.seed = derive_seed(cfg.seed, "plusplus/fit", 0);
  options.val_every = cfg.val_every;
  options.select_on_validation = true;
  return fit_decoder(matrix, split, seeds, std::move(theta), options);
}

std::vector<ItemIndex> mostpop_ranking(std::span<const std::size_t> popularity,
                                       const SeedItemset& excluded, std::size_t n) {
  std::vector<double> scores(popularity.begin(), popularity.end());
  return top_n(std::span<const double>(scores), excluded, n);
}

}  // namespace elicit
