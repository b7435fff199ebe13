#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "elicit/data.hpp"
#include "elicit/linalg.hpp"
#include "elicit/rng.hpp"
#include "elicit/seeds.hpp"

namespace elicit {

struct TrainConfig {
  std::size_t k = 50;          // seed itemset size
  std::size_t hidden = 300;    // decoder hidden width d
  double lr = 0.005;
  std::size_t epochs = 400;    // E
  std::size_t batch_size = 256;
  double t0 = 10.0;            // initial temperature
  double te = 0.1;             // final temperature
  std::size_t retrain_epochs = 100;
  std::uint64_t seed = 0;
  std::size_t val_every = 20;

  /// Throws Error unless t0 >= te > 0, epochs >= 1, 1 <= k < num_items, hidden >= 1.
  void validate(std::size_t num_items) const;
};

/// tau = t0 * (te / t0)^(epoch / E) for a real epoch position in [0, E].
double temperature(double epoch, const TrainConfig& cfg);

/// Schedule position of the 0-based training epoch `index` out of `epochs`:
/// the first epoch sits at 0 and the last at E, so the run starts at t0 and
/// finishes at te.
double schedule_position(std::size_t index, std::size_t epochs);

/// k x m unnormalized logits. Row softmax recovers the k categorical
/// distributions; adding a constant to a row changes nothing.
template <typename T>
struct EncoderLogitsT {
  Matrix<T> phi;

  std::size_t k() const noexcept { return static_cast<std::size_t>(phi.rows()); }
  std::size_t m() const noexcept { return static_cast<std::size_t>(phi.cols()); }
};

/// h = sigmoid(z W1 + b1), r_hat = sigmoid(h W2 + b2).
template <typename T>
struct DecoderParamsT {
  Matrix<T> w1;     // k x d
  RowVector<T> b1;  // d
  Matrix<T> w2;     // d x m
  RowVector<T> b2;  // m

  std::size_t k() const noexcept { return static_cast<std::size_t>(w1.rows()); }
  std::size_t hidden() const noexcept { return static_cast<std::size_t>(w1.cols()); }
  std::size_t m() const noexcept { return static_cast<std::size_t>(w2.cols()); }

  std::array<std::span<T>, 4> tensors() {
    return {std::span<T>(w1.data(), static_cast<std::size_t>(w1.size())),
            std::span<T>(b1.data(), static_cast<std::size_t>(b1.size())),
            std::span<T>(w2.data(), static_cast<std::size_t>(w2.size())),
            std::span<T>(b2.data(), static_cast<std::size_t>(b2.size()))};
  }
  std::array<std::span<const T>, 4> tensors() const {
    return {std::span<const T>(w1.data(), static_cast<std::size_t>(w1.size())),
            std::span<const T>(b1.data(), static_cast<std::size_t>(b1.size())),
            std::span<const T>(w2.data(), static_cast<std::size_t>(w2.size())),
            std::span<const T>(b2.data(), static_cast<std::size_t>(b2.size()))};
  }

  static DecoderParamsT zeros(std::size_t k, std::size_t hidden, std::size_t m);
};

using EncoderLogits = EncoderLogitsT<float>;
using DecoderParams = DecoderParamsT<float>;

/// Logits drawn from N(0, 0.01^2).
EncoderLogits init_encoder(std::size_t k, std::size_t m, Rng& rng);

/// Weights and biases uniform in +-1/sqrt(fan_in).
DecoderParams init_decoder(std::size_t k, std::size_t hidden, std::size_t m, Rng& rng);

template <typename T>
struct Encoded {
  Matrix<T> y;  // k x m relaxed one-hot rows
  Matrix<T> z;  // b x k relaxed feedback
};

/// y = softmax_rows(phi + noise, tau), z = r_batch * y^T. `noise` is k x m and
/// shared by every row of the batch.
template <typename T>
Encoded<T> encode(const Matrix<T>& phi, const Matrix<T>& r_batch, T tau, const Matrix<T>& noise);

/// Same as above with a fresh Gumbel draw from `rng`.
template <typename T>
Encoded<T> encode(const Matrix<T>& phi, const Matrix<T>& r_batch, T tau, Rng& rng) {
  return encode(phi, r_batch, tau, gumbel_noise<T>(static_cast<std::size_t>(phi.rows()),
                                                   static_cast<std::size_t>(phi.cols()), rng));
}

template <typename T>
Matrix<T> decode(const DecoderParamsT<T>& theta, const Matrix<T>& z);

/// (1/b) * sum over rows of the squared error.
template <typename T>
T loss(const Matrix<T>& r_hat, const Matrix<T>& r);

template <typename T>
struct DecoderGradients {
  DecoderParamsT<T> grad;
  T loss = T(0);
};

template <typename T>
struct Gradients {
  Matrix<T> phi;
  DecoderParamsT<T> decoder;
  T loss = T(0);
};

/// Reverse-mode gradients of the reconstruction loss through decoder, relaxed
/// selection and softmax. `noise` must be the draw used by the forward pass.
template <typename T>
Gradients<T> backward(const Matrix<T>& phi, const DecoderParamsT<T>& theta,
                      const Matrix<T>& r_batch, T tau, const Matrix<T>& noise);

/// Gradients of the decoder alone for fixed inputs z.
template <typename T>
DecoderGradients<T> decoder_backward(const DecoderParamsT<T>& theta, const Matrix<T>& z,
                                     const Matrix<T>& r_batch);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<float>> first;   // one per parameter tensor
  std::vector<std::vector<float>> second;
};

/// One bias-corrected Adam update. Moments are allocated on the first call and
/// must keep matching the parameter shapes afterwards.
void adam_step(std::span<const std::span<float>> params,
               std::span<const std::span<const float>> grads, AdamState& state, double lr);

/// Row-wise argmax of phi. When rows collide, rows are served in descending
/// order of their peak probability and a later row falls back to its most
/// probable item not yet taken. items[i] belongs to row i.
SeedItemset extract_seeds(const EncoderLogits& phi);

/// Dense 0/1 rows for `users`.
Matrix<float> dense_rows(const RatingMatrix& matrix, std::span<const UserIndex> users);

/// z[u][j] = 1 iff user u likes seeds[j].
Matrix<float> seed_feedback(const RatingMatrix& matrix, std::span<const UserIndex> users,
                            const SeedItemset& seeds);

struct HistoryEntry {
  std::size_t epoch = 0;
  double tau = 0.0;
  double train_loss = 0.0;
  std::optional<double> val_ndcg;  // NDCG@20 with hard seeds
};

struct TrainResult {
  EncoderLogits phi;  // after the last epoch
  DecoderParams theta;
  EncoderLogits best_phi;  // snapshot with the best validation NDCG@20
  DecoderParams best_theta;
  std::size_t best_epoch = 0;
  std::optional<double> best_val_ndcg;
  std::vector<HistoryEntry> history;
};

/// Joint training of encoder and decoder on split.train_users. Throws
/// TrainingDiverged on a non-finite loss.
TrainResult train(const RatingMatrix& matrix, const SplitSpec& split, const TrainConfig& cfg);

struct DecoderFitOptions {
  std::size_t epochs = 0;
  double lr = 0.005;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  std::size_t val_every = 20;
  bool select_on_validation = false;  // return the best validation snapshot
};

/// Adam on the decoder alone, inputs z = r[S]. Shared by decoder re-training
/// and by every fixed-seed baseline.
DecoderParams fit_decoder(const RatingMatrix& matrix, const SplitSpec& split,
                          const SeedItemset& seeds, DecoderParams theta,
                          const DecoderFitOptions& options,
                          std::vector<HistoryEntry>* history = nullptr);

/// Decoder-only re-training with the encoder frozen at `seeds`. Returns the
/// snapshot with the best validation NDCG@20, like the fixed-seed baselines.
DecoderParams retrain_decoder(const RatingMatrix& matrix, const SplitSpec& split,
                              const SeedItemset& seeds, DecoderParams theta, std::size_t epochs,
                              const TrainConfig& cfg);

/// Mean NDCG@N over `users` with hard seed feedback; users without candidate
/// positives are skipped. Returns nullopt when every user is skipped.
std::optional<double> validation_ndcg(const RatingMatrix& matrix, std::span<const UserIndex> users,
                                      const SeedItemset& seeds, const DecoderParams& theta,
                                      std::size_t n = 20);

/// Predicted scores for all m items.
RowVector<float> predict_scores(const DecoderParams& theta, std::span<const float> feedback);

/// Top-n candidates by descending score, ties by ascending index; seed items
/// never appear. Throws Error if n > m - k.
std::vector<ItemIndex> recommend(const DecoderParams& theta, const SeedItemset& seeds,
                                 std::span<const float> feedback, std::size_t n);

}  // namespace elicit
