#include "elicit/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "elicit/error.hpp"
#include "elicit/eval.hpp"

namespace elicit {
namespace {

template <typename T>
Matrix<T> sigmoid(const Matrix<T>& x) {
  return (T(1) + (-x.array()).exp()).inverse().matrix();
}

template <typename T>
struct ForwardCache {
  Matrix<T> hidden;  // b x d
  Matrix<T> output;  // b x m
};

template <typename T>
ForwardCache<T> decoder_forward(const DecoderParamsT<T>& theta, const Matrix<T>& z) {
  ForwardCache<T> cache;
  Matrix<T> pre_hidden = z * theta.w1;
  pre_hidden.rowwise() += theta.b1;
  cache.hidden = sigmoid<T>(pre_hidden);
  Matrix<T> pre_out = cache.hidden * theta.w2;
  pre_out.rowwise() += theta.b2;
  cache.output = sigmoid<T>(pre_out);
  return cache;
}

// Backpropagates the loss through the decoder; returns dL/dz.
template <typename T>
Matrix<T> decoder_reverse(const DecoderParamsT<T>& theta, const Matrix<T>& z,
                          const Matrix<T>& r_batch, const ForwardCache<T>& cache,
                          DecoderParamsT<T>& grad) {
  const T scale = T(2) / static_cast<T>(r_batch.rows());
  const Matrix<T> d_out =
      (scale * (cache.output - r_batch).array() * cache.output.array() * (T(1) - cache.output.array()))
          .matrix();
  grad.w2.noalias() = cache.hidden.transpose() * d_out;
  grad.b2 = d_out.colwise().sum();
  const Matrix<T> d_hidden_act = d_out * theta.w2.transpose();
  const Matrix<T> d_hidden =
      (d_hidden_act.array() * cache.hidden.array() * (T(1) - cache.hidden.array())).matrix();
  grad.w1.noalias() = z.transpose() * d_hidden;
  grad.b1 = d_hidden.colwise().sum();
  return d_hidden * theta.w1.transpose();
}

template <typename T>
void check_batch(const Matrix<T>& r_batch, std::size_t m) {
  if (static_cast<std::size_t>(r_batch.cols()) != m) {
    throw Error("rating batch has " + std::to_string(r_batch.cols()) + " columns, expected " +
                std::to_string(m));
  }
}

}  // namespace

void TrainConfig::validate(std::size_t num_items) const {
  if (!(te > 0.0) || !(t0 >= te)) throw Error("temperatures must satisfy t0 >= te > 0");
  if (epochs < 1) throw Error("epochs must be at least 1");
  if (k < 1 || k >= num_items) {
    throw Error("k must satisfy 1 <= k < m (k=" + std::to_string(k) +
                ", m=" + std::to_string(num_items) + ")");
  }
  if (hidden < 1) throw Error("hidden width must be at least 1");
  if (batch_size < 1) throw Error("batch size must be at least 1");
  if (!(lr > 0.0)) throw Error("learning rate must be positive");
  if (val_every < 1) throw Error("val_every must be at least 1");
}

double temperature(double epoch, const TrainConfig& cfg) {
  return cfg.t0 * std::pow(cfg.te / cfg.t0, epoch / static_cast<double>(cfg.epochs));
}

double schedule_position(std::size_t index, std::size_t epochs) {
  if (epochs <= 1) return 0.0;
  return static_cast<double>(index) * static_cast<double>(epochs) / static_cast<double>(epochs - 1);
}

template <typename T>
DecoderParamsT<T> DecoderParamsT<T>::zeros(std::size_t k, std::size_t hidden, std::size_t m) {
  const auto ki = static_cast<Eigen::Index>(k);
  const auto di = static_cast<Eigen::Index>(hidden);
  const auto mi = static_cast<Eigen::Index>(m);
  return {Matrix<T>::Zero(ki, di), RowVector<T>::Zero(di), Matrix<T>::Zero(di, mi),
          RowVector<T>::Zero(mi)};
}

EncoderLogits init_encoder(std::size_t k, std::size_t m, Rng& rng) {
  EncoderLogits enc{Matrix<float>(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m))};
  for (Eigen::Index i = 0; i < enc.phi.size(); ++i) enc.phi.data()[i] = static_cast<float>(0.01 * rng.normal());
  return enc;
}

DecoderParams init_decoder(std::size_t k, std::size_t hidden, std::size_t m, Rng& rng) {
  auto theta = DecoderParams::zeros(k, hidden, m);
  const auto fill = [&rng](std::span<float> values, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : values) v = static_cast<float>((2.0 * rng.uniform() - 1.0) * bound);
  };
  auto t = theta.tensors();
  fill(t[0], k);
  fill(t[1], k);
  fill(t[2], hidden);
  fill(t[3], hidden);
  return theta;
}

template <typename T>
Encoded<T> encode(const Matrix<T>& phi, const Matrix<T>& r_batch, T tau, const Matrix<T>& noise) {
  check_batch(r_batch, static_cast<std::size_t>(phi.cols()));
  if (noise.rows() != phi.rows() || noise.cols() != phi.cols()) {
    throw Error("Gumbel noise shape does not match the logits");
  }
  Encoded<T> out;
  out.y = softmax_rows<T>(phi + noise, tau);
  out.z.noalias() = r_batch * out.y.transpose();
  return out;
}

template <typename T>
Matrix<T> decode(const DecoderParamsT<T>& theta, const Matrix<T>& z) {
  if (static_cast<std::size_t>(z.cols()) != theta.k()) {
    throw Error("feedback has " + std::to_string(z.cols()) + " columns, decoder expects " +
                std::to_string(theta.k()));
  }
  return decoder_forward(theta, z).output;
}

template <typename T>
T loss(const Matrix<T>& r_hat, const Matrix<T>& r) {
  if (r_hat.rows() != r.rows() || r_hat.cols() != r.cols()) throw Error("loss: shape mismatch");
  if (r.rows() == 0) return T(0);
  return (r - r_hat).squaredNorm() / static_cast<T>(r.rows());
}

template <typename T>
Gradients<T> backward(const Matrix<T>& phi, const DecoderParamsT<T>& theta,
                      const Matrix<T>& r_batch, T tau, const Matrix<T>& noise) {
  const auto enc = encode<T>(phi, r_batch, tau, noise);
  const auto cache = decoder_forward(theta, enc.z);

  Gradients<T> g;
  g.loss = loss<T>(cache.output, r_batch);
  g.decoder = DecoderParamsT<T>::zeros(theta.k(), theta.hidden(), theta.m());
  const Matrix<T> d_z = decoder_reverse(theta, enc.z, r_batch, cache, g.decoder);

  // z = r y^T  =>  dL/dy = dz^T r.
  const Matrix<T> d_y = d_z.transpose() * r_batch;
  // y = softmax((phi + g) / tau) row-wise.
  g.phi.resize(phi.rows(), phi.cols());
  for (Eigen::Index i = 0; i < phi.rows(); ++i) {
    const T inner = d_y.row(i).dot(enc.y.row(i));
    g.phi.row(i) = (enc.y.row(i).array() * (d_y.row(i).array() - inner) / tau).matrix();
  }
  return g;
}

template <typename T>
DecoderGradients<T> decoder_backward(const DecoderParamsT<T>& theta, const Matrix<T>& z,
                                     const Matrix<T>& r_batch) {
  check_batch(r_batch, theta.m());
  const auto cache = decoder_forward(theta, z);
  DecoderGradients<T> g;
  g.loss = loss<T>(cache.output, r_batch);
  g.grad = DecoderParamsT<T>::zeros(theta.k(), theta.hidden(), theta.m());
  decoder_reverse(theta, z, r_batch, cache, g.grad);
  return g;
}

template struct DecoderParamsT<float>;
template struct DecoderParamsT<double>;
template Encoded<float> encode(const Matrix<float>&, const Matrix<float>&, float, const Matrix<float>&);
template Encoded<double> encode(const Matrix<double>&, const Matrix<double>&, double,
                                const Matrix<double>&);
template Matrix<float> decode(const DecoderParamsT<float>&, const Matrix<float>&);
template Matrix<double> decode(const DecoderParamsT<double>&, const Matrix<double>&);
template float loss(const Matrix<float>&, const Matrix<float>&);
template double loss(const Matrix<double>&, const Matrix<double>&);
template Gradients<float> backward(const Matrix<float>&, const DecoderParamsT<float>&,
                                   const Matrix<float>&, float, const Matrix<float>&);
template Gradients<double> backward(const Matrix<double>&, const DecoderParamsT<double>&,
                                    const Matrix<double>&, double, const Matrix<double>&);
template DecoderGradients<float> decoder_backward(const DecoderParamsT<float>&, const Matrix<float>&,
                                                  const Matrix<float>&);
template DecoderGradients<double> decoder_backward(const DecoderParamsT<double>&,
                                                   const Matrix<double>&, const Matrix<double>&);

void adam_step(std::span<const std::span<float>> params,
               std::span<const std::span<const float>> grads, AdamState& state, double lr) {
  if (params.size() != grads.size()) throw Error("adam_step: parameter/gradient count mismatch");
  if (state.first.empty()) {
    for (const auto& p : params) {
      state.first.emplace_back(p.size(), 0.0f);
      state.second.emplace_back(p.size(), 0.0f);
    }
  }
  if (state.first.size() != params.size()) throw Error("adam_step: state does not match parameters");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  const auto step_size = static_cast<float>(lr / correction1);
  const auto root_correction2 = static_cast<float>(std::sqrt(correction2));
  const auto b1 = static_cast<float>(state.beta1);
  const auto b2 = static_cast<float>(state.beta2);
  const auto eps = static_cast<float>(state.eps);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto param = params[p];
    const auto grad = grads[p];
    auto& m = state.first[p];
    auto& v = state.second[p];
    if (param.size() != grad.size() || param.size() != m.size()) {
      throw Error("adam_step: tensor " + std::to_string(p) + " changed shape");
    }
    for (std::size_t i = 0; i < param.size(); ++i) {
      m[i] = b1 * m[i] + (1.0f - b1) * grad[i];
      v[i] = b2 * v[i] + (1.0f - b2) * grad[i] * grad[i];
      param[i] -= step_size * m[i] / (std::sqrt(v[i]) / root_correction2 + eps);
    }
  }
}

SeedItemset extract_seeds(const EncoderLogits& enc) {
  const auto k = enc.k();
  const auto m = enc.m();
  if (k > m) throw Error("cannot extract " + std::to_string(k) + " distinct seeds from " +
                         std::to_string(m) + " items");
  if (!enc.phi.allFinite()) throw NumericalError("encoder logits are not finite");
  const Matrix<double> probs = softmax_rows<double>(enc.phi.cast<double>(), 1.0);

  std::vector<std::size_t> rows(k);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::vector<double> peak(k);
  for (std::size_t i = 0; i < k; ++i) peak[i] = probs.row(static_cast<Eigen::Index>(i)).maxCoeff();
  std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) { return peak[a] > peak[b]; });

  SeedItemset seeds;
  seeds.items.assign(k, 0);
  std::vector<bool> taken(m, false);
  for (const auto i : rows) {
    std::size_t best = m;
    for (std::size_t j = 0; j < m; ++j) {
      if (taken[j]) continue;
      if (best == m || probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) >
                           probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(best))) {
        best = j;
      }
    }
    taken[best] = true;
    seeds.items[i] = static_cast<ItemIndex>(best);
  }
  return seeds;
}

Matrix<float> dense_rows(const RatingMatrix& matrix, std::span<const UserIndex> users) {
  Matrix<float> out = Matrix<float>::Zero(static_cast<Eigen::Index>(users.size()),
                                          static_cast<Eigen::Index>(matrix.num_items()));
  for (std::size_t b = 0; b < users.size(); ++b) {
    for (const auto item : matrix.row(users[b])) out(static_cast<Eigen::Index>(b), item) = 1.0f;
  }
  return out;
}

Matrix<float> seed_feedback(const RatingMatrix& matrix, std::span<const UserIndex> users,
                            const SeedItemset& seeds) {
  Matrix<float> z(static_cast<Eigen::Index>(users.size()), static_cast<Eigen::Index>(seeds.size()));
  for (std::size_t b = 0; b < users.size(); ++b) {
    const auto& row = matrix.row(users[b]);
    for (std::size_t j = 0; j < seeds.size(); ++j) {
      z(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j)) =
          std::binary_search(row.begin(), row.end(), seeds.items[j]) ? 1.0f : 0.0f;
    }
  }
  return z;
}

RowVector<float> predict_scores(const DecoderParams& theta, std::span<const float> feedback) {
  if (feedback.size() != theta.k()) {
    throw Error("expected " + std::to_string(theta.k()) + " feedback values, got " +
                std::to_string(feedback.size()));
  }
  Matrix<float> z(1, static_cast<Eigen::Index>(feedback.size()));
  for (std::size_t j = 0; j < feedback.size(); ++j) z(0, static_cast<Eigen::Index>(j)) = feedback[j];
  return decode<float>(theta, z).row(0);
}

std::vector<ItemIndex> recommend(const DecoderParams& theta, const SeedItemset& seeds,
                                 std::span<const float> feedback, std::size_t n) {
  if (seeds.size() != theta.k()) throw Error("seed count does not match the decoder input width");
  validate_seeds(seeds, theta.m());
  if (n > theta.m() - seeds.size()) {
    throw Error("top-" + std::to_string(n) + " exceeds the " +
                std::to_string(theta.m() - seeds.size()) + " candidate items");
  }
  const RowVector<float> scores = predict_scores(theta, feedback);
  return top_n(std::span<const float>(scores.data(), static_cast<std::size_t>(scores.size())), seeds, n);
}

std::optional<double> validation_ndcg(const RatingMatrix& matrix, std::span<const UserIndex> users,
                                      const SeedItemset& seeds, const DecoderParams& theta,
                                      std::size_t n) {
  if (users.empty()) return std::nullopt;
  n = std::min(n, matrix.num_items() - seeds.size());
  const std::array<std::size_t, 1> cutoffs{n};
  const Predictor predictor = [&theta](std::span<const float> feedback) {
    const RowVector<float> s = predict_scores(theta, feedback);
    return std::vector<double>(s.data(), s.data() + s.size());
  };
  try {
    return evaluate_method(predictor, matrix, users, seeds, cutoffs).mean_ndcg(0);
  } catch (const DegenerateDataError&) {
    return std::nullopt;
  }
}

namespace {

std::vector<std::span<float>> all_tensors(EncoderLogits& enc, DecoderParams& theta) {
  std::vector<std::span<float>> out{std::span<float>(enc.phi.data(), static_cast<std::size_t>(enc.phi.size()))};
  for (auto t : theta.tensors()) out.push_back(t);
  return out;
}

std::vector<std::span<const float>> all_gradients(const Gradients<float>& g) {
  std::vector<std::span<const float>> out{
      std::span<const float>(g.phi.data(), static_cast<std::size_t>(g.phi.size()))};
  for (auto t : g.decoder.tensors()) out.push_back(t);
  return out;
}

void require_finite(float value, std::size_t epoch, std::size_t step) {
  if (!std::isfinite(value)) {
    throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(step));
  }
}

}  // namespace

TrainResult train(const RatingMatrix& matrix, const SplitSpec& split, const TrainConfig& cfg) {
  const std::size_t m = matrix.num_items();
  cfg.validate(m);
  if (split.train_users.empty()) throw DegenerateDataError("no training users");

  Rng init_rng(derive_seed(cfg.seed, "dre/init", 0));
  Rng shuffle_rng(derive_seed(cfg.seed, "dre/shuffle", 0));
  Rng noise_rng(derive_seed(cfg.seed, "dre/gumbel", 0));

  TrainResult result;
  result.phi = init_encoder(cfg.k, m, init_rng);
  result.theta = init_decoder(cfg.k, cfg.hidden, m, init_rng);
  result.best_phi = result.phi;
  result.best_theta = result.theta;

  AdamState adam;
  std::vector<UserIndex> order = split.train_users;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double tau = temperature(schedule_position(epoch, cfg.epochs), cfg);
    shuffle_rng.shuffle(std::span<UserIndex>(order));
    double weighted_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto count = std::min(cfg.batch_size, order.size() - start);
      const std::span<const UserIndex> batch(order.data() + start, count);
      const Matrix<float> r = dense_rows(matrix, batch);
      const Matrix<float> noise = gumbel_noise<float>(cfg.k, m, noise_rng);
      const auto grads = backward<float>(result.phi.phi, result.theta, r, static_cast<float>(tau), noise);
      require_finite(grads.loss, epoch, step);
      adam_step(all_tensors(result.phi, result.theta), all_gradients(grads), adam, cfg.lr);
      weighted_loss += static_cast<double>(grads.loss) * static_cast<double>(count);
      ++step;
    }

    HistoryEntry entry;
    entry.epoch = epoch;
    entry.tau = tau;
    entry.train_loss = weighted_loss / static_cast<double>(order.size());
    const bool last = epoch + 1 == cfg.epochs;
    if (!split.val_users.empty() && ((epoch + 1) % cfg.val_every == 0 || last)) {
      entry.val_ndcg = validation_ndcg(matrix, split.val_users, extract_seeds(result.phi), result.theta);
      if (entry.val_ndcg && (!result.best_val_ndcg || *entry.val_ndcg > *result.best_val_ndcg)) {
        result.best_val_ndcg = entry.val_ndcg;
        result.best_epoch = epoch;
        result.best_phi = result.phi;
        result.best_theta = result.theta;
      }
    }
    result.history.push_back(entry);
  }
  if (!result.best_val_ndcg) {
    result.best_epoch = cfg.epochs - 1;
    result.best_phi = result.phi;
    result.best_theta = result.theta;
  }
  return result;
}

DecoderParams fit_decoder(const RatingMatrix& matrix, const SplitSpec& split,
                          const SeedItemset& seeds, DecoderParams theta,
                          const DecoderFitOptions& options, std::vector<HistoryEntry>* history) {
  validate_seeds(seeds, matrix.num_items());
  if (seeds.size() != theta.k() || theta.m() != matrix.num_items()) {
    throw Error("decoder shape does not match seeds and item count");
  }
  if (options.epochs == 0) return theta;
  if (split.train_users.empty()) throw DegenerateDataError("no training users");
  if (options.batch_size == 0 || options.val_every == 0) throw Error("batch size and val_every must be positive");

  Rng shuffle_rng(derive_seed(options.seed, "decoder/shuffle", 0));
  AdamState adam;
  std::vector<UserIndex> order = split.train_users;
  DecoderParams best = theta;
  std::optional<double> best_val;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<UserIndex>(order));
    double weighted_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const auto count = std::min(options.batch_size, order.size() - start);
      const std::span<const UserIndex> batch(order.data() + start, count);
      const Matrix<float> r = dense_rows(matrix, batch);
      const Matrix<float> z = seed_feedback(matrix, batch, seeds);
      const auto g = decoder_backward<float>(theta, z, r);
      require_finite(g.loss, epoch, step);
      auto params = theta.tensors();
      const auto grads = std::as_const(g.grad).tensors();
      adam_step(params, grads, adam, options.lr);
      weighted_loss += static_cast<double>(g.loss) * static_cast<double>(count);
      ++step;
    }
    HistoryEntry entry;
    entry.epoch = epoch;
    entry.train_loss = weighted_loss / static_cast<double>(order.size());
    const bool last = epoch + 1 == options.epochs;
    if (options.select_on_validation && !split.val_users.empty() &&
        ((epoch + 1) % options.val_every == 0 || last)) {
      entry.val_ndcg = validation_ndcg(matrix, split.val_users, seeds, theta);
      if (entry.val_ndcg && (!best_val || *entry.val_ndcg > *best_val)) {
        best_val = entry.val_ndcg;
        best = theta;
      }
    }
    if (history) history->push_back(entry);
  }
  return best_val ? best : theta;
}

DecoderParams retrain_decoder(const RatingMatrix& matrix, const SplitSpec& split,
                              const SeedItemset& seeds, DecoderParams theta, std::size_t epochs,
                              const TrainConfig& cfg) {
  DecoderFitOptions options;
  options.epochs = epochs;
  options.lr = cfg.lr;
  options.batch_size = cfg.batch_size;
  options.seed = derive_seed(cfg.seed, "dre/retrain", 0);
  options.val_every = cfg.val_every;
  options.select_on_validation = true;
  return fit_decoder(matrix, split, seeds, std::move(theta), options);
}

}  // namespace elicit
