#include <benchmark/benchmark.h>

#include <numeric>

#include "elicit/eval.hpp"
#include "elicit/linalg.hpp"
#include "elicit/model.hpp"
#include "elicit/rng.hpp"

using namespace elicit;

namespace {

template <typename T>
Matrix<T> gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix<T> a(rows, cols);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = static_cast<T>(rng.normal());
  return a;
}

void BM_SoftmaxRows(benchmark::State& state) {
  Rng rng(1);
  const auto phi = gaussian<float>(50, state.range(0), rng);
  for (auto _ : state) benchmark::DoNotOptimize(softmax_rows<float>(phi, 0.5f));
  state.SetItemsProcessed(state.iterations() * phi.size());
}
BENCHMARK(BM_SoftmaxRows)->Arg(1000)->Arg(3533);

// One training step's gradient for k=50 seeds, batch 256 and hidden 100.
void BM_Backward(benchmark::State& state) {
  Rng rng(2);
  const std::size_t k = 50, m = static_cast<std::size_t>(state.range(0)), d = 100, b = 256;
  const auto phi = gaussian<float>(k, m, rng);
  const auto theta = init_decoder(k, d, m, rng);
  Matrix<float> r(b, m);
  for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = rng.uniform() < 0.05 ? 1.0f : 0.0f;
  const auto noise = gumbel_noise<float>(k, m, rng);
  for (auto _ : state) benchmark::DoNotOptimize(backward<float>(phi, theta, r, 1.0f, noise));
}
BENCHMARK(BM_Backward)->Arg(1000)->Arg(3533)->Unit(benchmark::kMillisecond);

void BM_Maxvol(benchmark::State& state) {
  Rng rng(3);
  const auto b = gaussian<double>(state.range(0), 50, rng);
  for (auto _ : state) benchmark::DoNotOptimize(maxvol(b));
}
BENCHMARK(BM_Maxvol)->Arg(1000)->Arg(3533)->Unit(benchmark::kMillisecond);

void BM_TruncatedSvd(benchmark::State& state) {
  Rng rng(4);
  const auto a = gaussian<double>(2000, state.range(0), rng);
  for (auto _ : state) benchmark::DoNotOptimize(truncated_svd(a, 50, 1e-3, 7));
}
BENCHMARK(BM_TruncatedSvd)->Arg(1000)->Arg(3533)->Unit(benchmark::kMillisecond);

void BM_Ndcg(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<ItemIndex> ranking(n);
  std::iota(ranking.begin(), ranking.end(), ItemIndex{0});
  std::vector<ItemIndex> relevant;
  for (ItemIndex i = 0; i < static_cast<ItemIndex>(4 * n); i += 3) relevant.push_back(i);
  for (auto _ : state) benchmark::DoNotOptimize(ndcg_at(ranking, relevant, n));
}
BENCHMARK(BM_Ndcg)->Arg(20)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
