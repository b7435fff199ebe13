#include <doctest.h>

#include <cmath>
#include <numeric>

#include "elicit/eval.hpp"
#include "elicit/rng.hpp"
#include "synthetic.hpp"

using namespace elicit;

namespace {

using Ranking = std::vector<ItemIndex>;

MethodEvaluation fake_eval(std::vector<double> precision_at_10) {
  MethodEvaluation e;
  e.cutoffs = {10};
  for (std::size_t u = 0; u < precision_at_10.size(); ++u) {
    e.users.push_back({static_cast<UserIndex>(u), {precision_at_10[u]}, {precision_at_10[u] / 2}});
  }
  return e;
}

}  // namespace

TEST_CASE("precision examples") {
  // a, b, c, d = 0, 1, 2, 3
  const Ranking omega{0, 1, 2, 3};
  const Ranking v{0, 2};
  CHECK(precision_at(omega, v, 2) == 0.5);
  CHECK(precision_at(omega, Ranking{0, 1, 2, 3, 9}, 4) == 1.0);
  CHECK(precision_at(omega, Ranking{}, 3) == 0.0);
  CHECK_THROWS_AS(precision_at(omega, v, 5), Error);
}

TEST_CASE("ndcg examples") {
  const Ranking omega{10, 20, 30};
  const Ranking v{10, 30};
  const double expected = 1.5 / (1.0 + 1.0 / std::log2(3.0));
  CHECK(ndcg_at(omega, v, 3) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(std::abs(ndcg_at(omega, v, 3) - 0.9197207891481876) <= 1e-12);
  CHECK(ndcg_at(Ranking{4, 5, 6}, Ranking{4, 5}, 3) == 1.0);
  CHECK(ndcg_at(Ranking{4, 5, 6}, Ranking{1, 2}, 3) == 0.0);
  CHECK_THROWS_AS(ndcg_at(omega, Ranking{}, 3), Error);
  CHECK_THROWS_AS(ndcg_at(omega, v, 4), Error);
}

TEST_CASE("metric properties on random rankings") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    Ranking perm(30);
    std::iota(perm.begin(), perm.end(), ItemIndex{0});
    rng.shuffle(std::span<ItemIndex>(perm));
    Ranking v;
    for (ItemIndex i = 0; i < 30; ++i)
      if (rng.uniform() < 0.2) v.push_back(i);
    if (v.empty()) v.push_back(7);
    const std::size_t n = 1 + rng.below(15);
    const double p = precision_at(perm, v, n);
    const double g = ndcg_at(perm, v, n);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    CHECK(g >= 0.0);
    CHECK(g <= 1.0 + 1e-15);

    Ranking tail = perm;
    rng.shuffle(std::span<ItemIndex>(tail).subspan(n));
    CHECK(precision_at(tail, v, n) == p);
    CHECK(ndcg_at(tail, v, n) == g);

    // Promote the first hit that is not already at the top.
    for (std::size_t pos = 1; pos < n; ++pos) {
      const bool hit = std::binary_search(v.begin(), v.end(), perm[pos]);
      const bool prev_hit = std::binary_search(v.begin(), v.end(), perm[pos - 1]);
      if (hit && !prev_hit) {
        Ranking better = perm;
        std::swap(better[pos], better[pos - 1]);
        CHECK(ndcg_at(better, v, n) >= g);
        break;
      }
    }
    Ranking ideal = v;
    for (const auto i : perm)
      if (!std::binary_search(v.begin(), v.end(), i)) ideal.push_back(i);
    CHECK(ndcg_at(ideal, v, n) == 1.0);
  }
}

TEST_CASE("top_n ties and exclusion") {
  const std::vector<double> s{0.5, 0.9, 0.5, 0.9, 0.1};
  CHECK(top_n(std::span<const double>(s), SeedItemset{}, 4) == Ranking{1, 3, 0, 2});
  CHECK(top_n(std::span<const double>(s), SeedItemset{{3}}, 4) == Ranking{1, 0, 2, 4});
  CHECK_THROWS_AS(top_n(std::span<const double>(s), SeedItemset{{3}}, 5), Error);
}

TEST_CASE("evaluation protocol") {
  // 4 users, items 0..5; seeds {0, 1}.
  const std::vector<std::vector<ItemIndex>> rows{{0, 2, 3}, {0, 1}, {4}, {1, 2, 3, 4, 5}};
  std::vector<std::string> users{"a", "b", "c", "d"}, items{"0", "1", "2", "3", "4", "5"};
  const RatingMatrix m(rows, users, items);
  const SeedItemset seeds{{0, 1}};
  const std::vector<UserIndex> test{0, 1, 2, 3};
  const std::array<std::size_t, 2> cutoffs{1, 3};

  // Oracle predictor: relies on feedback to identify the user.
  const Predictor oracle = [&](std::span<const float> z) {
    std::vector<double> s(6, 0.0);
    const int code = static_cast<int>(z[0]) * 2 + static_cast<int>(z[1]);
    const UserIndex u = code == 2 ? 0 : code == 0 ? 2 : 3;
    for (const auto i : m.row(u)) s[i] = 1.0;
    return s;
  };
  const auto ev = evaluate_method(oracle, m, test, seeds, cutoffs);
  CHECK(ev.skipped == 1);  // user b only likes seed items
  REQUIRE(ev.users.size() == 3);
  CHECK(ev.users[0].user == 0);
  CHECK(ev.users[1].user == 2);
  for (const auto& u : ev.users) {
    const std::size_t v = m.row(u.user).size() - (m.contains(u.user, 0) + m.contains(u.user, 1));
    CHECK(u.precision[0] == 1.0);
    CHECK(u.precision[1] == doctest::Approx(std::min<double>(static_cast<double>(v), 3.0) / 3.0));
    CHECK(u.ndcg[0] == 1.0);
    CHECK(u.ndcg[1] == doctest::Approx(1.0));
  }
  CHECK(ev.mean_ndcg(1) == doctest::Approx(1.0));

  const std::vector<double> pop{0, 0, 3, 2, 1, 0};
  const Predictor constant = [&](std::span<const float>) { return pop; };
  const auto mp = evaluate_method(constant, m, test, seeds, cutoffs);
  CHECK(mp.users[0].precision[0] == 1.0);
  CHECK(mp.users[1].precision[0] == 0.0);

  const Predictor leaky = [](std::span<const float>) { return std::vector<double>{9, 8, 0, 0, 0, 0}; };
  CHECK_NOTHROW(evaluate_method(leaky, m, test, seeds, cutoffs));

  const std::vector<UserIndex> only_b{1};
  CHECK_THROWS_AS(evaluate_method(oracle, m, only_b, seeds, cutoffs), DegenerateDataError);
}

TEST_CASE("paired t-test") {
  const std::vector<double> a{0.61, 0.55, 0.72, 0.48, 0.66, 0.59, 0.70, 0.52, 0.63, 0.58};
  const std::vector<double> b{0.57, 0.50, 0.69, 0.49, 0.60, 0.55, 0.64, 0.50, 0.61, 0.51};
  const auto r = paired_t_test(a, b);
  CHECK(std::abs(r.t - 5.018570166056056) <= 1e-6);
  CHECK(r.p == doctest::Approx(0.00072049133854553).epsilon(1e-6));
  CHECK(r.n == 10);

  const auto same = paired_t_test(a, a);
  CHECK(same.t == 0.0);
  CHECK(same.p == 1.0);

  const std::vector<double> base{0.5, 1.0, 1.5, 2.0};
  const std::vector<double> shifted{1.5, 2.0, 2.5, 3.0};
  CHECK(paired_t_test(shifted, base).p == 0.0);
  const std::vector<double> jitter{1.5001, 1.9999, 2.5002, 2.9998};
  CHECK(paired_t_test(jitter, base).p <= 0.005);
  CHECK(paired_t_test(base, jitter).t < 0.0);

  CHECK_THROWS_AS(paired_t_test(std::vector<double>{1.0}, std::vector<double>{2.0}), Error);
  CHECK_THROWS_AS(paired_t_test(a, base), Error);
}

TEST_CASE("aggregation over runs") {
  RunEvaluation run{1, {{"A", fake_eval({0.5, 0.7, 0.6})}, {"B", fake_eval({0.4, 0.6, 0.6})}}};
  const std::vector<RunEvaluation> single{run};
  const auto one = aggregate_runs(single, {}, "A");
  CHECK(one.runs() == 1);
  CHECK(one.cell("A", Metric::Precision, 10).mean == doctest::Approx(0.6));
  CHECK(one.cell("A", Metric::Precision, 10).std == 0.0);
  CHECK(one.cell("A", Metric::Ndcg, 10).mean == doctest::Approx(0.3));
  REQUIRE(one.cell("A", Metric::Precision, 10).p_vs_best.has_value());
  CHECK(one.cell("A", Metric::Precision, 10).best_other == std::optional<std::string>("B"));
  CHECK_FALSE(one.cell("B", Metric::Precision, 10).p_vs_best.has_value());

  std::vector<RunEvaluation> five(5, run);
  for (std::size_t i = 0; i < 5; ++i) five[i].seed = i;
  const auto same = aggregate_runs(five, {}, "A");
  CHECK(same.cell("B", Metric::Precision, 10).std == 0.0);
  CHECK(same.cell("B", Metric::Precision, 10).run_means.size() == 5);

  auto varied = five;
  varied[2].methods[1].second = fake_eval({0.1, 0.2, 0.3});
  const auto rep = aggregate_runs(varied, {}, "A");
  const auto& cell = rep.cell("B", Metric::Precision, 10);
  std::vector<double> means{cell.run_means};
  const double mu = std::accumulate(means.begin(), means.end(), 0.0) / 5.0;
  double ss = 0.0;
  for (const double x : means) ss += (x - mu) * (x - mu);
  CHECK(cell.mean == doctest::Approx(mu));
  CHECK(cell.std == doctest::Approx(std::sqrt(ss / 4.0)));
  REQUIRE_FALSE(rep.comparisons.empty());
  const auto& cmp = rep.comparisons.front();
  CHECK(cmp.per_run.size() == 5);
  CHECK(cmp.pooled.n == 15);

  auto broken = five;
  broken[3].methods.pop_back();
  CHECK_THROWS_AS(aggregate_runs(broken, {}, "A"), Error);
}

TEST_CASE("report table and structured dump") {
  RunEvaluation run{11, {{"A", fake_eval({0.5, 0.7, 0.6})}, {"B", fake_eval({0.4, 0.6, 0.65})}}};
  const std::vector<RunEvaluation> runs{run, run};
  const std::vector<std::pair<std::string, std::string>> pairings{{"B", "A"}};
  const auto rep = aggregate_runs(runs, pairings, "A");
  const auto table = format_report_table(rep);
  CHECK(table.rfind("method\tmetric\tN\tmean\tstd\tp_vs_best\n", 0) == 0);
  CHECK(table.find("A\tP\t10\t0.600000\t0.000000\t") != std::string::npos);
  CHECK(table.find("B\tNDCG\t10\t0.275000\t0.000000\t-\n") != std::string::npos);

  const auto back = report_from_json(report_to_json(rep));
  CHECK(format_report_table(back) == table);
  CHECK(back.run_seeds == rep.run_seeds);
  CHECK(back.comparisons.size() == rep.comparisons.size());
  CHECK(back.reference == rep.reference);

  elicit::testing::TempDir dir("report");
  write_report(rep, dir.path());
  CHECK(elicit::testing::read_bytes(dir / "report.tsv") == table);
  CHECK(format_report_table(read_report(dir / "report.json")) == table);
  CHECK_THROWS_AS(report_from_json("{\"format\": \"other\"}"), std::exception);
}
