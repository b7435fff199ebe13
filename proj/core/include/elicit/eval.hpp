#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "elicit/data.hpp"
#include "elicit/error.hpp"
#include "elicit/seeds.hpp"

namespace elicit {

inline constexpr std::array<std::size_t, 4> kDefaultCutoffs{10, 20, 50, 100};

/// Indices of the n highest scores, skipping `excluded`; ties go to the lower
/// index. Throws Error if fewer than n candidates exist.
template <typename T>
std::vector<ItemIndex> top_n(std::span<const T> scores, const SeedItemset& excluded, std::size_t n) {
  std::vector<ItemIndex> candidates;
  candidates.reserve(scores.size());
  std::vector<bool> skip(scores.size(), false);
  for (const auto item : excluded.items) {
    if (item < skip.size()) skip[item] = true;
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!skip[i]) candidates.push_back(static_cast<ItemIndex>(i));
  }
  if (n > candidates.size()) {
    throw Error("requested top-" + std::to_string(n) + " but only " +
                std::to_string(candidates.size()) + " candidate items exist");
  }
  const auto better = [&](ItemIndex a, ItemIndex b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n),
                    candidates.end(), better);
  candidates.resize(n);
  return candidates;
}

/// `relevant` must be sorted ascending.
double precision_at(std::span<const ItemIndex> ranking, std::span<const ItemIndex> relevant,
                    std::size_t n);

/// Base-2 discount. Throws Error if `relevant` is empty.
double ndcg_at(std::span<const ItemIndex> ranking, std::span<const ItemIndex> relevant,
               std::size_t n);

/// Maps a user's feedback on the seeds (in seed order) to scores for all m items.
using Predictor = std::function<std::vector<double>(std::span<const float> feedback)>;

struct UserMetrics {
  UserIndex user = 0;
  std::vector<double> precision;  // one per cutoff
  std::vector<double> ndcg;
};

struct MethodEvaluation {
  std::vector<std::size_t> cutoffs;
  std::vector<UserMetrics> users;  // ascending user index
  std::size_t skipped = 0;         // users whose candidate ground truth was empty

  double mean_precision(std::size_t cutoff_pos) const;
  double mean_ndcg(std::size_t cutoff_pos) const;
};

/// Simulated elicitation: feedback is the user's true ratings on `seeds`,
/// ground truth is the remaining positives. Throws DegenerateDataError if every
/// user is skipped.
MethodEvaluation evaluate_method(const Predictor& predictor, const RatingMatrix& matrix,
                                 std::span<const UserIndex> users, const SeedItemset& seeds,
                                 std::span<const std::size_t> cutoffs = kDefaultCutoffs);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;  // two-sided
  std::size_t n = 0;
};

/// Paired two-sided t-test on a[i] - b[i] with n - 1 degrees of freedom. With
/// zero variance of the differences p is 0 when the mean differs from 0, else 1.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

enum class Metric { Precision, Ndcg };
std::string_view metric_name(Metric metric) noexcept;  // "P" / "NDCG"

struct RunEvaluation {
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, MethodEvaluation>> methods;
};

struct ReportCell {
  std::string method;
  Metric metric = Metric::Precision;
  std::size_t cutoff = 0;
  double mean = 0.0;  // over runs of the per-run user mean
  double std = 0.0;   // sample standard deviation over runs (0 for one run)
  std::vector<double> run_means;
  std::optional<double> p_vs_best;  // reference row only: pooled p vs. best other method
  std::optional<std::string> best_other;
};

struct PairedComparison {
  std::string a;
  std::string b;
  Metric metric = Metric::Precision;
  std::size_t cutoff = 0;
  std::vector<TTestResult> per_run;
  TTestResult pooled;  // over per-user scores concatenated across runs
};

struct EvalReport {
  std::vector<std::string> methods;
  std::vector<std::size_t> cutoffs;
  std::vector<std::uint64_t> run_seeds;
  std::optional<std::string> reference;
  std::vector<ReportCell> cells;
  std::vector<PairedComparison> comparisons;
  std::vector<std::pair<std::string, std::vector<std::size_t>>> skipped;  // per method, per run

  std::size_t runs() const noexcept { return run_seeds.size(); }
  const ReportCell& cell(const std::string& method, Metric metric, std::size_t cutoff) const;
};

/// Users are paired by index; only users evaluated by both methods enter a test.
/// When `reference` names a method, every other method is compared against it
/// in addition to `pairings`. Throws Error if runs disagree on method sets.
EvalReport aggregate_runs(std::span<const RunEvaluation> runs,
                          std::span<const std::pair<std::string, std::string>> pairings,
                          std::optional<std::string> reference = std::nullopt);

/// Tab-separated: method metric N mean std p_vs_best.
std::string format_report_table(const EvalReport& report);
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

void write_report(const EvalReport& report, const std::filesystem::path& dir);
EvalReport read_report(const std::filesystem::path& json_path);

}  // namespace elicit
