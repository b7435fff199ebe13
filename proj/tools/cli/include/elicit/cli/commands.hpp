#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "elicit/checkpoint.hpp"
#include "elicit/cli/config.hpp"
#include "elicit/eval.hpp"

namespace elicit::cli {

inline constexpr const char* kReferenceMethod = "DRE";
inline constexpr int kExitGridBudget = 3;

// Snapshot directory or raw ratings file.
RatingMatrix load_dataset(const RunConfig& config);
SplitSpec make_split(const RunConfig& config, const RatingMatrix& matrix);

struct TrainedDre {
  Checkpoint checkpoint;  // best joint snapshot, seeds extracted, decoder re-trained
  TrainResult joint;
};

// train -> extract_seeds(best phi) -> retrain_decoder(best theta).
TrainedDre train_dre(const RatingMatrix& matrix, const SplitSpec& split, const TrainConfig& cfg);

// One evaluation run per index in [0, config.runs). A fixed DRE checkpoint, if
// given, replaces DRE training in every run.
EvalReport run_evaluation(const RunConfig& config, const RatingMatrix& matrix, const SplitSpec& split,
                          const std::optional<Checkpoint>& fixed_dre, std::ostream* log);

// "***" for p <= 0.005, "**" for p <= 0.01, "*" for p <= 0.05, else "".
std::string significance_stars(double p);
// 100 * (ours - best) / best.
double improvement_percent(double ours, double best);
// Table-2-style comparison of the reference method against the best other method per cell.
std::string format_comparison(const EvalReport& report, const std::string& reference = kReferenceMethod);

// Model directory layout written by `train`.
inline constexpr const char* kModelFile = "model.dre";
inline constexpr const char* kSeedsFile = "seeds.txt";
inline constexpr const char* kHistoryFile = "history.tsv";
inline constexpr const char* kManifestFile = "manifest.txt";
inline constexpr const char* kItemsFile = "items.map";

// Checkpoint from a model directory whose manifest fingerprint must equal `fingerprint`.
Checkpoint load_model_dir(const std::filesystem::path& dir, const std::string& fingerprint);

int cmd_prepare(const RunConfig& config, std::ostream& out);
int cmd_train(const RunConfig& config, std::ostream& out);
int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& log);
int cmd_grid(const RunConfig& config, std::ostream& out, std::ostream& log);
int cmd_recommend(const RunConfig& config, std::istream& in, std::ostream& out, std::ostream& prompt);
int cmd_report(const std::vector<std::filesystem::path>& dumps, std::ostream& out);

}  // namespace elicit::cli
