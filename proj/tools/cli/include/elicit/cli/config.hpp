#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "elicit/data.hpp"
#include "elicit/model.hpp"

namespace elicit::cli {

// Flat `key = value` settings. Lines starting with '#' are comments. List
// values are comma-separated. Unknown keys are an error.
struct RunConfig {
  std::filesystem::path dataset;  // raw ratings file, or a snapshot directory
  PreprocessOptions preprocess;
  std::uint64_t split_seed = 0;
  double test_frac = 0.2;
  double val_frac = 0.1;

  TrainConfig train;  // train.seed doubles as the master seed for eval

  std::vector<std::string> methods{"MOSTPOP", "RAN++", "POP++", "RBMF", "RBMF++", "DRE"};
  std::vector<std::size_t> cutoffs{10, 20, 50, 100};
  std::size_t runs = 5;
  double rbmf_delta = 0.01;
  double rbmf_lambda = 1e-6;
  std::map<std::string, std::filesystem::path> seed_files;  // seed_file.<METHOD>

  std::filesystem::path out = "elicit-out";
  std::filesystem::path checkpoint;  // directory written by `train`
  std::size_t top_n = 10;
  bool interactive = false;
  std::filesystem::path feedback;

  // Grid axes; empty means "use the scalar value". grid.te accepts the token T0.
  std::vector<std::size_t> grid_k;
  std::vector<std::size_t> grid_hidden;
  std::vector<double> grid_lr;
  std::vector<std::size_t> grid_epochs;
  std::vector<double> grid_t0;
  std::vector<std::string> grid_te;
  std::size_t grid_max_cells = 64;
};

// Applies one `key=value` setting. Throws Error on an unknown key or bad value.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

// Reads a config file on top of `config`.
void load_config_file(RunConfig& config, const std::filesystem::path& path);

// Canonical dump of every setting, one `key=value` per line, sorted by key.
std::string config_text(const RunConfig& config);

// Content hash of a matrix (rows and both token maps), as 16 hex digits.
std::string data_fingerprint(const RatingMatrix& matrix);

}  // namespace elicit::cli
