#include "elicit/cli/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "elicit/error.hpp"
#include "elicit/rng.hpp"

namespace elicit::cli {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_integer(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error("setting '" + key + "': '" + value + "' is not a non-negative integer");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
    throw Error("setting '" + key + "': '" + value + "' is not a number");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw Error("setting '" + key + "': '" + value + "' is not a boolean");
}

template <typename T, typename F>
std::vector<T> parse_each(const std::string& key, const std::string& value, F parse) {
  std::vector<T> out;
  for (const auto& item : split_list(value)) out.push_back(parse(key, item));
  if (out.empty()) throw Error("setting '" + key + "' needs at least one value");
  return out;
}

std::string real_text(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += real_text(v);
    } else if constexpr (std::is_arithmetic_v<T>) {
      out += std::to_string(v);
    } else {
      out += v;
    }
  }
  return out;
}

}  // namespace

void apply_setting(RunConfig& c, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  const auto size = [&] { return parse_integer<std::size_t>(key, value); };
  const auto u64 = [&] { return parse_integer<std::uint64_t>(key, value); };
  const auto real = [&] { return parse_real(key, value); };

  if (key == "dataset") c.dataset = value;
  else if (key == "delimiter") c.preprocess.delimiter = parse_delimiter(value);
  else if (key == "threshold") c.preprocess.threshold = real();
  else if (key == "min_count") c.preprocess.min_count = size();
  else if (key == "split_seed") c.split_seed = u64();
  else if (key == "test_frac") c.test_frac = real();
  else if (key == "val_frac") c.val_frac = real();
  else if (key == "k") c.train.k = size();
  else if (key == "hidden") c.train.hidden = size();
  else if (key == "lr") c.train.lr = real();
  else if (key == "epochs") c.train.epochs = size();
  else if (key == "batch_size") c.train.batch_size = size();
  else if (key == "t0") c.train.t0 = real();
  else if (key == "te") c.train.te = real();
  else if (key == "retrain_epochs") c.train.retrain_epochs = size();
  else if (key == "seed") c.train.seed = u64();
  else if (key == "val_every") c.train.val_every = size();
  else if (key == "methods") {
    c.methods = split_list(value);
    if (c.methods.empty()) throw Error("setting 'methods' needs at least one method");
  } else if (key == "cutoffs") c.cutoffs = parse_each<std::size_t>(key, value, parse_integer<std::size_t>);
  else if (key == "runs") c.runs = size();
  else if (key == "rbmf_delta") c.rbmf_delta = real();
  else if (key == "rbmf_lambda") c.rbmf_lambda = real();
  else if (key.rfind("seed_file.", 0) == 0 && key.size() > 10) c.seed_files[key.substr(10)] = value;
  else if (key == "out") c.out = value;
  else if (key == "checkpoint") c.checkpoint = value;
  else if (key == "top_n") c.top_n = size();
  else if (key == "interactive") c.interactive = parse_bool(key, value);
  else if (key == "feedback") c.feedback = value;
  else if (key == "grid.k") c.grid_k = parse_each<std::size_t>(key, value, parse_integer<std::size_t>);
  else if (key == "grid.hidden") c.grid_hidden = parse_each<std::size_t>(key, value, parse_integer<std::size_t>);
  else if (key == "grid.lr") c.grid_lr = parse_each<double>(key, value, parse_real);
  else if (key == "grid.epochs") c.grid_epochs = parse_each<std::size_t>(key, value, parse_integer<std::size_t>);
  else if (key == "grid.t0") c.grid_t0 = parse_each<double>(key, value, parse_real);
  else if (key == "grid.te") {
    c.grid_te = split_list(value);
    for (const auto& te : c.grid_te) {
      if (te != "T0") parse_real(key, te);
    }
    if (c.grid_te.empty()) throw Error("setting 'grid.te' needs at least one value");
  } else if (key == "grid_max_cells") c.grid_max_cells = size();
  else throw Error("unknown setting '" + key + "'");
}

void load_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError(path.string(), line_no, "expected key = value");
    try {
      apply_setting(config, text.substr(0, eq), text.substr(eq + 1));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
}

std::string config_text(const RunConfig& c) {
  std::map<std::string, std::string> kv{
      {"dataset", c.dataset.string()},
      {"delimiter", c.preprocess.delimiter == Delimiter::Tab     ? "tab"
                     : c.preprocess.delimiter == Delimiter::Comma ? "comma"
                                                                  : "::"},
      {"threshold", real_text(c.preprocess.threshold)},
      {"min_count", std::to_string(c.preprocess.min_count)},
      {"split_seed", std::to_string(c.split_seed)},
      {"test_frac", real_text(c.test_frac)},
      {"val_frac", real_text(c.val_frac)},
      {"k", std::to_string(c.train.k)},
      {"hidden", std::to_string(c.train.hidden)},
      {"lr", real_text(c.train.lr)},
      {"epochs", std::to_string(c.train.epochs)},
      {"batch_size", std::to_string(c.train.batch_size)},
      {"t0", real_text(c.train.t0)},
      {"te", real_text(c.train.te)},
      {"retrain_epochs", std::to_string(c.train.retrain_epochs)},
      {"seed", std::to_string(c.train.seed)},
      {"val_every", std::to_string(c.train.val_every)},
      {"methods", join(c.methods)},
      {"cutoffs", join(c.cutoffs)},
      {"runs", std::to_string(c.runs)},
      {"rbmf_delta", real_text(c.rbmf_delta)},
      {"rbmf_lambda", real_text(c.rbmf_lambda)},
      {"top_n", std::to_string(c.top_n)},
      {"grid_max_cells", std::to_string(c.grid_max_cells)},
  };
  for (const auto& [method, path] : c.seed_files) kv["seed_file." + method] = path.string();
  if (!c.grid_k.empty()) kv["grid.k"] = join(c.grid_k);
  if (!c.grid_hidden.empty()) kv["grid.hidden"] = join(c.grid_hidden);
  if (!c.grid_lr.empty()) kv["grid.lr"] = join(c.grid_lr);
  if (!c.grid_epochs.empty()) kv["grid.epochs"] = join(c.grid_epochs);
  if (!c.grid_t0.empty()) kv["grid.t0"] = join(c.grid_t0);
  if (!c.grid_te.empty()) kv["grid.te"] = join(c.grid_te);
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::string data_fingerprint(const RatingMatrix& matrix) {
  std::string bytes = std::to_string(matrix.num_users()) + " " + std::to_string(matrix.num_items()) + "\n";
  for (const auto& row : matrix.rows()) {
    for (const auto i : row) bytes += std::to_string(i) + ' ';
    bytes += '\n';
  }
  for (const auto& t : matrix.user_tokens()) bytes += t + '\n';
  bytes += '\n';
  for (const auto& t : matrix.item_tokens()) bytes += t + '\n';
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

}  // namespace elicit::cli
