#include "elicit/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "elicit/error.hpp"
#include "elicit/rng.hpp"

namespace elicit {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line, std::string_view delim) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + delim.size();
  }
  return fields;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw Error("read failure on " + path.string());
  return std::move(buffer).str();
}

}  // namespace

Delimiter parse_delimiter(std::string_view name) {
  if (name == "::") return Delimiter::DoubleColon;
  if (name == "tab" || name == "\t" || name == "\\t") return Delimiter::Tab;
  if (name == "comma" || name == ",") return Delimiter::Comma;
  throw Error("unknown delimiter '" + std::string(name) + "' (expected ::, tab or comma)");
}

std::string_view delimiter_text(Delimiter d) noexcept {
  switch (d) {
    case Delimiter::DoubleColon: return "::";
    case Delimiter::Tab: return "\t";
    case Delimiter::Comma: return ",";
  }
  return "::";
}

std::vector<InteractionRecord> parse_interactions(std::string_view text, Delimiter delimiter,
                                                  const std::string& source) {
  const auto delim = delimiter_text(delimiter);
  std::vector<InteractionRecord> records;
  std::size_t line_no = 0;
  bool seen_content = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;

    const bool first_content = !seen_content;
    seen_content = true;

    const auto fields = split_fields(line, delim);
    if (fields.size() < 3) {
      throw ParseError(source, line_no, "expected at least 3 fields, got " +
                                            std::to_string(fields.size()));
    }
    InteractionRecord rec;
    rec.user_token = std::string(trim(fields[0]));
    rec.item_token = std::string(trim(fields[1]));
    if (!parse_number(fields[2], rec.rating) || !std::isfinite(rec.rating)) {
      if (first_content) continue;  // header line
      throw ParseError(source, line_no,
                       "rating field '" + std::string(trim(fields[2])) + "' is not a number");
    }
    if (rec.user_token.empty() || rec.item_token.empty()) {
      throw ParseError(source, line_no, "empty user or item token");
    }
    if (fields.size() >= 4 && !trim(fields[3]).empty()) {
      std::int64_t ts = 0;
      if (!parse_number(fields[3], ts)) {
        throw ParseError(source, line_no, "timestamp field is not an integer");
      }
      rec.timestamp = ts;
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw DegenerateDataError(source + ": no interaction records");
  return records;
}

std::vector<InteractionRecord> load_interactions(const std::filesystem::path& path,
                                                 Delimiter delimiter) {
  if (!std::filesystem::exists(path)) throw Error("no such file: " + path.string());
  return parse_interactions(read_file(path), delimiter, path.string());
}

std::vector<InteractionRecord> binarize(std::vector<InteractionRecord> records,
                                        double threshold) {
  std::erase_if(records, [threshold](const InteractionRecord& r) { return !(r.rating > threshold); });
  for (auto& r : records) r.rating = 1.0;
  return records;
}

std::vector<InteractionRecord> filter_min_ratings(std::vector<InteractionRecord> records,
                                                  std::size_t min_count) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& r : records) ++counts[r.user_token];
  std::erase_if(records, [&](const InteractionRecord& r) { return counts[r.user_token] < min_count; });
  if (records.empty()) {
    throw DegenerateDataError("no user has at least " + std::to_string(min_count) +
                              " positive interactions");
  }
  return records;
}

RatingMatrix::RatingMatrix(std::vector<std::vector<ItemIndex>> rows,
                           std::vector<std::string> user_tokens,
                           std::vector<std::string> item_tokens)
    : rows_(std::move(rows)),
      user_tokens_(std::move(user_tokens)),
      item_tokens_(std::move(item_tokens)) {
  if (rows_.size() != user_tokens_.size()) throw Error("row count does not match user map size");
  const std::size_t m = item_tokens_.size();
  std::vector<bool> column_used(m, false);
  for (std::size_t u = 0; u < rows_.size(); ++u) {
    const auto& r = rows_[u];
    if (r.empty()) throw Error("user " + std::to_string(u) + " has no positive items");
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (r[j] >= m) throw Error("item index out of range in row " + std::to_string(u));
      if (j > 0 && r[j] <= r[j - 1]) {
        throw Error("row " + std::to_string(u) + " is not strictly increasing");
      }
      column_used[r[j]] = true;
    }
    nnz_ += r.size();
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!column_used[i]) throw Error("item " + std::to_string(i) + " has no positive users");
  }
  for (std::size_t u = 0; u < user_tokens_.size(); ++u) {
    if (!user_lookup_.emplace(user_tokens_[u], static_cast<UserIndex>(u)).second) {
      throw Error("duplicate user token '" + user_tokens_[u] + "'");
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!item_lookup_.emplace(item_tokens_[i], static_cast<ItemIndex>(i)).second) {
      throw Error("duplicate item token '" + item_tokens_[i] + "'");
    }
  }
}

double RatingMatrix::sparsity() const noexcept {
  const double cells = static_cast<double>(num_users()) * static_cast<double>(num_items());
  return cells > 0 ? 1.0 - static_cast<double>(nnz_) / cells : 0.0;
}

bool RatingMatrix::contains(UserIndex u, ItemIndex i) const {
  const auto& r = rows_.at(u);
  return std::binary_search(r.begin(), r.end(), i);
}

std::optional<UserIndex> RatingMatrix::user_index(const std::string& token) const {
  const auto it = user_lookup_.find(token);
  if (it == user_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<ItemIndex> RatingMatrix::item_index(const std::string& token) const {
  const auto it = item_lookup_.find(token);
  if (it == item_lookup_.end()) return std::nullopt;
  return it->second;
}

RatingMatrix build_matrix(const std::vector<InteractionRecord>& records) {
  if (records.empty()) throw DegenerateDataError("cannot build a matrix from zero records");
  std::unordered_map<std::string, UserIndex> users;
  std::unordered_map<std::string, ItemIndex> items;
  std::vector<std::string> user_tokens;
  std::vector<std::string> item_tokens;
  std::vector<std::vector<ItemIndex>> rows;
  for (const auto& r : records) {
    auto [uit, new_user] = users.try_emplace(r.user_token, static_cast<UserIndex>(user_tokens.size()));
    if (new_user) {
      user_tokens.push_back(r.user_token);
      rows.emplace_back();
    }
    auto [iit, new_item] = items.try_emplace(r.item_token, static_cast<ItemIndex>(item_tokens.size()));
    if (new_item) item_tokens.push_back(r.item_token);
    rows[uit->second].push_back(iit->second);
  }
  for (auto& row : rows) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
  return RatingMatrix(std::move(rows), std::move(user_tokens), std::move(item_tokens));
}

RatingMatrix prepare_matrix(const std::filesystem::path& path, const PreprocessOptions& options) {
  auto records = load_interactions(path, options.delimiter);
  records = binarize(std::move(records), options.threshold);
  records = filter_min_ratings(std::move(records), options.min_count);
  return build_matrix(records);
}

SplitSpec split_users(const RatingMatrix& matrix, std::uint64_t seed, double test_frac,
                      double val_frac_of_train) {
  if (!(test_frac > 0.0 && test_frac < 1.0) || !(val_frac_of_train > 0.0 && val_frac_of_train < 1.0)) {
    throw Error("split fractions must lie in (0, 1)");
  }
  const std::size_t n = matrix.num_users();
  if (n < 10) throw DegenerateDataError("need at least 10 users to split, got " + std::to_string(n));

  std::vector<UserIndex> order(n);
  std::iota(order.begin(), order.end(), UserIndex{0});
  Rng rng(seed);
  rng.shuffle(std::span<UserIndex>(order));

  const auto n_test = static_cast<std::size_t>(std::lround(test_frac * static_cast<double>(n)));
  const auto n_val =
      static_cast<std::size_t>(std::lround(val_frac_of_train * static_cast<double>(n - n_test)));

  SplitSpec split;
  split.rng_seed = seed;
  split.test_users.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.val_users.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test),
                         order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
  split.train_users.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), order.end());
  std::sort(split.test_users.begin(), split.test_users.end());
  std::sort(split.val_users.begin(), split.val_users.end());
  std::sort(split.train_users.begin(), split.train_users.end());
  return split;
}

void write_matrix_snapshot(const RatingMatrix& matrix, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / kSnapshotMatrixFile, std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / kSnapshotMatrixFile).string());
    out << "ELICIT-MATRIX v1 n=" << matrix.num_users() << " m=" << matrix.num_items()
        << " nnz=" << matrix.nnz() << '\n';
    for (std::size_t u = 0; u < matrix.num_users(); ++u) {
      out << u << ':';
      const auto& row = matrix.row(static_cast<UserIndex>(u));
      for (std::size_t j = 0; j < row.size(); ++j) out << (j ? " " : "") << row[j];
      out << '\n';
    }
    if (!out) throw Error("write failure on " + (dir / kSnapshotMatrixFile).string());
  }
  const auto write_map = [&](const std::vector<std::string>& tokens, std::string_view name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / name).string());
    for (std::size_t i = 0; i < tokens.size(); ++i) out << tokens[i] << '\t' << i << '\n';
    if (!out) throw Error("write failure on " + (dir / name).string());
  };
  write_map(matrix.user_tokens(), kSnapshotUsersFile);
  write_map(matrix.item_tokens(), kSnapshotItemsFile);
}

namespace {

std::vector<std::string> read_token_map(const std::filesystem::path& path, std::size_t expected) {
  const auto text = read_file(path);
  std::vector<std::string> tokens(expected);
  std::vector<bool> seen(expected, false);
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    std::size_t index = 0;
    if (tab == std::string::npos || !parse_number(std::string_view(line).substr(tab + 1), index)) {
      throw ParseError(path.string(), line_no, "expected <token><TAB><index>");
    }
    if (index >= expected || seen[index]) {
      throw ParseError(path.string(), line_no, "index out of range or repeated");
    }
    seen[index] = true;
    tokens[index] = line.substr(0, tab);
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw Error(path.string() + ": map does not cover every index");
  }
  return tokens;
}

}  // namespace

RatingMatrix read_matrix_snapshot(const std::filesystem::path& dir) {
  const auto matrix_path = dir / kSnapshotMatrixFile;
  if (!std::filesystem::exists(matrix_path)) {
    throw Error("no matrix snapshot at " + matrix_path.string());
  }
  const auto text = read_file(matrix_path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(matrix_path.string(), 1, "empty snapshot");
  std::size_t n = 0, m = 0, nnz = 0;
  {
    std::istringstream header(line);
    std::string magic, version, fn, fm, fz;
    header >> magic >> version >> fn >> fm >> fz;
    const auto value = [](const std::string& field, std::string_view key, std::size_t& out) {
      return field.starts_with(key) && parse_number(std::string_view(field).substr(key.size()), out);
    };
    if (magic != "ELICIT-MATRIX" || version != "v1" || !value(fn, "n=", n) ||
        !value(fm, "m=", m) || !value(fz, "nnz=", nnz)) {
      throw ParseError(matrix_path.string(), 1, "bad snapshot header");
    }
  }
  std::vector<std::vector<ItemIndex>> rows(n);
  std::size_t line_no = 1;
  std::size_t next_user = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto colon = line.find(':');
    std::size_t u = 0;
    if (colon == std::string::npos || !parse_number(std::string_view(line).substr(0, colon), u) ||
        u != next_user || u >= n) {
      throw ParseError(matrix_path.string(), line_no, "bad row prefix");
    }
    std::istringstream items(line.substr(colon + 1));
    std::string tok;
    while (items >> tok) {
      ItemIndex i = 0;
      if (!parse_number(std::string_view(tok), i)) {
        throw ParseError(matrix_path.string(), line_no, "bad item index '" + tok + "'");
      }
      rows[u].push_back(i);
    }
    ++next_user;
  }
  if (next_user != n) throw Error(matrix_path.string() + ": expected " + std::to_string(n) + " rows");
  auto users = read_token_map(dir / kSnapshotUsersFile, n);
  auto items = read_token_map(dir / kSnapshotItemsFile, m);
  RatingMatrix matrix(std::move(rows), std::move(users), std::move(items));
  if (matrix.nnz() != nnz) throw Error(matrix_path.string() + ": nnz does not match header");
  return matrix;
}

}  // namespace elicit
