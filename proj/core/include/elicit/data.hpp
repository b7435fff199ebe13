#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace elicit {

using UserIndex = std::uint32_t;
using ItemIndex = std::uint32_t;

struct InteractionRecord {
  std::string user_token;
  std::string item_token;
  double rating = 0.0;
  std::optional<std::int64_t> timestamp;

  bool operator==(const InteractionRecord&) const = default;
};

enum class Delimiter { DoubleColon, Tab, Comma };

/// Parses "::", "tab"/"\t", "comma"/",".
Delimiter parse_delimiter(std::string_view name);
std::string_view delimiter_text(Delimiter d) noexcept;

/// Reads `user<d>item<d>rating[<d>timestamp]` lines. A first line whose rating
/// field is not numeric is treated as a header and skipped; any later
/// unparseable line is a ParseError. Blank lines are ignored.
std::vector<InteractionRecord> load_interactions(const std::filesystem::path& path,
                                                 Delimiter delimiter);
std::vector<InteractionRecord> parse_interactions(std::string_view text, Delimiter delimiter,
                                                  const std::string& source = "<memory>");

/// Keeps records with rating strictly above `threshold`, setting their rating to 1.
std::vector<InteractionRecord> binarize(std::vector<InteractionRecord> records,
                                        double threshold = 3.5);

/// Single pass: drops every record of users with fewer than `min_count` records.
std::vector<InteractionRecord> filter_min_ratings(std::vector<InteractionRecord> records,
                                                  std::size_t min_count);

/// Binary user x item matrix stored as sorted per-user positive item lists.
class RatingMatrix {
 public:
  RatingMatrix() = default;

  /// Validates every invariant; throws Error on violation.
  RatingMatrix(std::vector<std::vector<ItemIndex>> rows, std::vector<std::string> user_tokens,
               std::vector<std::string> item_tokens);

  std::size_t num_users() const noexcept { return rows_.size(); }
  std::size_t num_items() const noexcept { return item_tokens_.size(); }
  std::size_t nnz() const noexcept { return nnz_; }
  double sparsity() const noexcept;

  const std::vector<ItemIndex>& row(UserIndex u) const { return rows_.at(u); }
  const std::vector<std::vector<ItemIndex>>& rows() const noexcept { return rows_; }
  bool contains(UserIndex u, ItemIndex i) const;

  const std::vector<std::string>& user_tokens() const noexcept { return user_tokens_; }
  const std::vector<std::string>& item_tokens() const noexcept { return item_tokens_; }
  std::optional<UserIndex> user_index(const std::string& token) const;
  std::optional<ItemIndex> item_index(const std::string& token) const;

  bool operator==(const RatingMatrix& other) const {
    return rows_ == other.rows_ && user_tokens_ == other.user_tokens_ &&
           item_tokens_ == other.item_tokens_;
  }

 private:
  std::vector<std::vector<ItemIndex>> rows_;
  std::vector<std::string> user_tokens_;
  std::vector<std::string> item_tokens_;
  std::unordered_map<std::string, UserIndex> user_lookup_;
  std::unordered_map<std::string, ItemIndex> item_lookup_;
  std::size_t nnz_ = 0;
};

/// Indices follow first appearance in `records`. Duplicate (user, item) pairs
/// collapse to one positive.
RatingMatrix build_matrix(const std::vector<InteractionRecord>& records);

struct PreprocessOptions {
  Delimiter delimiter = Delimiter::DoubleColon;
  double threshold = 3.5;
  std::size_t min_count = 5;
};

/// load -> binarize -> filter -> build.
RatingMatrix prepare_matrix(const std::filesystem::path& path, const PreprocessOptions& options);

struct SplitSpec {
  std::vector<UserIndex> train_users;
  std::vector<UserIndex> val_users;
  std::vector<UserIndex> test_users;
  std::uint64_t rng_seed = 0;

  bool operator==(const SplitSpec&) const = default;
};

/// Uniform shuffle of [0, n), then test = first round(test_frac * n), validation =
/// next round(val_frac_of_train * remaining), train = the rest. Lists are sorted.
SplitSpec split_users(const RatingMatrix& matrix, std::uint64_t seed, double test_frac = 0.2,
                      double val_frac_of_train = 0.1);

// Snapshot format:
//   ELICIT-MATRIX v1 n=<n> m=<m> nnz=<nnz>
//   <user_idx>:<item> <item> ...
// plus users.map / items.map with `<token>\t<index>` lines.
inline constexpr std::string_view kSnapshotMatrixFile = "matrix.txt";
inline constexpr std::string_view kSnapshotUsersFile = "users.map";
inline constexpr std::string_view kSnapshotItemsFile = "items.map";

void write_matrix_snapshot(const RatingMatrix& matrix, const std::filesystem::path& dir);
RatingMatrix read_matrix_snapshot(const std::filesystem::path& dir);

}  // namespace elicit
