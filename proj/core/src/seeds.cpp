#include "elicit/seeds.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <string>

#include "elicit/error.hpp"

namespace elicit {

bool SeedItemset::contains(ItemIndex item) const {
  return std::find(items.begin(), items.end(), item) != items.end();
}

void validate_seeds(const SeedItemset& seeds, std::size_t num_items) {
  std::vector<ItemIndex> sorted = seeds.items;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error("seed itemset contains duplicate items");
  }
  if (!sorted.empty() && sorted.back() >= num_items) {
    throw Error("seed item " + std::to_string(sorted.back()) + " out of range (m=" +
                std::to_string(num_items) + ")");
  }
}

void write_seed_file(const SeedItemset& seeds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto item : seeds.items) out << item << '\n';
  if (!out) throw Error("write failure on " + path.string());
}

SeedItemset read_seed_file(const std::filesystem::path& path, std::optional<std::size_t> expected_k,
                           std::optional<std::size_t> num_items) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open seed file " + path.string());
  SeedItemset seeds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ItemIndex item = 0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), item);
    if (ec != std::errc{} || ptr != line.data() + line.size()) {
      throw ParseError(path.string(), line_no, "expected a non-negative item index");
    }
    seeds.items.push_back(item);
  }
  if (expected_k && seeds.size() != *expected_k) {
    throw Error(path.string() + ": expected " + std::to_string(*expected_k) + " seed items, got " +
                std::to_string(seeds.size()));
  }
  validate_seeds(seeds, num_items.value_or(std::size_t(-1)));
  return seeds;
}

}  // namespace elicit
