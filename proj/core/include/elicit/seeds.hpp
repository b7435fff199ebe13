#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "elicit/data.hpp"

namespace elicit {

/// Ordered list of distinct item indices shown to every new user.
struct SeedItemset {
  std::vector<ItemIndex> items;

  std::size_t size() const noexcept { return items.size(); }
  bool contains(ItemIndex item) const;
  bool operator==(const SeedItemset&) const = default;
};

/// Throws Error on duplicates or indices >= num_items.
void validate_seeds(const SeedItemset& seeds, std::size_t num_items);

// Seed file: one ASCII decimal item index per line, exactly k lines.
void write_seed_file(const SeedItemset& seeds, const std::filesystem::path& path);
SeedItemset read_seed_file(const std::filesystem::path& path,
                           std::optional<std::size_t> expected_k = std::nullopt,
                           std::optional<std::size_t> num_items = std::nullopt);

}  // namespace elicit
