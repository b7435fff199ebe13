#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace elicit {

// All randomness in the library flows through Rng. The engine is
// std::mt19937_64, whose output sequence is fixed by the C++ standard; the
// conversions below are hand-written because the std distributions are not
// required to be identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform on [0, bound), unbiased (rejection sampling).
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal via the Box-Muller transform.
  double normal();

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Seed for an independent stream, e.g. ("RAN++", run 3) under a master seed:
///   splitmix64(splitmix64(master ^ fnv1a64(stream)) + index)
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::uint64_t index) noexcept;

}  // namespace elicit
