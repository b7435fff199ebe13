#pragma once

#include <filesystem>
#include <string>

#include "elicit/model.hpp"

namespace elicit {

// Binary layout, little-endian throughout:
//   "DRE1" | u32 k | u32 m | u32 d | f32 phi[k*m] | f32 w1[k*d] | f32 b1[d]
//   | f32 w2[d*m] | f32 b2[m] | u32 seeds[k]
// Matrices are row-major.
struct Checkpoint {
  EncoderLogits encoder;
  DecoderParams decoder;
  SeedItemset seeds;
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(std::string_view bytes);

void write_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace elicit
