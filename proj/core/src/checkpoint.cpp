#include "elicit/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "elicit/error.hpp"

namespace elicit {
namespace {

constexpr std::string_view kMagic = "DRE1";

void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<char>((v >> shift) & 0xffu));
}

void put_floats(std::string& out, const float* data, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) put_u32(out, std::bit_cast<std::uint32_t>(data[i]));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    }
    pos_ += 4;
    return v;
  }

  void floats(float* out, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) out[i] = std::bit_cast<float>(u32());
  }

  std::string_view take(std::size_t n) {
    need(n);
    const auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const noexcept { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error("checkpoint is truncated");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& c) {
  const auto k = c.encoder.k();
  const auto m = c.encoder.m();
  const auto d = c.decoder.hidden();
  if (c.decoder.k() != k || c.decoder.m() != m || c.seeds.size() != k) {
    throw Error("checkpoint parts have inconsistent shapes");
  }
  std::string out(kMagic);
  put_u32(out, static_cast<std::uint32_t>(k));
  put_u32(out, static_cast<std::uint32_t>(m));
  put_u32(out, static_cast<std::uint32_t>(d));
  put_floats(out, c.encoder.phi.data(), k * m);
  for (const auto t : c.decoder.tensors()) put_floats(out, t.data(), t.size());
  for (const auto s : c.seeds.items) put_u32(out, s);
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(kMagic.size()) != kMagic) throw Error("not a DRE1 checkpoint");
  const std::size_t k = in.u32();
  const std::size_t m = in.u32();
  const std::size_t d = in.u32();
  if (k == 0 || m == 0 || d == 0 || k > m) throw Error("checkpoint header has invalid dimensions");
  const std::size_t expected = 16 + 4 * (k * m + k * d + d + d * m + m + k);
  if (bytes.size() != expected) {
    throw Error("checkpoint size " + std::to_string(bytes.size()) + " does not match header (" +
                std::to_string(expected) + " bytes expected)");
  }
  Checkpoint c;
  c.encoder.phi.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m));
  in.floats(c.encoder.phi.data(), k * m);
  c.decoder = DecoderParams::zeros(k, d, m);
  for (auto t : c.decoder.tensors()) in.floats(t.data(), t.size());
  c.seeds.items.resize(k);
  for (auto& s : c.seeds.items) s = in.u32();
  validate_seeds(c.seeds, m);
  return c;
}

void write_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failure on " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace elicit
