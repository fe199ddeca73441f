#include "rotkit/rng.hpp"

#include <cmath>

namespace rotkit {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void round_once(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> Philox::block(const std::array<std::uint32_t, 4>& counter,
                                           const std::array<std::uint32_t, 2>& key) {
  std::array<std::uint32_t, 4> c = counter;
  std::array<std::uint32_t, 2> k = key;
  for (int r = 0; r < 10; ++r) {
    round_once(c, k);
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

Philox::Philox(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

Philox Philox::split(std::uint64_t substream) const {
  // Derive the child stream with a block keyed off the seed; the xor masks
  // keep split output disjoint from the main counter sequence.
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(substream), static_cast<std::uint32_t>(substream >> 32),
      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  const std::array<std::uint32_t, 2> key = {
      static_cast<std::uint32_t>(seed_) ^ 0x243F6A88u,
      static_cast<std::uint32_t>(seed_ >> 32) ^ 0x85A308D3u};
  const auto out = block(ctr, key);
  const std::uint64_t child = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  return Philox(seed_, child);
}

void Philox::refill() {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                            static_cast<std::uint32_t>(seed_ >> 32)};
  buf_ = block(ctr, key);
  ++counter_;
  pos_ = 0;
}

std::uint32_t Philox::next_u32() {
  if (pos_ >= 4) refill();
  return buf_[pos_++];
}

std::uint64_t Philox::next_u64() {
  const std::uint64_t hi = next_u32();
  const std::uint64_t lo = next_u32();
  return (hi << 32) | lo;
}

double Philox::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Philox::next_gauss() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - next_double();  // (0, 1], keeps log finite
  const double u2 = next_double();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * M_PI * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

}  // namespace rotkit
