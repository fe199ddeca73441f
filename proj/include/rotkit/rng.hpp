#pragma once

#include <array>
#include <cstdint>

namespace rotkit {

// Philox4x32-10 counter-based generator. Chosen over std engines because runs
// must be bit-exact across parallel workers: every consumer owns an explicit
// (seed, stream) pair and streams can be split without touching the parent.
class Philox {
 public:
  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0);

  // Derives an independent child stream. The parent state is not advanced.
  Philox split(std::uint64_t substream) const;

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  double next_double();  // uniform in [0, 1), 53-bit resolution
  double next_gauss();   // standard normal via Box-Muller

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // One keyed block, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(const std::array<std::uint32_t, 4>& counter,
                                            const std::array<std::uint32_t, 2>& key);

 private:
  void refill();

  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rotkit
