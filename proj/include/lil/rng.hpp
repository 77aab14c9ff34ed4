#pragma once

#include <array>
#include <cstdint>

namespace lil {

/// Philox4x32-10 counter-based bijection (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

/// Deterministic random stream keyed by (seed, substream).
///
/// Output block b of substream s under seed k is philox4x32((b, s), k), so any
/// two substreams are independent and a stream's output never depends on
/// which thread consumes it or on how many other streams exist.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t substream);

  std::uint64_t next_u64();
  /// Uniform on (0, 1] with 53 random bits.
  double next_uniform();
  /// Standard normal (Box-Muller on two uniforms, pairs cached).
  double next_normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t substream() const { return substream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t substream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int pos_ = 2;
  bool has_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace lil
