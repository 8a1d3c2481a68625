#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// Every Gaussian draw in the toolkit is addressed by (seed, sample, step,
// lane), so a sample can be regenerated on any worker in any order.

#include <array>
#include <cstdint>
#include <limits>

namespace sburgers {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

constexpr void philox_round(PhiloxCounter& ctr, const PhiloxKey& key) noexcept {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const auto lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const auto lo1 = static_cast<std::uint32_t>(p1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace detail

constexpr PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += detail::kPhiloxW0;
      key[1] += detail::kPhiloxW1;
    }
    detail::philox_round(ctr, key);
  }
  return ctr;
}

/// UniformRandomBitGenerator over one Philox substream. The substream is
/// fixed by key and the upper three counter words; the lowest word counts
/// blocks, each block yielding two 64-bit outputs.
class PhiloxEngine {
 public:
  using result_type = std::uint64_t;

  constexpr PhiloxEngine(PhiloxKey key, std::uint32_t w1, std::uint32_t w2, std::uint32_t w3) noexcept
      : key_(key), base_{0u, w1, w2, w3} {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (pos_ == kBuffered) refill();
    return buffer_[pos_++];
  }

 private:
  static constexpr int kBlocks = 8;
  static constexpr int kBuffered = 2 * kBlocks;

  // Blocks are generated in batches so the rounds vectorize across counters.
  void refill() noexcept {
    std::array<PhiloxCounter, kBlocks> out;
    for (int b = 0; b < kBlocks; ++b) {
      PhiloxCounter ctr = base_;
      ctr[0] = block_ + static_cast<std::uint32_t>(b);
      out[b] = philox4x32_10(ctr, key_);
    }
    block_ += kBlocks;
    for (int b = 0; b < kBlocks; ++b) {
      buffer_[2 * b] = (static_cast<std::uint64_t>(out[b][1]) << 32) | out[b][0];
      buffer_[2 * b + 1] = (static_cast<std::uint64_t>(out[b][3]) << 32) | out[b][2];
    }
    pos_ = 0;
  }

  PhiloxKey key_;
  PhiloxCounter base_;
  std::uint32_t block_ = 0;
  std::array<result_type, kBuffered> buffer_{};
  int pos_ = kBuffered;
};

}  // namespace sburgers
