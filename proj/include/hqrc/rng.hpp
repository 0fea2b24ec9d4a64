#pragma once

#include <cstdint>
#include <limits>

namespace hqrc {

/// PCG-XSH-RR with 64-bit state and 32-bit output (O'Neill's pcg32).
///
/// Every random draw in the toolkit goes through this generator so that a
/// seed fully determines a run. Doubles are built from two consecutive
/// outputs: `((hi << 32) | lo) >> 11` scaled by 2^-53, giving a uniform
/// value in [0, 1).
class Pcg32 {
 public:
  using result_type = std::uint32_t;

  static constexpr std::uint64_t kDefaultStream = 0xda3e39cb94b95bdbULL;

  explicit Pcg32(std::uint64_t seed = 0x853c49e6748fea9bULL, std::uint64_t stream = kDefaultStream);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double uniform01();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [0, bound).
  std::uint32_t below(std::uint32_t bound);

  std::uint32_t operator()() { return next_u32(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  bool operator==(const Pcg32&) const = default;

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 0;
};

/// Stream identifiers keep independent consumers from sharing draws.
namespace streams {
inline constexpr std::uint64_t kIsing = 1;
inline constexpr std::uint64_t kFeedback = 2;
inline constexpr std::uint64_t kEsn = 3;
inline constexpr std::uint64_t kPerturbation = 4;
inline constexpr std::uint64_t kSynth = 5;
}  // namespace streams

}  // namespace hqrc
