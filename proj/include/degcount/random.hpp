#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace degcount {

/// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
/// Counter-based: the output is a pure function of (key, counter), so every
/// sample or trial can own an independent stream addressed by its index.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Counter operator()(Counter ctr) const {
    std::array<std::uint32_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  std::array<std::uint32_t, 2> key_;
};

/// Sequential view of the stream for one (seed, stream index) pair.
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint64_t stream) : gen_(seed), stream_(stream) {}

  /// Two doubles in (0, 1), 53 random bits each.
  std::pair<double, double> uniform_pair() {
    const auto out = gen_({static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32),
                           static_cast<std::uint32_t>(call_), static_cast<std::uint32_t>(call_ >> 32)});
    ++call_;
    const std::uint64_t a = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    const std::uint64_t b = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
    return {to_open_unit(a), to_open_unit(b)};
  }

  std::uint64_t next_u64() {
    const auto out = gen_({static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32),
                           static_cast<std::uint32_t>(call_), static_cast<std::uint32_t>(call_ >> 32)});
    ++call_;
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
  }

  /// Pair of independent standard normals (Box-Muller).
  std::pair<double, double> normal_pair() {
    const auto [u1, u2] = uniform_pair();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
  }

 private:
  static double to_open_unit(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  Philox4x32 gen_;
  std::uint64_t stream_;
  std::uint64_t call_ = 0;
};

}  // namespace degcount
