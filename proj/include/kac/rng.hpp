// Copyright 2026 The kacchaos Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace kac {

/// Philox4x32-10 block cipher (Salmon et al., SC'11). Pure function of
/// (counter, key); every stream below is built on top of it.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

std::uint64_t splitmix64(std::uint64_t x);

/// Independent sub-streams of one replica.
enum class Channel : std::uint32_t {
  kDynamics = 0,
  kInitial = 1,
  kReference = 2,
  kBootstrap = 3,
  kAuxiliary = 4,
};

/// Counter-based random stream keyed by (seed, stream id, channel).
///
/// The n-th output depends only on the key and n, so replicas driven by
/// different stream ids reproduce bit-for-bit regardless of scheduling.
/// Satisfies UniformRandomBitGenerator.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::uint64_t stream_id,
               Channel channel = Channel::kDynamics);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_pos();
  double exponential(double rate);
  double normal();
  /// Uniform integer in [0, n), unbiased.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  /// Number of 128-bit blocks consumed so far.
  std::uint64_t blocks() const { return block_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint32_t, 2> key_{};
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int available_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace kac
