#pragma once

#include <array>
#include <cstdint>

namespace augat {

/// Counter-based random stream (Philox4x32-10) keyed by (seed, streamId).
///
/// Two streams built from the same key produce the same sequence. Streams
/// are cheap to construct, so the usual pattern is one stream per image,
/// derived with split() from a parent stream.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t streamId);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }
  /// Number of 64-bit words consumed so far.
  std::uint64_t position() const noexcept { return drawn_; }

  std::uint64_t next_u64();
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();
  /// Uniform integer in [lo, hi], unbiased. Throws std::invalid_argument if lo > hi.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Uniform double in [lo, hi).
  double uniform_real(double lo, double hi);
  bool bernoulli(double p) { return uniform01() < p; }
  double normal();

  /// Child stream whose key depends on this stream's key and `id`, not on
  /// how much of this stream has been consumed.
  RngStream split(std::uint64_t id) const;

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::uint64_t drawn_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

/// SplitMix64 finalizer, used for key derivation and hashing.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace augat
