#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace mardid {

/// Philox4x32-10 block function (Salmon et al.), exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Counter-based random stream keyed by (seed, stream_id). Two sources with
/// the same key produce the same sequence; distinct stream ids are
/// statistically independent, so replications can be drawn in any order or
/// on any thread. Not thread-safe: copy per task.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed, std::uint64_t stream_id = 0) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept;
  double normal() noexcept;
  bool bernoulli(double p);
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept;

  /// Deterministic child stream; children of distinct ids never overlap.
  RandomSource derive(std::uint64_t child_id) const noexcept;

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct Distribution {
  enum class Kind { StandardNormal, Bernoulli };
  Kind kind = Kind::StandardNormal;
  double p = 0.5;

  static Distribution standard_normal() { return {}; }
  static Distribution bernoulli(double p) { return {Kind::Bernoulli, p}; }
};

/// n draws from dist, advancing the source. Throws InvalidProbability for p outside [0,1].
std::vector<double> draws(RandomSource& source, const Distribution& dist, std::size_t n);

/// Mixes a tuple of keys into one 64-bit stream id (splitmix64 chaining).
std::uint64_t stream_key(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) noexcept;

}  // namespace mardid
