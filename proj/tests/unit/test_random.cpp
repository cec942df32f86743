#include "helpers.hpp"

#include "mardid/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace mardid;

TEST_CASE("philox4x32-10 known-answer vectors") {
  const auto zero = philox4x32({0, 0, 0, 0}, {0, 0});
  REQUIRE(zero == std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  const auto ones = philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff});
  REQUIRE(ones == std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
}

TEST_CASE("streams are reproducible and distinct") {
  RandomSource a(42, 3), b(42, 3), c(42, 4), d(43, 3);
  bool differs_stream = false, differs_seed = false;
  for (int k = 0; k < 100; ++k) {
    const auto va = a.next_u64();
    REQUIRE(va == b.next_u64());
    differs_stream |= va != c.next_u64();
    differs_seed |= va != d.next_u64();
  }
  REQUIRE(differs_stream);
  REQUIRE(differs_seed);

  RandomSource parent(5, 1);
  auto c1 = parent.derive(1), c1b = parent.derive(1), c2 = parent.derive(2);
  REQUIRE(c1.next_u64() == c1b.next_u64());
  REQUIRE(c1.stream_id() != c2.stream_id());
}

TEST_CASE("bernoulli edge probabilities") {
  RandomSource rng(1);
  const auto zeros = draws(rng, Distribution::bernoulli(0.0), 1000);
  const auto ones = draws(rng, Distribution::bernoulli(1.0), 1000);
  REQUIRE(std::all_of(zeros.begin(), zeros.end(), [](double v) { return v == 0.0; }));
  REQUIRE(std::all_of(ones.begin(), ones.end(), [](double v) { return v == 1.0; }));
  REQUIRE_THROWS_KIND(draws(rng, Distribution::bernoulli(1.5), 3), ErrorKind::InvalidProbability);
  REQUIRE_THROWS_KIND(rng.bernoulli(-0.1), ErrorKind::InvalidProbability);
}

TEST_CASE("standard normal draws pass moment checks") {
  RandomSource rng(2024, 9);
  const std::size_t n = 1'000'000;
  const auto z = draws(rng, Distribution::standard_normal(), n);
  const double mean = std::accumulate(z.begin(), z.end(), 0.0) / n;
  double var = 0.0;
  for (double v : z) var += (v - mean) * (v - mean);
  var /= n;
  REQUIRE(std::abs(mean) < 0.004);
  REQUIRE(std::abs(mean) < 4.0 / std::sqrt(double(n)));
  REQUIRE(std::abs(var - 1.0) < 8.0 / std::sqrt(double(n)));
}

TEST_CASE("uniforms stay inside the open unit interval and below() is in range") {
  RandomSource rng(8);
  for (int k = 0; k < 100000; ++k) {
    const double u = rng.uniform();
    REQUIRE((u > 0.0 && u < 1.0));
    REQUIRE(rng.below(7) < 7);
  }
}
