#include <cmath>
#include <set>

#include "doctest.h"
#include "tvcn/rng.hpp"

using namespace tvcn;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  CHECK(Philox4x32::generate(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::generate(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
        C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::generate(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("counter_normal is a pure function of its key") {
  CHECK(counter_normal(7, 3, 11) == counter_normal(7, 3, 11));
  CHECK(counter_normal(7, 3, 11) != counter_normal(8, 3, 11));
  CHECK(counter_normal(7, 3, 11) != counter_normal(7, 4, 11));
  CHECK(counter_normal(7, 3, 11) != counter_normal(7, 3, 12));
}

TEST_CASE("counter_normal moments") {
  constexpr std::size_t N = 400000;
  double sum = 0.0, sq = 0.0, quart = 0.0;
  std::size_t beyond = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const double z = counter_normal(42, streams::bootstrap, i);
    sum += z;
    sq += z * z;
    quart += z * z * z * z;
    if (std::abs(z) > 1.959963984540054) ++beyond;
  }
  const double mean = sum / N;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(sq / N - 1.0) < 0.01);
  CHECK(std::abs(quart / N - 3.0) < 0.05);
  CHECK(std::abs(static_cast<double>(beyond) / N - 0.05) < 0.002);
}

TEST_CASE("mix_seed spreads nearby seeds") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(mix_seed(1, s));
  CHECK(seen.size() == 1000);
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
}
