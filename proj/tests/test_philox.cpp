#include <set>

#include <gtest/gtest.h>

#include "sburgers/noise.hpp"
#include "sburgers/philox.hpp"

using namespace sburgers;

// Known-answer vectors published with the Random123 reference implementation.
TEST(Philox4x32, KnownAnswerZero) {
  const PhiloxCounter expect{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u};
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}), expect);
}

TEST(Philox4x32, KnownAnswerAllOnes) {
  const PhiloxCounter expect{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu};
  EXPECT_EQ(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}), expect);
}

TEST(Philox4x32, KnownAnswerPiDigits) {
  const PhiloxCounter expect{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u};
  EXPECT_EQ(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}), expect);
}

TEST(PhiloxEngine, FirstOutputsFollowCounterBlocks) {
  PhiloxEngine e({7, 9}, 1, 2, 3);
  const auto b0 = philox4x32_10({0, 1, 2, 3}, {7, 9});
  const auto b1 = philox4x32_10({1, 1, 2, 3}, {7, 9});
  EXPECT_EQ(e(), (std::uint64_t{b0[1]} << 32) | b0[0]);
  EXPECT_EQ(e(), (std::uint64_t{b0[3]} << 32) | b0[2]);
  EXPECT_EQ(e(), (std::uint64_t{b1[1]} << 32) | b1[0]);
}

TEST(PhiloxEngine, RefillIsSeamless) {
  PhiloxEngine e({1, 2}, 0, 0, 0);
  for (int i = 0; i < 16; ++i) e();
  const auto b8 = philox4x32_10({8, 0, 0, 0}, {1, 2});
  EXPECT_EQ(e(), (std::uint64_t{b8[1]} << 32) | b8[0]);
}

TEST(NoiseStreamAddress, DistinctStreams) {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t sample = 0; sample < 4; ++sample) {
    for (std::uint64_t step = 0; step < 4; ++step) {
      for (std::uint32_t lane : {0u, 1u, 63u, NoiseStream::kInitialDataLane}) {
        firsts.insert(NoiseStream{42, sample, step}.engine(lane)());
      }
    }
  }
  EXPECT_EQ(firsts.size(), 64u);
}

TEST(NoiseStreamAddress, SeedsDiffer) {
  EXPECT_NE(NoiseStream({1, 0, 0}).engine(0)(), NoiseStream({2, 0, 0}).engine(0)());
  EXPECT_NE(NoiseStream({1ull << 32, 0, 0}).engine(0)(), NoiseStream({0, 0, 0}).engine(0)());
}

TEST(StandardNormals, Moments) {
  std::vector<double> v(200000);
  fill_standard_normals(NoiseStream{3, 0, 0}.engine(0), v);
  double m = 0, m2 = 0;
  for (double x : v) {
    m += x;
    m2 += x * x;
  }
  m /= v.size();
  m2 /= v.size();
  EXPECT_NEAR(m, 0.0, 4.0 / std::sqrt(v.size()));
  EXPECT_NEAR(m2, 1.0, 4.0 * std::sqrt(2.0 / v.size()));
}
