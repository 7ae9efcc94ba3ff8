#include <gtest/gtest.h>

#include "support.hpp"

using namespace chunkalign;

TEST(Synthetic, NoiselessIdentityCopiesVectors) {
  SyntheticSpec spec;
  spec.pairs = 20;
  spec.sigma = 0.0;
  const SyntheticCorpus c = generate(spec, 3);
  for (const auto& p : c.pairs) {
    ASSERT_EQ(p.n(), p.m());
    for (std::size_t i = 0; i < p.n(); ++i) {
      EXPECT_EQ(c.table.lookup(p.x.tokens[i].surface), c.table.lookup(p.y.tokens[i].surface));
      EXPECT_TRUE(p.gold->aligned(i, i));
    }
    EXPECT_TRUE(validate(p).empty());
  }
}

TEST(Synthetic, FullyUnalignedHasNoGold) {
  SyntheticSpec spec;
  spec.pairs = 20;
  spec.mode = SyntheticMode::Unaligned;
  spec.unaligned_fraction = 1.0;
  for (const auto& p : generate(spec, 5).pairs) EXPECT_TRUE(p.gold->pairs().empty());
}

TEST(Synthetic, SameSeedSameCorpus) {
  SyntheticSpec spec;
  spec.pairs = 15;
  spec.mode = SyntheticMode::Permutation;
  const SyntheticCorpus a = generate(spec, 9), b = generate(spec, 9);
  EXPECT_EQ(a.pairs, b.pairs);
  for (const auto& p : a.pairs)
    for (const auto& t : p.y.tokens) EXPECT_EQ(a.table.lookup(t.surface), b.table.lookup(t.surface));
  EXPECT_FALSE(generate(spec, 10).pairs == a.pairs);
}

TEST(Synthetic, NearestNeighbourRecoversGoldWithoutNoise) {
  SyntheticSpec spec;
  spec.pairs = 30;
  spec.sigma = 0.0;
  spec.mode = SyntheticMode::Permutation;
  const SyntheticCorpus c = generate(spec, 2);
  for (const auto& p : c.pairs)
    for (std::size_t i = 0; i < p.n(); ++i) {
      std::size_t best = 0;
      double best_d = 1e300;
      for (std::size_t j = 0; j < p.m(); ++j) {
        const double d = (c.table.lookup(p.x.tokens[i].surface) - c.table.lookup(p.y.tokens[j].surface)).norm();
        if (d < best_d) best_d = d, best = j;
      }
      EXPECT_TRUE(p.gold->aligned(i, best));
    }
}

TEST(Synthetic, NearDuplicatesAreUnalignedCopies) {
  SyntheticSpec spec;
  spec.pairs = 10;
  spec.near_duplicates = 2;
  for (const auto& p : generate(spec, 4).pairs) {
    EXPECT_EQ(p.n(), p.m() + 2);
    EXPECT_TRUE(p.gold->x_unaligned(p.n() - 1));
    EXPECT_TRUE(p.gold->x_unaligned(p.n() - 2));
  }
}

TEST(Synthetic, InvalidSpecRejected) {
  SyntheticSpec spec;
  spec.sigma = -1;
  EXPECT_THROW(generate(spec, 1), ConfigError);
  spec.sigma = 0.1;
  spec.min_chunks = 4;
  spec.max_chunks = 3;
  EXPECT_THROW(generate(spec, 1), ConfigError);
}
