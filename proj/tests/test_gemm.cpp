#include <gtest/gtest.h>

#include <random>

#include "bitserial/gemm.hpp"
#include "support.hpp"

using namespace bitserial;
using namespace testing_support;

TEST(Oracle, ExampleProduct) {
  IntMatrix l(2, 2, 2, false, {2, 0, 1, 3});
  IntMatrix r(2, 2, 2, false, {0, 1, 1, 2});
  EXPECT_EQ(matmul_oracle(l, r), ResultMatrix(2, 2, {0, 2, 3, 7}));
}

TEST(Oracle, IdentityAndNegative) {
  IntMatrix id(3, 3, 1, false, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  std::mt19937_64 rng(1);
  auto m = random_int_matrix(rng, 3, 4, 5, true);
  auto p = matmul_oracle(id, m);
  EXPECT_TRUE(equals(p, naive_product(id, m)));
  for (std::size_t i = 0; i < 12; i++) EXPECT_EQ(p.elems[i], m.elems()[i]);
  EXPECT_EQ(matmul_oracle(IntMatrix(1, 1, 2, true, {-2}), IntMatrix(1, 1, 3, true, {3})),
            ResultMatrix(1, 1, {-6}));
  EXPECT_THROW(matmul_oracle(IntMatrix(2, 3, 1, false), IntMatrix(2, 3, 1, false)),
               DimensionError);
}

TEST(BinaryDot, Cases) {
  std::vector<std::uint64_t> ones{~std::uint64_t{0}}, zero{0};
  EXPECT_EQ(binary_dot(ones, ones), 64u);
  EXPECT_EQ(binary_dot(ones, zero), 0u);
  std::vector<std::uint64_t> a{0b1011}, b{0b0110};
  EXPECT_EQ(binary_dot(a, b), 1u);
  std::vector<std::uint64_t> two{1, 2};
  EXPECT_THROW(binary_dot(a, two), DimensionError);
}

TEST(BinaryDot, Symmetric) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; i++) {
    std::vector<std::uint64_t> a(5), b(5);
    for (auto& w : a) w = rng();
    for (auto& w : b) w = rng();
    EXPECT_EQ(binary_dot(a, b), binary_dot(b, a));
  }
}

TEST(Bitserial, ExampleAndSmallCases) {
  IntMatrix l(2, 2, 2, false, {2, 0, 1, 3});
  IntMatrix r(2, 2, 2, false, {0, 1, 1, 2});
  EXPECT_EQ(matmul_bitserial(l, r), ResultMatrix(2, 2, {0, 2, 3, 7}));
  IntMatrix b1(2, 3, 1, false, {1, 0, 1, 1, 1, 0});
  IntMatrix b2(3, 2, 1, false, {1, 1, 0, 1, 1, 0});
  EXPECT_TRUE(equals(matmul_bitserial(b1, b2), naive_product(b1, b2)));
  EXPECT_EQ(matmul_bitserial(IntMatrix(1, 1, 2, true, {-2}), IntMatrix(1, 1, 3, true, {3})),
            ResultMatrix(1, 1, {-6}));
  EXPECT_THROW(matmul_bitserial(IntMatrix(2, 3, 1, false), IntMatrix(2, 3, 1, false)),
               DimensionError);
}

TEST(Bitserial, RandomAgainstNaive) {
  std::mt19937_64 rng(77);
  for (int it = 0; it < 300; it++) {
    const unsigned lb = 1 + rng() % 8, rb = 1 + rng() % 8;
    const bool ls = it & 1, rs = it & 2;
    const std::size_t m = 1 + rng() % 32, k = 1 + rng() % 32, n = 1 + rng() % 32;
    auto l = random_int_matrix(rng, m, k, lb, ls);
    auto r = random_int_matrix(rng, k, n, rb, rs);
    ASSERT_TRUE(equals(matmul_bitserial(l, r), naive_product(l, r)));
    ASSERT_TRUE(equals(matmul_oracle(l, r), naive_product(l, r)));
  }
}

TEST(Bitserial, ExhaustiveSignedTwoBitGrid) {
  // every 2-bit signed 2x2 lhs against a sample of rhs matrices
  std::mt19937_64 rng(8);
  for (int code = 0; code < 256; code++) {
    std::vector<std::int64_t> e(4);
    for (int i = 0; i < 4; i++) e[i] = ((code >> (2 * i)) & 3) - 2;
    IntMatrix l(2, 2, 2, true, e);
    for (int s = 0; s < 8; s++) {
      auto r = random_int_matrix(rng, 2, 2, 2, true);
      ASSERT_TRUE(equals(matmul_bitserial(l, r), naive_product(l, r)));
    }
  }
}

TEST(Bitserial, SingleElementWeights) {
  for (std::int64_t a = -8; a < 8; a++)
    for (std::int64_t b = 0; b < 8; b++) {
      std::int64_t want = 0;
      for (unsigned i = 0; i < 4; i++)
        for (unsigned j = 0; j < 3; j++) {
          const std::int64_t sl = i == 3 ? -1 : 1;
          want += sl * (std::int64_t{1} << (i + j)) * bit_of(a, i) * bit_of(b, j);
        }
      ASSERT_EQ(want, a * b);
      EXPECT_EQ(matmul_bitserial(IntMatrix(1, 1, 4, true, {a}),
                                 IntMatrix(1, 1, 3, false, {b}))
                    .at(0, 0),
                want);
    }
}

TEST(Bitserial, RestrictedPairs) {
  std::mt19937_64 rng(21);
  auto l = random_int_matrix(rng, 6, 40, 3, true);
  auto r = random_int_matrix(rng, 40, 5, 2, false);
  std::vector<PlanePair> pairs{{2, 1}, {0, 0}};
  EXPECT_TRUE(equals(matmul_bitserial(l, r, pairs),
                     restricted_product(l, r, {{2, 1}, {0, 0}})));
  EXPECT_EQ(matmul_bitserial(l, r, std::span<const PlanePair>{}), ResultMatrix(6, 5));
}

TEST(OpCount, Products) {
  EXPECT_EQ(count_binary_ops(8, 64, 8, 1, 1).binary_ops, 8192u);
  EXPECT_EQ(count_binary_ops(8, 256, 8, 1, 1).binary_ops, 32768u);
  EXPECT_EQ(count_binary_ops(3, 5, 7, 2, 4).binary_ops, 2u * 3 * 5 * 7 * 2 * 4);
}
