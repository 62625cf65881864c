#pragma once
// Test-side oracles and generators. Nothing here calls into the library's
// own arithmetic, so the checks stay independent of the code under test.

#include <cstdint>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "bitserial/bitplane.hpp"
#include "bitserial/gemm.hpp"

namespace testing_support {

using bitserial::IntMatrix;
using bitserial::ResultMatrix;

inline IntMatrix random_int_matrix(std::mt19937_64& rng, std::size_t rows,
                                   std::size_t cols, unsigned bits,
                                   bool is_signed) {
  const std::int64_t lo = is_signed ? -(std::int64_t{1} << (bits - 1)) : 0;
  const std::int64_t hi = is_signed ? (std::int64_t{1} << (bits - 1)) - 1
                                    : (std::int64_t{1} << bits) - 1;
  std::uniform_int_distribution<std::int64_t> d(lo, hi);
  std::vector<std::int64_t> e(rows * cols);
  for (auto& v : e) v = d(rng);
  return IntMatrix(rows, cols, bits, is_signed, std::move(e));
}

// bit i of the two's complement encoding of v
inline int bit_of(std::int64_t v, unsigned i) {
  return static_cast<int>((static_cast<std::uint64_t>(v) >> i) & 1u);
}

inline std::vector<std::vector<std::int64_t>> naive_product(const IntMatrix& a,
                                                            const IntMatrix& b) {
  std::vector<std::vector<std::int64_t>> p(a.rows(),
                                           std::vector<std::int64_t>(b.cols(), 0));
  for (std::size_t r = 0; r < a.rows(); r++)
    for (std::size_t c = 0; c < b.cols(); c++) {
      std::int64_t s = 0;
      for (std::size_t d = 0; d < a.cols(); d++) s += a.at(r, d) * b.at(d, c);
      p[r][c] = s;
    }
  return p;
}

inline bool equals(const ResultMatrix& got,
                   const std::vector<std::vector<std::int64_t>>& want) {
  if (got.rows != want.size()) return false;
  for (std::size_t r = 0; r < want.size(); r++) {
    if (got.cols != want[r].size()) return false;
    for (std::size_t c = 0; c < want[r].size(); c++)
      if (got.at(r, c) != want[r][c]) return false;
  }
  return true;
}

/// Product restricted to the given (lhs bit, rhs bit) pairs, evaluated
/// element by element from raw bits.
inline std::vector<std::vector<std::int64_t>> restricted_product(
    const IntMatrix& a, const IntMatrix& b,
    const std::set<std::pair<unsigned, unsigned>>& pairs) {
  std::vector<std::vector<std::int64_t>> p(a.rows(),
                                           std::vector<std::int64_t>(b.cols(), 0));
  for (std::size_t r = 0; r < a.rows(); r++)
    for (std::size_t c = 0; c < b.cols(); c++)
      for (const auto& [i, j] : pairs) {
        const std::int64_t wl =
            (a.is_signed() && i == a.bits() - 1) ? -(std::int64_t{1} << i)
                                                 : (std::int64_t{1} << i);
        const std::int64_t wr =
            (b.is_signed() && j == b.bits() - 1) ? -(std::int64_t{1} << j)
                                                 : (std::int64_t{1} << j);
        std::int64_t cnt = 0;
        for (std::size_t d = 0; d < a.cols(); d++)
          cnt += bit_of(a.at(r, d), i) & bit_of(b.at(d, c), j);
        p[r][c] += wl * wr * cnt;
      }
  return p;
}

}  // namespace testing_support
