#pragma once
// Reference bit-serial GEMM and the plain integer oracle it is checked against.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include "bitserial/bitplane.hpp"
#include "bitserial/error.hpp"

namespace bitserial {

struct ResultMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int64_t> elems;

  ResultMatrix() = default;
  ResultMatrix(std::size_t r, std::size_t c)
      : rows(r), cols(c), elems(r * c, 0) {}
  ResultMatrix(std::size_t r, std::size_t c, std::vector<std::int64_t> e)
      : rows(r), cols(c), elems(std::move(e)) {
    if (elems.size() != rows * cols)
      throw DimensionError("ResultMatrix: element count mismatch");
  }

  std::int64_t at(std::size_t r, std::size_t c) const {
    return elems[r * cols + c];
  }
  std::int64_t& at(std::size_t r, std::size_t c) { return elems[r * cols + c]; }

  bool operator==(const ResultMatrix&) const = default;
};

struct OpCount {
  std::uint64_t binary_ops = 0;
  bool operator==(const OpCount&) const = default;
};

/// Pair of bit positions (lhs plane i, rhs plane j) contributing one binary
/// matrix product.
struct PlanePair {
  unsigned lhs = 0;
  unsigned rhs = 0;
  auto operator<=>(const PlanePair&) const = default;
};

inline std::vector<PlanePair> all_plane_pairs(unsigned lbits, unsigned rbits) {
  std::vector<PlanePair> pairs;
  for (unsigned i = 0; i < lbits; i++)
    for (unsigned j = 0; j < rbits; j++) pairs.push_back({i, j});
  return pairs;
}

inline ResultMatrix matmul_oracle(const IntMatrix& a, const IntMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: lhs is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ", rhs is " +
                         std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  }
  ResultMatrix p(a.rows(), b.cols());
  for (std::size_t r = 0; r < a.rows(); r++)
    for (std::size_t d = 0; d < a.cols(); d++) {
      const std::int64_t av = a.at(r, d);
      if (av == 0) continue;
      for (std::size_t c = 0; c < b.cols(); c++) p.at(r, c) += av * b.at(d, c);
    }
  return p;
}

/// AND + popcount over two equal-length word sequences.
inline std::uint64_t binary_dot(std::span<const std::uint64_t> a,
                                std::span<const std::uint64_t> b) {
  if (a.size() != b.size())
    throw DimensionError("binary_dot: length mismatch (" +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < a.size(); i++)
    acc += static_cast<std::uint64_t>(std::popcount(a[i] & b[i]));
  return acc;
}

/// Sum over the given plane pairs of sgnL*sgnR*2^(i+j) * (L[i] . R[j]).
/// The rhs is transposed first so both operands are read row-wise.
inline ResultMatrix matmul_bitserial(const IntMatrix& lhs, const IntMatrix& rhs,
                                     std::span<const PlanePair> pairs) {
  if (lhs.cols() != rhs.rows())
    throw DimensionError("matmul_bitserial: inner dimensions differ (" +
                         std::to_string(lhs.cols()) + " vs " +
                         std::to_string(rhs.rows()) + ")");
  const BitPlaneTensor lp = decompose(lhs);
  const BitPlaneTensor rp = decompose(transpose(rhs));
  ResultMatrix p(lhs.rows(), rhs.cols());
  const unsigned l = lhs.bits();
  const unsigned r = rhs.bits();
  for (unsigned i = 0; i < l; i++) {
    for (unsigned j = 0; j < r; j++) {
      if (std::find(pairs.begin(), pairs.end(), PlanePair{i, j}) == pairs.end())
        continue;
      const std::int64_t sgn_l = (i == l - 1 && lhs.is_signed()) ? -1 : 1;
      const std::int64_t sgn_r = (j == r - 1 && rhs.is_signed()) ? -1 : 1;
      const std::int64_t weight = sgn_l * sgn_r * (std::int64_t{1} << (i + j));
      const BitMatrix& li = lp.planes[i];
      const BitMatrix& rj = rp.planes[j];
      for (std::size_t row = 0; row < p.rows; row++)
        for (std::size_t col = 0; col < p.cols; col++)
          p.at(row, col) += weight * static_cast<std::int64_t>(
                                         binary_dot(li.row(row), rj.row(col)));
    }
  }
  return p;
}

inline ResultMatrix matmul_bitserial(const IntMatrix& lhs, const IntMatrix& rhs) {
  const auto pairs = all_plane_pairs(lhs.bits(), rhs.bits());
  return matmul_bitserial(lhs, rhs, pairs);
}

inline OpCount count_binary_ops(std::uint64_t m, std::uint64_t k,
                                std::uint64_t n, std::uint64_t l,
                                std::uint64_t r) {
  return OpCount{2 * m * k * n * l * r};
}

}  // namespace bitserial
