#pragma once
// Integer matrices and their bit-plane decomposition.
//
// An l-bit matrix M is the weighted sum of l binary matrices,
//   M = sum_i w_i * M[i],  w_i = 2^i, except w_{l-1} = -2^{l-1} when signed
// (two's complement). Binary matrices are stored bit-packed, row-major, in
// 64-bit words; bit c of a row lives in word c/64 at position c%64.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bitserial/error.hpp"

namespace bitserial {

inline constexpr unsigned kMaxBits = 32;

inline std::int64_t min_value(unsigned bits, bool is_signed) {
  return is_signed ? -(std::int64_t{1} << (bits - 1)) : 0;
}

inline std::int64_t max_value(unsigned bits, bool is_signed) {
  return is_signed ? (std::int64_t{1} << (bits - 1)) - 1
                   : (std::int64_t{1} << bits) - 1;
}

/// Dense row-major integer matrix with a declared bitwidth and signedness.
class IntMatrix {
 public:
  IntMatrix() = default;

  IntMatrix(std::size_t rows, std::size_t cols, unsigned bits, bool is_signed)
      : rows_(rows), cols_(cols), bits_(bits), signed_(is_signed),
        elems_(rows * cols, 0) {
    check_bits(bits);
  }

  IntMatrix(std::size_t rows, std::size_t cols, unsigned bits, bool is_signed,
            std::vector<std::int64_t> elems)
      : rows_(rows), cols_(cols), bits_(bits), signed_(is_signed),
        elems_(std::move(elems)) {
    check_bits(bits);
    if (elems_.size() != rows_ * cols_) {
      throw DimensionError("IntMatrix: expected " +
                           std::to_string(rows_ * cols_) + " elements, got " +
                           std::to_string(elems_.size()));
    }
    for (std::size_t i = 0; i < elems_.size(); i++) check_range(elems_[i], i);
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  unsigned bits() const { return bits_; }
  bool is_signed() const { return signed_; }
  std::span<const std::int64_t> elems() const { return elems_; }

  std::int64_t at(std::size_t r, std::size_t c) const {
    return elems_[r * cols_ + c];
  }

  void set(std::size_t r, std::size_t c, std::int64_t v) {
    check_range(v, r * cols_ + c);
    elems_[r * cols_ + c] = v;
  }

  bool operator==(const IntMatrix&) const = default;

 private:
  static void check_bits(unsigned bits) {
    if (bits < 1 || bits > kMaxBits) {
      throw RangeError("IntMatrix: bitwidth " + std::to_string(bits) +
                       " outside 1.." + std::to_string(kMaxBits));
    }
  }

  void check_range(std::int64_t v, std::size_t idx) const {
    if (v < min_value(bits_, signed_) || v > max_value(bits_, signed_)) {
      throw RangeError("IntMatrix: element " + std::to_string(idx) + " = " +
                       std::to_string(v) + " not representable in " +
                       std::to_string(bits_) + "-bit " +
                       (signed_ ? "signed" : "unsigned"));
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  unsigned bits_ = 1;
  bool signed_ = false;
  std::vector<std::int64_t> elems_;
};

/// Bit-packed binary matrix, 64-bit words, rows padded with zero bits.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), words_per_row_((cols + 63) / 64),
        words_(rows * words_per_row_, 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t words_per_row() const { return words_per_row_; }

  bool get(std::size_t r, std::size_t c) const {
    return (words_[r * words_per_row_ + c / 64] >> (c % 64)) & 1u;
  }

  void set(std::size_t r, std::size_t c, bool v) {
    std::uint64_t& w = words_[r * words_per_row_ + c / 64];
    const std::uint64_t mask = std::uint64_t{1} << (c % 64);
    w = v ? (w | mask) : (w & ~mask);
  }

  std::span<const std::uint64_t> row(std::size_t r) const {
    return std::span<const std::uint64_t>(words_).subspan(r * words_per_row_,
                                                          words_per_row_);
  }

  std::size_t popcount() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  bool operator==(const BitMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t words_per_row_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Weighted binary decomposition of an IntMatrix.
struct BitPlaneTensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool is_signed = false;
  std::vector<BitMatrix> planes;  // planes[i] holds bit i

  std::size_t num_planes() const { return planes.size(); }

  // signed weight of plane i
  std::int64_t weight(std::size_t i) const {
    const std::int64_t w = std::int64_t{1} << i;
    return (is_signed && i + 1 == planes.size()) ? -w : w;
  }
};

inline BitPlaneTensor decompose(const IntMatrix& m) {
  BitPlaneTensor t;
  t.rows = m.rows();
  t.cols = m.cols();
  t.is_signed = m.is_signed();
  t.planes.assign(m.bits(), BitMatrix(m.rows(), m.cols()));
  for (std::size_t r = 0; r < m.rows(); r++) {
    for (std::size_t c = 0; c < m.cols(); c++) {
      const std::int64_t v = m.at(r, c);
      if (v < min_value(m.bits(), m.is_signed()) ||
          v > max_value(m.bits(), m.is_signed())) {
        throw RangeError("decompose: element out of range");
      }
      // two's complement bit pattern of v, truncated to the bitwidth
      const auto u = static_cast<std::uint64_t>(v);
      for (unsigned i = 0; i < m.bits(); i++) {
        if ((u >> i) & 1u) t.planes[i].set(r, c, true);
      }
    }
  }
  return t;
}

inline IntMatrix reconstruct(const BitPlaneTensor& t) {
  std::vector<std::int64_t> elems(t.rows * t.cols, 0);
  for (std::size_t i = 0; i < t.num_planes(); i++) {
    const std::int64_t w = t.weight(i);
    for (std::size_t r = 0; r < t.rows; r++)
      for (std::size_t c = 0; c < t.cols; c++)
        if (t.planes[i].get(r, c)) elems[r * t.cols + c] += w;
  }
  return IntMatrix(t.rows, t.cols, static_cast<unsigned>(t.num_planes()),
                   t.is_signed, std::move(elems));
}

inline IntMatrix transpose(const IntMatrix& m) {
  std::vector<std::int64_t> elems(m.rows() * m.cols());
  for (std::size_t r = 0; r < m.rows(); r++)
    for (std::size_t c = 0; c < m.cols(); c++)
      elems[c * m.rows() + r] = m.at(r, c);
  return IntMatrix(m.cols(), m.rows(), m.bits(), m.is_signed(),
                   std::move(elems));
}

/// Binary plane packed into words of an arbitrary bit width. A word wider
/// than 64 bits spans several 64-bit limbs, least significant limb first.
struct PackedBuffer {
  std::size_t word_bits = 64;
  std::size_t rows = 0;
  std::size_t words_per_row = 0;
  std::size_t limbs_per_word = 1;
  std::vector<std::uint64_t> limbs;

  std::size_t num_words() const { return rows * words_per_row; }

  std::span<const std::uint64_t> word(std::size_t idx) const {
    return std::span<const std::uint64_t>(limbs).subspan(
        idx * limbs_per_word, limbs_per_word);
  }

  std::span<const std::uint64_t> word(std::size_t r, std::size_t w) const {
    return word(r * words_per_row + w);
  }

  // little-endian byte image of word idx, word_bits/8 bytes (rounded up)
  void word_bytes(std::size_t idx, std::span<std::uint8_t> out) const {
    auto w = word(idx);
    for (std::size_t b = 0; b < out.size(); b++)
      out[b] = static_cast<std::uint8_t>(w[b / 8] >> (8 * (b % 8)));
  }
};

inline PackedBuffer pack_plane(const BitMatrix& plane, std::size_t word_bits) {
  if (word_bits < 1) throw RangeError("pack_plane: word_bits must be >= 1");
  PackedBuffer buf;
  buf.word_bits = word_bits;
  buf.rows = plane.rows();
  buf.words_per_row = (plane.cols() + word_bits - 1) / word_bits;
  buf.limbs_per_word = (word_bits + 63) / 64;
  buf.limbs.assign(buf.num_words() * buf.limbs_per_word, 0);
  for (std::size_t r = 0; r < plane.rows(); r++) {
    for (std::size_t c = 0; c < plane.cols(); c++) {
      if (!plane.get(r, c)) continue;
      const std::size_t w = r * buf.words_per_row + c / word_bits;
      const std::size_t pos = c % word_bits;
      buf.limbs[w * buf.limbs_per_word + pos / 64] |= std::uint64_t{1}
                                                      << (pos % 64);
    }
  }
  return buf;
}

}  // namespace bitserial
