#pragma once
// Binary matrix file format:
//   "BISM" magic, then little-endian u32 rows, cols, bits, signed (0/1),
//   then rows*cols little-endian i64 elements, row-major.
// Result matrices are written with bits = 64.

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "bitserial/bitplane.hpp"
#include "bitserial/error.hpp"

namespace bitserial {

struct MatrixFile {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::uint32_t bits = 0;
  bool is_signed = false;
  std::vector<std::int64_t> elems;

  IntMatrix to_int_matrix() const {
    return IntMatrix(rows, cols, bits, is_signed, elems);
  }

  static MatrixFile from(const IntMatrix& m) {
    MatrixFile f;
    f.rows = static_cast<std::uint32_t>(m.rows());
    f.cols = static_cast<std::uint32_t>(m.cols());
    f.bits = m.bits();
    f.is_signed = m.is_signed();
    f.elems.assign(m.elems().begin(), m.elems().end());
    return f;
  }

  bool operator==(const MatrixFile&) const = default;
};

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; i++) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b.data(), 4);
}

inline void put_i64(std::ostream& os, std::int64_t v) {
  const auto u = static_cast<std::uint64_t>(v);
  std::array<char, 8> b{};
  for (int i = 0; i < 8; i++) b[i] = static_cast<char>((u >> (8 * i)) & 0xff);
  os.write(b.data(), 8);
}

inline std::uint64_t get_le(std::istream& is, int nbytes, const char* what) {
  std::array<unsigned char, 8> b{};
  is.read(reinterpret_cast<char*>(b.data()), nbytes);
  if (is.gcount() != nbytes)
    throw ParseError(std::string("matrix file: truncated ") + what);
  std::uint64_t v = 0;
  for (int i = 0; i < nbytes; i++) v |= std::uint64_t{b[i]} << (8 * i);
  return v;
}

}  // namespace detail

inline void write_matrix(std::ostream& os, const MatrixFile& m) {
  os.write("BISM", 4);
  detail::put_u32(os, m.rows);
  detail::put_u32(os, m.cols);
  detail::put_u32(os, m.bits);
  detail::put_u32(os, m.is_signed ? 1 : 0);
  for (auto v : m.elems) detail::put_i64(os, v);
}

inline MatrixFile read_matrix(std::istream& is) {
  std::array<char, 4> magic{};
  is.read(magic.data(), 4);
  if (is.gcount() != 4 || std::memcmp(magic.data(), "BISM", 4) != 0)
    throw ParseError("matrix file: bad magic");
  MatrixFile m;
  m.rows = static_cast<std::uint32_t>(detail::get_le(is, 4, "header"));
  m.cols = static_cast<std::uint32_t>(detail::get_le(is, 4, "header"));
  m.bits = static_cast<std::uint32_t>(detail::get_le(is, 4, "header"));
  const auto s = detail::get_le(is, 4, "header");
  if (s > 1) throw ParseError("matrix file: signed flag must be 0 or 1");
  m.is_signed = s == 1;
  if (m.bits < 1 || m.bits > 64)
    throw ParseError("matrix file: bitwidth " + std::to_string(m.bits));
  const std::uint64_t n = std::uint64_t{m.rows} * m.cols;
  m.elems.reserve(n);
  for (std::uint64_t i = 0; i < n; i++)
    m.elems.push_back(static_cast<std::int64_t>(detail::get_le(is, 8, "data")));
  return m;
}

inline void save_matrix(const std::string& path, const MatrixFile& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_matrix(os, m);
}

inline MatrixFile load_matrix(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  return read_matrix(is);
}

}  // namespace bitserial
