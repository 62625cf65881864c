#pragma once
// Overlay instance parameters, dot-product-unit arithmetic and matrix buffers.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "bitserial/error.hpp"
#include "bitserial/keyvalue.hpp"

namespace bitserial {

struct HWConfig {
  std::uint32_t Dm = 8;   // DPA rows
  std::uint32_t Dn = 8;   // DPA columns
  std::uint32_t Dk = 64;  // DPU input width (popcount width), bits
  std::uint32_t Bm = 1024;  // lhs buffer depth, Dk-bit words
  std::uint32_t Bn = 1024;  // rhs buffer depth, Dk-bit words
  std::uint32_t Br = 2;     // result buffer depth, accumulator snapshots
  std::uint32_t A = 32;     // accumulator width, bits
  std::uint32_t F = 64;     // memory read channel, bits/cycle
  std::uint32_t R = 64;     // memory write channel, bits/cycle
  double fclk_mhz = 200.0;
  // timing calibration
  std::uint32_t exec_overhead_cycles = 16;
  std::uint32_t dma_setup_cycles = 10;

  std::uint32_t num_buffers() const { return Dm + Dn; }
  std::uint32_t limbs_per_word() const { return (Dk + 63) / 64; }
  std::uint32_t word_bytes() const { return Dk / 8; }
  // bytes per written result element
  std::uint32_t result_elem_bytes() const { return A <= 32 ? 4 : 8; }
  bool is_lhs_buffer(std::uint32_t b) const { return b < Dm; }
  std::uint32_t buffer_depth(std::uint32_t b) const {
    return is_lhs_buffer(b) ? Bm : Bn;
  }

  bool operator==(const HWConfig&) const = default;
};

/// The six instances used for runtime characterization (F = R = 64, 200 MHz,
/// 1024-deep input buffers).
inline HWConfig reference_instance(int idx) {
  struct Dims {
    std::uint32_t m, k, n;
  };
  static constexpr Dims dims[] = {{8, 64, 8},   {8, 128, 8}, {8, 256, 8},
                                  {4, 256, 4},  {8, 256, 4}, {4, 512, 4}};
  if (idx < 1 || idx > 6) throw Error("instance index must be 1..6");
  HWConfig c;
  c.Dm = dims[idx - 1].m;
  c.Dk = dims[idx - 1].k;
  c.Dn = dims[idx - 1].n;
  return c;
}

inline HWConfig parse_hwconfig(std::istream& is) {
  HWConfig c;
  const auto kv = parse_key_values(is);
  for (const auto& [key, e] : kv) {
    auto u32 = [&] {
      const auto v = parse_uint(e.value, e.line, key);
      if (v > 0xffffffffu) throw ParseError(e.line, key + " too large");
      return static_cast<std::uint32_t>(v);
    };
    if (key == "Dm") c.Dm = u32();
    else if (key == "Dn") c.Dn = u32();
    else if (key == "Dk") c.Dk = u32();
    else if (key == "Bm") c.Bm = u32();
    else if (key == "Bn") c.Bn = u32();
    else if (key == "Br") c.Br = u32();
    else if (key == "A") c.A = u32();
    else if (key == "F") c.F = u32();
    else if (key == "R") c.R = u32();
    else if (key == "fclk_mhz") c.fclk_mhz = parse_double(e.value, e.line, key);
    else if (key == "exec_overhead_cycles") c.exec_overhead_cycles = u32();
    else if (key == "dma_setup_cycles") c.dma_setup_cycles = u32();
    else throw ParseError(e.line, "unknown config key '" + key + "'");
  }
  return c;
}

inline HWConfig load_hwconfig(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  return parse_hwconfig(is);
}

inline std::string format_hwconfig(const HWConfig& c) {
  std::ostringstream os;
  os << "Dm=" << c.Dm << "\nDn=" << c.Dn << "\nDk=" << c.Dk << "\nBm=" << c.Bm
     << "\nBn=" << c.Bn << "\nBr=" << c.Br << "\nA=" << c.A << "\nF=" << c.F
     << "\nR=" << c.R << "\nfclk_mhz=" << c.fclk_mhz
     << "\nexec_overhead_cycles=" << c.exec_overhead_cycles
     << "\ndma_setup_cycles=" << c.dma_setup_cycles << "\n";
  return os.str();
}

struct ConfigReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty(); }
};

inline ConfigReport validate_config(const HWConfig& c) {
  ConfigReport rep;
  auto nonzero = [&](std::uint32_t v, const char* name) {
    if (v == 0) rep.errors.push_back(std::string(name) + " must be >= 1");
  };
  nonzero(c.Dm, "Dm");
  nonzero(c.Dn, "Dn");
  nonzero(c.Dk, "Dk");
  nonzero(c.Bm, "Bm");
  nonzero(c.Bn, "Bn");
  nonzero(c.Br, "Br");
  nonzero(c.A, "A");
  nonzero(c.F, "F");
  nonzero(c.R, "R");
  if (c.Dk % 8 != 0) rep.errors.push_back("Dk must be a multiple of 8");
  if (c.A > 64) rep.errors.push_back("A must be <= 64");
  if (c.F != 0 && !std::has_single_bit(c.F))
    rep.errors.push_back("F must be a power of two");
  if (c.R != 0 && !std::has_single_bit(c.R))
    rep.errors.push_back("R must be a power of two");
  if (c.F != 0 && c.F < 8) rep.errors.push_back("F must be at least 8 bits");
  if (c.R != 0 && c.R < 8) rep.errors.push_back("R must be at least 8 bits");
  if (!(c.fclk_mhz > 0)) rep.errors.push_back("fclk_mhz must be positive");
  if (!rep.ok()) return rep;

  if (c.Bm < 2 || c.Bn < 2)
    rep.warnings.push_back("buffers shallower than 2 words cannot be double-buffered");
  // chunk boundaries along k must land on channel-aligned addresses
  if (c.Dk % c.F != 0 && c.F % c.Dk != 0)
    rep.warnings.push_back("Dk and F are not multiples of each other; k-chunking may be infeasible");
  // a full buffer must be fillable before the DPA drains it
  if (c.Dk > c.F * std::max<std::uint32_t>(1, std::min(c.Bm, c.Bn)))
    rep.warnings.push_back("Dk exceeds F times buffer depth; fetch underrun is inevitable");
  if (c.A < 16)
    rep.warnings.push_back("accumulator narrower than 16 bits overflows quickly");
  return rep;
}

/// Peak binary GOPS: 2 * Dm * Dn * Dk ops per cycle.
inline double peak_gops(const HWConfig& c) {
  const double ops_per_cycle = 2.0 * c.Dm * c.Dn * c.Dk;
  return ops_per_cycle * c.fclk_mhz / 1000.0;
}

/// Reduce v modulo 2^bits, interpreted as two's complement.
inline std::int64_t wrap_to_width(std::uint64_t v, unsigned bits) {
  if (bits >= 64) return static_cast<std::int64_t>(v);
  const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
  v &= mask;
  const std::uint64_t sign = std::uint64_t{1} << (bits - 1);
  return static_cast<std::int64_t>((v ^ sign) - sign);
}

struct DPUState {
  std::int64_t acc = 0;  // always held sign-extended from A bits
  bool operator==(const DPUState&) const = default;
};

/// One DPU cycle: acc' = wrap_A((reset ? 0 : acc) +/- (popcount(lhs & rhs) << shift)).
inline DPUState dpu_step(DPUState s, std::span<const std::uint64_t> lhs,
                         std::span<const std::uint64_t> rhs, unsigned shift,
                         bool negate, bool reset, unsigned acc_bits) {
  std::uint64_t pc = 0;
  const std::size_t n = std::min(lhs.size(), rhs.size());
  for (std::size_t i = 0; i < n; i++)
    pc += static_cast<std::uint64_t>(std::popcount(lhs[i] & rhs[i]));
  const std::uint64_t contrib = shift < 64 ? (pc << shift) : 0;
  std::uint64_t acc = reset ? 0 : static_cast<std::uint64_t>(s.acc);
  acc = negate ? acc - contrib : acc + contrib;
  return DPUState{wrap_to_width(acc, acc_bits)};
}

/// Dm lhs buffers (depth Bm) followed by Dn rhs buffers (depth Bn), each word
/// Dk bits wide.
class MatrixBufferSet {
 public:
  explicit MatrixBufferSet(const HWConfig& cfg)
      : limbs_(cfg.limbs_per_word()), depth_(cfg.num_buffers()),
        data_(cfg.num_buffers()) {
    for (std::uint32_t b = 0; b < cfg.num_buffers(); b++) {
      depth_[b] = cfg.buffer_depth(b);
      data_[b].assign(std::size_t{depth_[b]} * limbs_, 0);
    }
  }

  std::size_t num_buffers() const { return data_.size(); }
  std::uint32_t depth(std::size_t b) const { return depth_[b]; }

  std::span<const std::uint64_t> word(std::size_t b, std::size_t addr) const {
    check(b, addr);
    return std::span<const std::uint64_t>(data_[b]).subspan(addr * limbs_,
                                                            limbs_);
  }

  std::span<std::uint64_t> word(std::size_t b, std::size_t addr) {
    check(b, addr);
    return std::span<std::uint64_t>(data_[b]).subspan(addr * limbs_, limbs_);
  }

 private:
  void check(std::size_t b, std::size_t addr) const {
    if (b >= data_.size() || addr >= depth_[b])
      throw Error("matrix buffer access out of range: buffer " +
                  std::to_string(b) + " word " + std::to_string(addr));
  }

  std::size_t limbs_;
  std::vector<std::uint32_t> depth_;
  std::vector<std::vector<std::uint64_t>> data_;
};

}  // namespace bitserial
