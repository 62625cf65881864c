#pragma once
// Compiles an integer matmul into a memory image and three instruction
// streams.
//
// Memory layout: lhs planes, then rhs planes (rhs stored transposed, so both
// operands are read row-wise), then the result. Planes are plane-major and
// row-major inside a plane; each row takes ceil(k / Dk) words, zero padded,
// with the row stride rounded up to the read channel width.
//
// Buffers are managed as a pool of equal slots per operand. A "load" brings
// one (operand, plane, row group, k chunk) block into a slot; slots are
// recycled least-recently-used, and the token protocol keeps fetch from
// overwriting a slot before execute is done with it.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "bitserial/bitplane.hpp"
#include "bitserial/error.hpp"
#include "bitserial/gemm.hpp"
#include "bitserial/hwmodel.hpp"
#include "bitserial/isa.hpp"
#include "bitserial/simulator.hpp"

namespace bitserial {

inline constexpr unsigned kMaxCompiledBits = 8;
inline constexpr std::uint64_t kMaxFootprint = std::uint64_t{1} << 31;

struct MatMulDescriptor {
  std::uint32_t m = 1, k = 1, n = 1;
  unsigned lbits = 1, rbits = 1;
  bool lsigned = false, rsigned = false;

  bool operator==(const MatMulDescriptor&) const = default;
};

inline void check_descriptor(const MatMulDescriptor& w) {
  if (w.m < 1 || w.k < 1 || w.n < 1)
    throw ScheduleError("matmul dimensions must be >= 1");
  if (w.lbits < 1 || w.lbits > kMaxCompiledBits || w.rbits < 1 ||
      w.rbits > kMaxCompiledBits)
    throw ScheduleError("compiled bitwidths must be in 1.." +
                        std::to_string(kMaxCompiledBits));
}

struct MemoryImage {
  MatMulDescriptor desc;
  std::uint32_t word_bytes = 0;       // Dk / 8
  std::uint32_t words_per_row = 0;    // ceil(k / Dk)
  std::uint32_t row_stride = 0;       // bytes, both operands
  std::vector<std::uint64_t> lhs_plane_base;
  std::vector<std::uint64_t> rhs_plane_base;
  std::uint64_t result_base = 0;
  std::uint32_t result_row_stride = 0;
  std::uint32_t result_elem_bytes = 4;
  std::uint64_t total_bytes = 0;

  bool operator==(const MemoryImage&) const = default;
};

inline std::uint64_t round_up(std::uint64_t v, std::uint64_t a) {
  return (v + a - 1) / a * a;
}

inline MemoryImage layout(const MatMulDescriptor& w, const HWConfig& cfg) {
  check_descriptor(w);
  MemoryImage im;
  im.desc = w;
  im.word_bytes = cfg.word_bytes();
  im.words_per_row = static_cast<std::uint32_t>(ceil_div(w.k, cfg.Dk));
  const std::uint64_t rd = std::max<std::uint32_t>(1, cfg.F / 8);
  const std::uint64_t wr = std::max<std::uint32_t>(1, cfg.R / 8);
  const std::uint64_t align = std::lcm(rd, wr);
  im.row_stride = static_cast<std::uint32_t>(
      round_up(std::uint64_t{im.words_per_row} * im.word_bytes, rd));

  std::uint64_t at = 0;
  for (unsigned i = 0; i < w.lbits; i++) {
    im.lhs_plane_base.push_back(at);
    at = round_up(at + std::uint64_t{w.m} * im.row_stride, align);
  }
  for (unsigned j = 0; j < w.rbits; j++) {
    im.rhs_plane_base.push_back(at);
    at = round_up(at + std::uint64_t{w.n} * im.row_stride, align);
  }
  im.result_elem_bytes = cfg.result_elem_bytes();
  im.result_row_stride = static_cast<std::uint32_t>(
      round_up(std::uint64_t{w.n} * im.result_elem_bytes, wr));
  im.result_base = at;
  im.total_bytes = at + std::uint64_t{w.m} * im.result_row_stride;
  if (im.total_bytes > kMaxFootprint)
    throw ScheduleError("memory footprint of " + std::to_string(im.total_bytes) +
                        " bytes exceeds the simulated memory");
  return im;
}

namespace detail {

inline void write_planes(MainMemory& mem, const IntMatrix& m,
                         const std::vector<std::uint64_t>& bases,
                         std::uint32_t row_stride, std::uint32_t word_bits) {
  const BitPlaneTensor t = decompose(m);
  std::vector<std::uint8_t> bytes(word_bits / 8);
  for (std::size_t i = 0; i < t.planes.size(); i++) {
    const PackedBuffer pb = pack_plane(t.planes[i], word_bits);
    for (std::size_t r = 0; r < pb.rows; r++)
      for (std::size_t w = 0; w < pb.words_per_row; w++) {
        pb.word_bytes(r * pb.words_per_row + w, bytes);
        mem.write(bases[i] + r * row_stride + w * bytes.size(), bytes);
      }
  }
}

}  // namespace detail

/// Builds the initial memory: packed bit planes of lhs and transposed rhs,
/// zeroed result region.
inline MainMemory materialize(const MemoryImage& im, const IntMatrix& lhs,
                              const IntMatrix& rhs) {
  const auto& w = im.desc;
  if (lhs.rows() != w.m || lhs.cols() != w.k || rhs.rows() != w.k ||
      rhs.cols() != w.n)
    throw DimensionError("operands do not match the compiled workload");
  if (lhs.bits() != w.lbits || rhs.bits() != w.rbits ||
      lhs.is_signed() != w.lsigned || rhs.is_signed() != w.rsigned)
    throw DimensionError("operand precision does not match the compiled workload");
  MainMemory mem(im.total_bytes);
  detail::write_planes(mem, lhs, im.lhs_plane_base, im.row_stride,
                       im.word_bytes * 8);
  detail::write_planes(mem, transpose(rhs), im.rhs_plane_base, im.row_stride,
                       im.word_bytes * 8);
  return mem;
}

inline ResultMatrix extract_result(const MemoryImage& im, const MainMemory& mem) {
  ResultMatrix p(im.desc.m, im.desc.n);
  std::vector<std::uint8_t> b(im.result_elem_bytes);
  for (std::uint32_t r = 0; r < im.desc.m; r++)
    for (std::uint32_t c = 0; c < im.desc.n; c++) {
      mem.read(im.result_base + std::uint64_t{r} * im.result_row_stride +
                   std::uint64_t{c} * im.result_elem_bytes,
               b);
      std::uint64_t v = 0;
      for (std::size_t i = 0; i < b.size(); i++) v |= std::uint64_t{b[i]} << (8 * i);
      p.at(r, c) = wrap_to_width(v, static_cast<unsigned>(8 * b.size()));
    }
  return p;
}

// ---------------------------------------------------------------------------
// tile plan

struct TilePlan {
  std::uint32_t tiles_m = 0, tiles_n = 0;
  std::uint32_t group_m = 1, group_n = 1;  // tiles per row/column group
  std::uint32_t words_per_row = 0;
  std::uint32_t chunk_words = 0;
  std::uint32_t num_chunks = 0;
  std::uint32_t lhs_slot_words = 0, rhs_slot_words = 0;
  std::uint32_t lhs_slots = 0, rhs_slots = 0;
  bool double_buffered = false;
  std::vector<PlanePair> pairs;  // active, in pass order
  std::vector<unsigned> lhs_planes, rhs_planes;

  std::uint32_t groups_m() const { return (tiles_m + group_m - 1) / group_m; }
  std::uint32_t groups_n() const { return (tiles_n + group_n - 1) / group_n; }
  std::uint32_t chunk_size(std::uint32_t c) const {
    return std::min(chunk_words, words_per_row - c * chunk_words);
  }
};

inline TilePlan make_plan(const MatMulDescriptor& w, const HWConfig& cfg,
                          std::span<const PlanePair> active) {
  check_descriptor(w);
  const auto rep = validate_config(cfg);
  if (!rep.ok()) throw ScheduleError("invalid config: " + rep.errors.front());
  for (const auto& pp : active)
    if (pp.lhs >= w.lbits || pp.rhs >= w.rbits)
      throw ScheduleError("plane pair (" + std::to_string(pp.lhs) + "," +
                          std::to_string(pp.rhs) + ") outside the plane grid");
  // |P| <= k * 2^l * 2^r must fit the signed accumulator
  if (cfg.A < 64 && std::uint64_t{w.k} << (w.lbits + w.rbits) >=
                        (std::uint64_t{1} << (cfg.A - 1)))
    throw ScheduleError("accumulator width A=" + std::to_string(cfg.A) +
                        " too narrow for this workload");

  TilePlan tp;
  tp.tiles_m = static_cast<std::uint32_t>(ceil_div(w.m, cfg.Dm));
  tp.tiles_n = static_cast<std::uint32_t>(ceil_div(w.n, cfg.Dn));
  tp.words_per_row = static_cast<std::uint32_t>(ceil_div(w.k, cfg.Dk));
  std::set<PlanePair> uniq(active.begin(), active.end());
  for (unsigned j = 0; j < w.rbits; j++)
    for (unsigned i = 0; i < w.lbits; i++)
      if (uniq.count({i, j})) tp.pairs.push_back({i, j});
  std::set<unsigned> ls, rs;
  for (const auto& pp : tp.pairs) {
    ls.insert(pp.lhs);
    rs.insert(pp.rhs);
  }
  tp.lhs_planes.assign(ls.begin(), ls.end());
  tp.rhs_planes.assign(rs.begin(), rs.end());
  if (tp.pairs.empty()) return tp;

  const std::uint32_t nl = static_cast<std::uint32_t>(ls.size());
  const std::uint32_t nr = static_cast<std::uint32_t>(rs.size());
  const std::uint32_t wpl = tp.words_per_row;
  const std::uint32_t half_l = cfg.Bm / 2, half_r = cfg.Bn / 2;
  // chunk offsets must stay aligned to the read channel
  const std::uint32_t q = cfg.F / std::gcd(cfg.F, cfg.Dk);

  if (std::uint64_t{nl} * wpl <= half_l && std::uint64_t{nr} * wpl <= half_r) {
    tp.chunk_words = wpl;
    tp.group_m = std::min(tp.tiles_m, half_l / (nl * wpl));
    tp.group_n = std::min(tp.tiles_n, half_r / (nr * wpl));
    tp.double_buffered = true;
  } else {
    std::uint32_t cw = std::min(half_l / nl, half_r / nr);
    cw -= cw % q;
    if (cw > 0) {
      tp.chunk_words = cw;
      tp.double_buffered = true;
    } else {
      cw = std::min({wpl, cfg.Bm, cfg.Bn});
      if (cw < wpl) cw -= cw % q;
      if (cw == 0)
        throw ScheduleError("buffers too shallow for a channel-aligned k chunk");
      tp.chunk_words = cw;
    }
  }
  tp.num_chunks = (wpl + tp.chunk_words - 1) / tp.chunk_words;
  tp.lhs_slot_words = tp.group_m * tp.chunk_words;
  tp.rhs_slot_words = tp.group_n * tp.chunk_words;
  tp.lhs_slots = cfg.Bm / tp.lhs_slot_words;
  tp.rhs_slots = cfg.Bn / tp.rhs_slot_words;
  return tp;
}

// ---------------------------------------------------------------------------
// pass schedule

struct Load {
  bool rhs = false;
  unsigned plane = 0;
  std::uint32_t group = 0;
  std::uint32_t chunk = 0;
  std::uint32_t slot = 0;
  std::optional<std::size_t> evicts_after;  // last pass using the previous occupant
  std::size_t first_pass = 0;
};

struct Pass {
  std::uint32_t tile = 0;  // output tile, in emission order
  std::uint32_t unit = 0;  // (row group, column group, chunk) sequence number
  RunExecute exec;
  std::vector<std::size_t> new_loads;  // loads to fetch before this pass
  bool last_of_tile = false;
};

struct TileRef {
  std::uint32_t tm = 0, tn = 0;
};

struct Schedule {
  TilePlan plan;
  std::vector<Load> loads;
  std::vector<Pass> passes;
  std::vector<TileRef> tiles;
  std::uint32_t num_units = 0;
};

namespace detail {

class SlotPool {
 public:
  explicit SlotPool(std::uint32_t slots) : occupant_(slots), last_use_(slots, 0) {}

  struct Key {
    unsigned plane;
    std::uint32_t group, chunk;
    auto operator<=>(const Key&) const = default;
  };

  // returns the resident slot, or allocates one (possibly evicting)
  std::pair<std::uint32_t, bool> acquire(const Key& key, std::size_t pass,
                                         std::optional<std::size_t>& evicted) {
    for (std::uint32_t s = 0; s < occupant_.size(); s++)
      if (occupant_[s] && *occupant_[s] == key) {
        last_use_[s] = pass;
        return {s, false};
      }
    std::uint32_t victim = 0;
    bool found_free = false;
    for (std::uint32_t s = 0; s < occupant_.size(); s++)
      if (!occupant_[s]) {
        victim = s;
        found_free = true;
        break;
      }
    if (!found_free) {
      for (std::uint32_t s = 1; s < occupant_.size(); s++)
        if (last_use_[s] < last_use_[victim]) victim = s;
      evicted = last_use_[victim];
    }
    occupant_[victim] = key;
    last_use_[victim] = pass;
    return {victim, true};
  }

 private:
  std::vector<std::optional<Key>> occupant_;
  std::vector<std::size_t> last_use_;
};

}  // namespace detail

inline Schedule make_schedule(const MatMulDescriptor& w, const HWConfig& cfg,
                              std::span<const PlanePair> active) {
  Schedule sc;
  sc.plan = make_plan(w, cfg, active);
  const TilePlan& tp = sc.plan;
  if (tp.pairs.empty()) return sc;

  detail::SlotPool lpool(tp.lhs_slots), rpool(tp.rhs_slots);
  std::uint32_t tile = 0;
  for (std::uint32_t gl = 0; gl < tp.groups_m(); gl++) {
    for (std::uint32_t gr = 0; gr < tp.groups_n(); gr++) {
      const std::uint32_t unit0 = sc.num_units;
      const std::uint32_t tm_end = std::min(tp.tiles_m, (gl + 1) * tp.group_m);
      const std::uint32_t tn_end = std::min(tp.tiles_n, (gr + 1) * tp.group_n);
      for (std::uint32_t tm = gl * tp.group_m; tm < tm_end; tm++) {
        for (std::uint32_t tn = gr * tp.group_n; tn < tn_end; tn++) {
          sc.tiles.push_back({tm, tn});
          bool first = true;
          for (std::uint32_t c = 0; c < tp.num_chunks; c++) {
            const std::uint32_t cwc = tp.chunk_size(c);
            for (const auto& pp : tp.pairs) {
              Pass ps;
              const std::size_t idx = sc.passes.size();
              ps.tile = tile;
              ps.unit = unit0 + c;
              std::optional<std::size_t> ev;
              auto [ls, lnew] = lpool.acquire({pp.lhs, gl, c}, idx, ev);
              if (lnew) {
                sc.loads.push_back({false, pp.lhs, gl, c, ls, ev, idx});
                ps.new_loads.push_back(sc.loads.size() - 1);
              }
              ev.reset();
              auto [rs, rnew] = rpool.acquire({pp.rhs, gr, c}, idx, ev);
              if (rnew) {
                sc.loads.push_back({true, pp.rhs, gr, c, rs, ev, idx});
                ps.new_loads.push_back(sc.loads.size() - 1);
              }
              const bool neg_l = pp.lhs == w.lbits - 1 && w.lsigned;
              const bool neg_r = pp.rhs == w.rbits - 1 && w.rsigned;
              ps.exec.lhs_offset = ls * tp.lhs_slot_words + (tm - gl * tp.group_m) * cwc;
              ps.exec.rhs_offset = rs * tp.rhs_slot_words + (tn - gr * tp.group_n) * cwc;
              ps.exec.num_reads = cwc;
              ps.exec.shift = pp.lhs + pp.rhs;
              ps.exec.negate = neg_l != neg_r;
              ps.exec.acc_reset = first;
              first = false;
              sc.passes.push_back(std::move(ps));
            }
          }
          sc.passes.back().last_of_tile = true;
          tile++;
        }
      }
      sc.num_units += tp.num_chunks;
    }
  }
  return sc;
}

namespace detail {

inline RunFetch fetch_for(const Load& ld, const MemoryImage& im,
                          const TilePlan& tp, const HWConfig& cfg) {
  const auto& w = im.desc;
  const std::uint32_t lanes = ld.rhs ? cfg.Dn : cfg.Dm;
  const std::uint32_t group_tiles = ld.rhs ? tp.group_n : tp.group_m;
  const std::uint32_t rows_total = ld.rhs ? w.n : w.m;
  const std::uint32_t row0 = ld.group * group_tiles * lanes;
  const std::uint32_t rows = std::min(rows_total - row0, group_tiles * lanes);
  const std::uint32_t cwc = tp.chunk_size(ld.chunk);
  const auto base = ld.rhs ? im.rhs_plane_base[ld.plane] : im.lhs_plane_base[ld.plane];
  RunFetch f;
  f.dram_base = base + std::uint64_t{row0} * im.row_stride +
                std::uint64_t{ld.chunk} * tp.chunk_words * im.word_bytes;
  f.block_size = cwc * im.word_bytes;
  f.block_offset = im.row_stride;
  f.num_blocks = rows;
  f.buf_offset = ld.slot * (ld.rhs ? tp.rhs_slot_words : tp.lhs_slot_words);
  f.buf_start = ld.rhs ? cfg.Dm : 0;
  f.buf_range = lanes;
  f.words_per_buffer = cwc;
  return f;
}

inline RunResult result_for(const TileRef& t, const MemoryImage& im,
                            const HWConfig& cfg) {
  RunResult r;
  r.dram_base = im.result_base;
  r.offset = std::uint64_t{t.tm} * cfg.Dm * im.result_row_stride +
             std::uint64_t{t.tn} * cfg.Dn * im.result_elem_bytes;
  r.row_stride = im.result_row_stride;
  r.valid_rows = std::min(cfg.Dm, im.desc.m - t.tm * cfg.Dm);
  r.valid_cols = std::min(cfg.Dn, im.desc.n - t.tn * cfg.Dn);
  return r;
}

}  // namespace detail

/// Fetch runs ahead of execute as far as free slots allow.
inline Program emit_overlapped(const Schedule& sc, const MemoryImage& im,
                               const HWConfig& cfg) {
  Program p;
  if (sc.passes.empty()) return p;
  std::set<std::size_t> release_set;
  for (const auto& ld : sc.loads)
    if (ld.evicts_after) release_set.insert(*ld.evicts_after);
  const std::vector<std::size_t> releases(release_set.begin(), release_set.end());

  std::size_t consumed = 0;
  std::optional<std::size_t> need_upto;
  for (const auto& ps : sc.passes) {
    if (ps.new_loads.empty()) continue;
    for (auto li : ps.new_loads) {
      const Load& ld = sc.loads[li];
      if (ld.evicts_after)
        need_upto = std::max(need_upto.value_or(0), *ld.evicts_after);
      if (need_upto) {
        const auto needed = static_cast<std::size_t>(
            std::lower_bound(releases.begin(), releases.end(), *need_upto) -
            releases.begin()) + 1;
        for (; consumed < needed; consumed++)
          p.fetch.push_back(Wait{TokenQueue::ExecuteToFetch});
      }
      p.fetch.push_back(detail::fetch_for(ld, im, sc.plan, cfg));
    }
    p.fetch.push_back(Signal{TokenQueue::FetchToExecute});
  }

  const std::size_t ntiles = sc.tiles.size();
  for (std::size_t i = 0; i < sc.passes.size(); i++) {
    const auto& ps = sc.passes[i];
    if (!ps.new_loads.empty()) p.execute.push_back(Wait{TokenQueue::FetchToExecute});
    p.execute.push_back(ps.exec);
    if (release_set.count(i)) p.execute.push_back(Signal{TokenQueue::ExecuteToFetch});
    if (ps.last_of_tile) {
      if (ps.tile >= cfg.Br) p.execute.push_back(Wait{TokenQueue::ResultToExecute});
      p.execute.push_back(Signal{TokenQueue::ExecuteToResult});
    }
  }

  for (std::size_t t = 0; t < ntiles; t++) {
    p.result.push_back(Wait{TokenQueue::ExecuteToResult});
    p.result.push_back(detail::result_for(sc.tiles[t], im, cfg));
    if (t + cfg.Br < ntiles) p.result.push_back(Signal{TokenQueue::ResultToExecute});
  }
  return p;
}

/// Each stage waits for the previous one to finish before it starts.
inline Program emit_sequential(const Schedule& sc, const MemoryImage& im,
                               const HWConfig& cfg) {
  Program p;
  if (sc.passes.empty()) return p;
  std::vector<std::size_t> unit_start(sc.num_units + 1, sc.passes.size());
  for (std::size_t i = sc.passes.size(); i-- > 0;)
    unit_start[sc.passes[i].unit] = i;
  for (const auto& ld : sc.loads)
    if (ld.evicts_after &&
        *ld.evicts_after >= unit_start[sc.passes[ld.first_pass].unit])
      throw ScheduleError(
          "buffers cannot hold one unit's planes without overlap; "
          "use the overlapped schedule");

  for (std::uint32_t u = 0; u < sc.num_units; u++) {
    const std::size_t b = unit_start[u], e = unit_start[u + 1];
    if (u > 0) p.fetch.push_back(Wait{TokenQueue::ExecuteToFetch});
    for (std::size_t i = b; i < e; i++)
      for (auto li : sc.passes[i].new_loads)
        p.fetch.push_back(detail::fetch_for(sc.loads[li], im, sc.plan, cfg));
    p.fetch.push_back(Signal{TokenQueue::FetchToExecute});

    p.execute.push_back(Wait{TokenQueue::FetchToExecute});
    for (std::size_t i = b; i < e; i++) {
      p.execute.push_back(sc.passes[i].exec);
      if (sc.passes[i].last_of_tile) {
        p.execute.push_back(Signal{TokenQueue::ExecuteToResult});
        p.execute.push_back(Wait{TokenQueue::ResultToExecute});
      }
    }
    if (u + 1 < sc.num_units) p.execute.push_back(Signal{TokenQueue::ExecuteToFetch});
  }
  for (const auto& t : sc.tiles) {
    p.result.push_back(Wait{TokenQueue::ExecuteToResult});
    p.result.push_back(detail::result_for(t, im, cfg));
    p.result.push_back(Signal{TokenQueue::ResultToExecute});
  }
  return p;
}

struct CompiledProgram {
  MemoryImage image;
  TilePlan plan;
  Program program;
};

inline CompiledProgram precision_skip(const MatMulDescriptor& w,
                                      const HWConfig& cfg,
                                      std::span<const PlanePair> active,
                                      bool overlap = true) {
  CompiledProgram cp;
  cp.image = layout(w, cfg);
  const Schedule sc = make_schedule(w, cfg, active);
  cp.plan = sc.plan;
  cp.program = overlap ? emit_overlapped(sc, cp.image, cfg)
                       : emit_sequential(sc, cp.image, cfg);
  return cp;
}

inline CompiledProgram compile_overlapped(const MatMulDescriptor& w,
                                          const HWConfig& cfg) {
  const auto all = all_plane_pairs(w.lbits, w.rbits);
  return precision_skip(w, cfg, all, true);
}

inline CompiledProgram compile_sequential(const MatMulDescriptor& w,
                                          const HWConfig& cfg) {
  const auto all = all_plane_pairs(w.lbits, w.rbits);
  return precision_skip(w, cfg, all, false);
}

inline MatMulDescriptor describe_operands(const IntMatrix& lhs, const IntMatrix& rhs) {
  if (lhs.cols() != rhs.rows()) throw DimensionError("inner dimensions differ");
  return MatMulDescriptor{static_cast<std::uint32_t>(lhs.rows()),
                          static_cast<std::uint32_t>(lhs.cols()),
                          static_cast<std::uint32_t>(rhs.cols()),
                          lhs.bits(), rhs.bits(), lhs.is_signed(), rhs.is_signed()};
}

// ---------------------------------------------------------------------------
// experiments

/// Execute stage only: operands are assumed resident, result writes ignored.
inline Program execute_only_program(const HWConfig& cfg, std::uint32_t m,
                                    std::uint32_t n, std::uint32_t k,
                                    unsigned lbits, unsigned rbits) {
  Program p;
  const auto tiles = ceil_div(m, cfg.Dm) * ceil_div(n, cfg.Dn);
  const auto wpl = ceil_div(k, cfg.Dk);
  const std::uint64_t cw = std::min<std::uint64_t>(wpl, std::min(cfg.Bm, cfg.Bn));
  for (std::uint64_t t = 0; t < tiles; t++) {
    bool first = true;
    for (std::uint64_t c = 0; c * cw < wpl; c++)
      for (unsigned j = 0; j < rbits; j++)
        for (unsigned i = 0; i < lbits; i++) {
          RunExecute e;
          e.num_reads = static_cast<std::uint32_t>(std::min(cw, wpl - c * cw));
          e.shift = i + j;
          e.acc_reset = first;
          first = false;
          p.execute.push_back(e);
        }
  }
  return p;
}

struct EfficiencyPoint {
  std::uint32_t k = 0;
  std::uint64_t cycles = 0;
  double efficiency = 0;
};

inline std::vector<EfficiencyPoint> efficiency_sweep(
    const HWConfig& cfg, std::uint32_t m, std::uint32_t n,
    std::span<const std::uint32_t> ks, unsigned bits = 1) {
  std::vector<EfficiencyPoint> out;
  for (auto k : ks) {
    const Program p = execute_only_program(cfg, m, n, k, bits, bits);
    const auto res = simulate(cfg, p, MainMemory{});
    const double useful = static_cast<double>(
        count_binary_ops(m, k, n, bits, bits).binary_ops);
    const double peak = 2.0 * cfg.Dm * cfg.Dn * cfg.Dk;
    out.push_back({k, res.stats.total_cycles,
                   useful / (peak * static_cast<double>(res.stats.total_cycles))});
  }
  return out;
}

struct MultibitPoint {
  unsigned w = 0, a = 0;
  std::uint64_t cycles = 0;
  std::uint64_t projected = 0;    // w * a * cycles(1,1)
  std::uint64_t lower_bound = 0;  // w * a * tiles * ceil(k / Dk)
};

inline std::uint64_t simulate_cycles(const CompiledProgram& cp, const HWConfig& cfg) {
  return simulate(cfg, cp.program, MainMemory(cp.image.total_bytes))
      .stats.total_cycles;
}

inline std::vector<MultibitPoint> multibit_sweep(
    const HWConfig& cfg, std::uint32_t m, std::uint32_t n, std::uint32_t k,
    std::span<const std::pair<unsigned, unsigned>> wa) {
  const MatMulDescriptor base{m, k, n, 1, 1, false, false};
  const std::uint64_t t = simulate_cycles(compile_overlapped(base, cfg), cfg);
  const std::uint64_t tiles = ceil_div(m, cfg.Dm) * ceil_div(n, cfg.Dn);
  std::vector<MultibitPoint> out;
  for (auto [wb, ab] : wa) {
    MatMulDescriptor d = base;
    d.lbits = wb;
    d.rbits = ab;
    const std::uint64_t c =
        (wb == 1 && ab == 1) ? t : simulate_cycles(compile_overlapped(d, cfg), cfg);
    out.push_back({wb, ab, c, std::uint64_t{wb} * ab * t,
                   std::uint64_t{wb} * ab * tiles * ceil_div(k, cfg.Dk)});
  }
  return out;
}

struct OverlapPoint {
  std::uint64_t sequential_cycles = 0;
  std::uint64_t overlapped_cycles = 0;
  double speedup() const {
    return overlapped_cycles ? static_cast<double>(sequential_cycles) /
                                   static_cast<double>(overlapped_cycles)
                             : 0.0;
  }
};

inline OverlapPoint overlap_experiment(const HWConfig& cfg,
                                       const MatMulDescriptor& w) {
  OverlapPoint o;
  o.sequential_cycles = simulate_cycles(compile_sequential(w, cfg), cfg);
  o.overlapped_cycles = simulate_cycles(compile_overlapped(w, cfg), cfg);
  return o;
}

}  // namespace bitserial
