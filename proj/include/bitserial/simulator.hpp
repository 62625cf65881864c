#pragma once
// Cycle-level model of the fetch / execute / result pipeline.
//
// A global cycle loop advances all three stages by one cycle per tick.
// Timing per instruction:
//   Wait        1 cycle once a token is visible, stalls otherwise
//   Signal      1 cycle; the token becomes visible the following cycle
//   RunFetch    dma_setup_cycles + ceil(bytes * 8 / F)
//   RunExecute  num_reads + exec_overhead_cycles
//   RunResult   dma_setup_cycles + ceil(Dm * Dn * elem_bits / R)
// Functional effects are applied when an instruction issues. A Signal on
// ExecuteToResult copies the accumulator array into the next free slot of
// the Br-deep result buffer; RunResult drains the oldest slot and frees it
// when it completes.

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bitserial/error.hpp"
#include "bitserial/hwmodel.hpp"
#include "bitserial/isa.hpp"

namespace bitserial {

class MainMemory {
 public:
  MainMemory() = default;
  explicit MainMemory(std::size_t size) : bytes_(size, 0) {}

  std::size_t size() const { return bytes_.size(); }
  std::span<const std::uint8_t> bytes() const { return bytes_; }
  std::span<std::uint8_t> bytes() { return bytes_; }

  bool in_bounds(std::uint64_t addr, std::uint64_t len) const {
    return addr <= bytes_.size() && len <= bytes_.size() - addr;
  }

  void read(std::uint64_t addr, std::span<std::uint8_t> out) const {
    if (!in_bounds(addr, out.size())) throw Error(oob("read", addr, out.size()));
    std::copy_n(bytes_.begin() + static_cast<std::ptrdiff_t>(addr), out.size(),
                out.begin());
  }

  void write(std::uint64_t addr, std::span<const std::uint8_t> in) {
    if (!in_bounds(addr, in.size())) throw Error(oob("write", addr, in.size()));
    std::copy(in.begin(), in.end(),
              bytes_.begin() + static_cast<std::ptrdiff_t>(addr));
  }

  bool operator==(const MainMemory&) const = default;

 private:
  std::string oob(const char* what, std::uint64_t addr, std::uint64_t len) const {
    return std::string("memory ") + what + " of " + std::to_string(len) +
           " bytes at " + std::to_string(addr) + " outside " +
           std::to_string(bytes_.size()) + "-byte memory";
  }

  std::vector<std::uint8_t> bytes_;
};

struct StageStats {
  std::uint64_t busy = 0;
  std::uint64_t stalled_on_wait = 0;
  std::uint64_t idle = 0;
  std::uint64_t instructions = 0;
};

struct SimStats {
  std::uint64_t total_cycles = 0;
  std::array<StageStats, 3> stages{};
  std::array<std::uint64_t, 4> tokens_produced{};
  std::array<std::uint64_t, 4> tokens_consumed{};
  std::uint64_t fetch_runs = 0;
  std::uint64_t execute_runs = 0;
  std::uint64_t result_runs = 0;
  std::uint64_t bytes_read = 0;
  std::uint64_t bytes_written = 0;
  // DPA cycles doing useful reads (sum of num_reads)
  std::uint64_t dpa_read_cycles = 0;
  // binary ops performed by the array, 2 * Dm * Dn * Dk per read cycle
  std::uint64_t binary_ops = 0;
  double achieved_gops = 0;
  double efficiency = 0;

  const StageStats& stage(Stage s) const {
    return stages[static_cast<int>(s)];
  }
  bool tokens_balanced() const { return tokens_produced == tokens_consumed; }
};

/// Raised when an instruction touches memory or buffers illegally.
class SimulationFault : public Error {
 public:
  SimulationFault(Stage stage, std::size_t pc, std::uint64_t cycle,
                  const std::string& instruction, const std::string& why)
      : Error("fault in " + std::string(stage_name(stage)) + " stage at pc " +
              std::to_string(pc) + ", cycle " + std::to_string(cycle) + " (" +
              instruction + "): " + why),
        stage_(stage), pc_(pc), cycle_(cycle) {}

  Stage stage() const { return stage_; }
  std::size_t pc() const { return pc_; }
  std::uint64_t cycle() const { return cycle_; }

 private:
  Stage stage_;
  std::size_t pc_;
  std::uint64_t cycle_;
};

/// Raised when every unfinished stage is blocked on an empty queue and no
/// instruction is in flight.
class DeadlockError : public Error {
 public:
  DeadlockError(std::uint64_t cycle, std::array<std::size_t, 3> pcs,
                std::array<std::size_t, 3> lengths)
      : Error(make_message(cycle, pcs, lengths)), cycle_(cycle), pcs_(pcs) {}

  std::uint64_t cycle() const { return cycle_; }
  const std::array<std::size_t, 3>& pcs() const { return pcs_; }

 private:
  static std::string make_message(std::uint64_t cycle,
                                  std::array<std::size_t, 3> pcs,
                                  std::array<std::size_t, 3> lengths) {
    std::string m = "deadlock at cycle " + std::to_string(cycle) + ":";
    for (Stage s : kStages) {
      const int i = static_cast<int>(s);
      m += " " + std::string(stage_name(s)) + " pc=" + std::to_string(pcs[i]) +
           "/" + std::to_string(lengths[i]);
    }
    return m;
  }

  std::uint64_t cycle_;
  std::array<std::size_t, 3> pcs_;
};

struct SimResult {
  SimStats stats;
  MainMemory memory;
};

inline std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) {
  return (a + b - 1) / b;
}

inline std::uint64_t fetch_cycles(const HWConfig& cfg, const RunFetch& f) {
  return cfg.dma_setup_cycles + ceil_div(f.total_bytes() * 8, cfg.F);
}

inline std::uint64_t execute_cycles(const HWConfig& cfg, const RunExecute& e) {
  return std::uint64_t{e.num_reads} + cfg.exec_overhead_cycles;
}

inline std::uint64_t result_cycles(const HWConfig& cfg) {
  const std::uint64_t bits =
      std::uint64_t{cfg.Dm} * cfg.Dn * cfg.result_elem_bytes() * 8;
  return cfg.dma_setup_cycles + ceil_div(bits, cfg.R);
}

class Simulator {
 public:
  Simulator(const HWConfig& cfg, const Program& program, MainMemory memory)
      : cfg_(cfg), prog_(program), mem_(std::move(memory)), buffers_(cfg),
        acc_(std::size_t{cfg.Dm} * cfg.Dn) {
    const auto rep = validate_config(cfg);
    if (!rep.ok()) throw Error("invalid config: " + rep.errors.front());
  }

  SimResult run() && {
    for (cycle_ = 0;; cycle_++) {
      if (all_finished()) break;
      bool progress = false;
      for (Stage s : kStages) progress |= tick(s);
      bool pending = false;
      for (std::size_t q = 0; q < 4; q++) {
        visible_[q] += pending_[q];
        pending |= pending_[q] > 0;
        pending_[q] = 0;
      }
      if (!progress && !pending) {
        std::array<std::size_t, 3> pcs{}, lens{};
        for (Stage s : kStages) {
          pcs[idx(s)] = st_[idx(s)].pc;
          lens[idx(s)] = prog_.stream(s).size();
        }
        throw DeadlockError(cycle_, pcs, lens);
      }
    }
    stats_.total_cycles = cycle_;
    const double peak_per_cycle = 2.0 * cfg_.Dm * cfg_.Dn * cfg_.Dk;
    if (cycle_ > 0) {
      stats_.efficiency =
          static_cast<double>(stats_.binary_ops) / (peak_per_cycle * cycle_);
      stats_.achieved_gops = static_cast<double>(stats_.binary_ops) /
                             static_cast<double>(cycle_) * cfg_.fclk_mhz / 1000.0;
    }
    return SimResult{stats_, std::move(mem_)};
  }

 private:
  struct Region {
    std::uint32_t buffer;
    std::uint64_t lo, hi;  // [lo, hi)
  };

  struct StageRuntime {
    std::size_t pc = 0;
    std::uint64_t remaining = 0;  // cycles left for the instruction at pc
  };

  static int idx(Stage s) { return static_cast<int>(s); }

  bool finished(Stage s) const {
    return st_[idx(s)].pc >= prog_.stream(s).size();
  }

  bool all_finished() const {
    return finished(Stage::Fetch) && finished(Stage::Execute) &&
           finished(Stage::Result);
  }

  [[noreturn]] void fault(Stage s, const std::string& why) const {
    const auto pc = st_[idx(s)].pc;
    throw SimulationFault(s, pc, cycle_,
                          format_instruction(s, prog_.stream(s)[pc]), why);
  }

  // advances stage s by one cycle; returns true if it did work
  bool tick(Stage s) {
    auto& rt = st_[idx(s)];
    auto& stats = stats_.stages[idx(s)];
    if (rt.remaining > 0) {
      stats.busy++;
      if (--rt.remaining == 0) complete(s);
      return true;
    }
    if (finished(s)) {
      stats.idle++;
      return false;
    }
    const Instruction& ins = prog_.stream(s)[rt.pc];
    if (auto w = std::get_if<Wait>(&ins)) {
      auto& tokens = visible_[static_cast<int>(w->queue)];
      if (tokens == 0) {
        stats.stalled_on_wait++;
        return false;
      }
      tokens--;
      stats_.tokens_consumed[static_cast<int>(w->queue)]++;
      stats.busy++;
      stats.instructions++;
      rt.pc++;
      return true;
    }
    std::uint64_t duration = 1;
    if (auto g = std::get_if<Signal>(&ins)) {
      if (g->queue == TokenQueue::ExecuteToResult) snapshot(s);
      pending_[static_cast<int>(g->queue)]++;
      stats_.tokens_produced[static_cast<int>(g->queue)]++;
    } else if (auto f = std::get_if<RunFetch>(&ins)) {
      duration = issue_fetch(s, *f);
    } else if (auto e = std::get_if<RunExecute>(&ins)) {
      duration = issue_execute(s, *e);
    } else if (auto r = std::get_if<RunResult>(&ins)) {
      duration = issue_result(s, *r);
    }
    stats.busy++;
    stats.instructions++;
    rt.remaining = duration - 1;
    if (rt.remaining == 0) complete(s);
    return true;
  }

  void complete(Stage s) {
    auto& rt = st_[idx(s)];
    const Instruction& ins = prog_.stream(s)[rt.pc];
    if (std::holds_alternative<RunFetch>(ins)) fetch_active_.clear();
    if (std::holds_alternative<RunExecute>(ins)) exec_active_.clear();
    if (std::holds_alternative<RunResult>(ins)) result_slots_.pop_front();
    rt.pc++;
  }

  static bool overlaps(const std::vector<Region>& a,
                       const std::vector<Region>& b) {
    for (const auto& x : a)
      for (const auto& y : b)
        if (x.buffer == y.buffer && x.lo < y.hi && y.lo < x.hi) return true;
    return false;
  }

  std::uint64_t issue_fetch(Stage s, const RunFetch& f) {
    if (s != Stage::Fetch) fault(s, "RunFetch outside fetch stage");
    const std::uint64_t word_bytes = cfg_.word_bytes();
    if (f.buf_range == 0 || f.words_per_buffer == 0)
      fault(s, "empty buffer range");
    if (f.total_bytes() % word_bytes != 0)
      fault(s, "fetch size is not a whole number of Dk-bit words");
    if (std::uint64_t{f.buf_start} + f.buf_range > cfg_.num_buffers())
      fault(s, "buffer range exceeds Dm+Dn buffers");

    // gather the byte stream
    std::vector<std::uint8_t> data(f.total_bytes());
    for (std::uint32_t b = 0; b < f.num_blocks; b++) {
      const std::uint64_t addr =
          f.dram_base + std::uint64_t{b} * f.block_offset;
      if (!mem_.in_bounds(addr, f.block_size))
        fault(s, "memory read out of bounds at " + std::to_string(addr));
      mem_.read(addr, std::span<std::uint8_t>(data).subspan(
                          std::uint64_t{b} * f.block_size, f.block_size));
    }

    const std::uint64_t words = f.total_bytes() / word_bytes;
    std::vector<Region> regions;
    for (std::uint32_t q = 0; q < f.buf_range; q++) {
      const auto n = fetch_words_in_buffer(f, words, q);
      if (n == 0) continue;
      const std::uint32_t buf = f.buf_start + q;
      if (f.buf_offset + n > cfg_.buffer_depth(buf))
        fault(s, "write beyond depth of buffer " + std::to_string(buf));
      regions.push_back({buf, f.buf_offset, f.buf_offset + n});
    }
    if (overlaps(regions, exec_active_))
      fault(s, "fetch overwrites a buffer region the execute stage is reading");

    const std::uint64_t per_round =
        std::uint64_t{f.words_per_buffer} * f.buf_range;
    for (std::uint64_t w = 0; w < words; w++) {
      const std::uint64_t round = w / per_round;
      const std::uint64_t within = w % per_round;
      const auto buf =
          static_cast<std::uint32_t>(f.buf_start + within / f.words_per_buffer);
      const std::uint64_t addr =
          f.buf_offset + round * f.words_per_buffer + within % f.words_per_buffer;
      auto dst = buffers_.word(buf, addr);
      std::fill(dst.begin(), dst.end(), 0);
      for (std::uint64_t byte = 0; byte < word_bytes; byte++)
        dst[byte / 8] |= std::uint64_t{data[w * word_bytes + byte]}
                         << (8 * (byte % 8));
    }
    fetch_active_ = std::move(regions);
    stats_.fetch_runs++;
    stats_.bytes_read += f.total_bytes();
    return fetch_cycles(cfg_, f);
  }

  std::uint64_t issue_execute(Stage s, const RunExecute& e) {
    if (s != Stage::Execute) fault(s, "RunExecute outside execute stage");
    if (std::uint64_t{e.lhs_offset} + e.num_reads > cfg_.Bm ||
        std::uint64_t{e.rhs_offset} + e.num_reads > cfg_.Bn)
      fault(s, "matrix buffer read out of range");
    if (e.shift >= cfg_.A) fault(s, "shift not below accumulator width");
    std::vector<Region> regions;
    if (e.num_reads > 0) {
      for (std::uint32_t b = 0; b < cfg_.Dm; b++)
        regions.push_back({b, e.lhs_offset, std::uint64_t{e.lhs_offset} + e.num_reads});
      for (std::uint32_t b = 0; b < cfg_.Dn; b++)
        regions.push_back({cfg_.Dm + b, e.rhs_offset,
                           std::uint64_t{e.rhs_offset} + e.num_reads});
    }
    if (overlaps(regions, fetch_active_))
      fault(s, "execute reads a buffer region the fetch stage is writing");

    for (std::uint32_t r = 0; r < cfg_.Dm; r++) {
      for (std::uint32_t c = 0; c < cfg_.Dn; c++) {
        DPUState st{acc_[r * cfg_.Dn + c]};
        if (e.acc_reset) st.acc = 0;
        for (std::uint32_t w = 0; w < e.num_reads; w++) {
          st = dpu_step(st, buffers_.word(r, e.lhs_offset + w),
                        buffers_.word(cfg_.Dm + c, e.rhs_offset + w), e.shift,
                        e.negate, false, cfg_.A);
        }
        acc_[r * cfg_.Dn + c] = st.acc;
      }
    }
    exec_active_ = std::move(regions);
    stats_.execute_runs++;
    stats_.dpa_read_cycles += e.num_reads;
    stats_.binary_ops +=
        2ull * cfg_.Dm * cfg_.Dn * cfg_.Dk * std::uint64_t{e.num_reads};
    return execute_cycles(cfg_, e);
  }

  void snapshot(Stage s) {
    if (result_slots_.size() >= cfg_.Br)
      fault(s, "result buffer full; execute must wait for the result stage");
    result_slots_.push_back(acc_);
  }

  std::uint64_t issue_result(Stage s, const RunResult& r) {
    if (s != Stage::Result) fault(s, "RunResult outside result stage");
    if (result_slots_.empty()) fault(s, "result buffer empty");
    if (r.valid_rows > cfg_.Dm || r.valid_cols > cfg_.Dn)
      fault(s, "valid region larger than the DPA");
    const auto& tile = result_slots_.front();
    const std::uint32_t eb = cfg_.result_elem_bytes();
    std::array<std::uint8_t, 8> bytes{};
    for (std::uint32_t row = 0; row < r.valid_rows; row++) {
      for (std::uint32_t col = 0; col < r.valid_cols; col++) {
        const std::uint64_t addr = r.dram_base + r.offset +
                                   std::uint64_t{row} * r.row_stride +
                                   std::uint64_t{col} * eb;
        if (!mem_.in_bounds(addr, eb))
          fault(s, "memory write out of bounds at " + std::to_string(addr));
        const auto v = static_cast<std::uint64_t>(tile[row * cfg_.Dn + col]);
        for (std::uint32_t b = 0; b < eb; b++)
          bytes[b] = static_cast<std::uint8_t>(v >> (8 * b));
        mem_.write(addr, std::span<const std::uint8_t>(bytes.data(), eb));
        stats_.bytes_written += eb;
      }
    }
    stats_.result_runs++;
    return result_cycles(cfg_);
  }

  HWConfig cfg_;
  const Program& prog_;
  MainMemory mem_;
  MatrixBufferSet buffers_;
  std::vector<std::int64_t> acc_;
  std::deque<std::vector<std::int64_t>> result_slots_;
  std::vector<Region> fetch_active_;
  std::vector<Region> exec_active_;
  std::array<StageRuntime, 3> st_{};
  std::array<std::uint64_t, 4> visible_{};
  std::array<std::uint64_t, 4> pending_{};
  std::uint64_t cycle_ = 0;
  SimStats stats_;
};

inline SimResult simulate(const HWConfig& cfg, const Program& program,
                          MainMemory memory) {
  return Simulator(cfg, program, std::move(memory)).run();
}

}  // namespace bitserial
