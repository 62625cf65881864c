#pragma once
// Overlay instruction set, static validation and the textual program format.
//
// Text format: one instruction per line, `STAGE OPCODE key=value ...`, with
// optional `[fetch]`, `[execute]`, `[result]` section headers. dram_base
// values are written as 0x-prefixed hex, everything else in decimal. Lines
// starting with '#' are comments.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bitserial/error.hpp"
#include "bitserial/hwmodel.hpp"
#include "bitserial/keyvalue.hpp"

namespace bitserial {

enum class Stage : std::uint8_t { Fetch = 0, Execute = 1, Result = 2 };

enum class TokenQueue : std::uint8_t {
  FetchToExecute = 0,
  ExecuteToFetch = 1,
  ExecuteToResult = 2,
  ResultToExecute = 3,
};

inline constexpr std::array<Stage, 3> kStages = {Stage::Fetch, Stage::Execute,
                                                 Stage::Result};
inline constexpr std::array<TokenQueue, 4> kQueues = {
    TokenQueue::FetchToExecute, TokenQueue::ExecuteToFetch,
    TokenQueue::ExecuteToResult, TokenQueue::ResultToExecute};

inline std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::Fetch: return "fetch";
    case Stage::Execute: return "execute";
    case Stage::Result: return "result";
  }
  return "?";
}

inline std::string_view queue_name(TokenQueue q) {
  switch (q) {
    case TokenQueue::FetchToExecute: return "FetchToExecute";
    case TokenQueue::ExecuteToFetch: return "ExecuteToFetch";
    case TokenQueue::ExecuteToResult: return "ExecuteToResult";
    case TokenQueue::ResultToExecute: return "ResultToExecute";
  }
  return "?";
}

inline Stage queue_producer(TokenQueue q) {
  switch (q) {
    case TokenQueue::FetchToExecute: return Stage::Fetch;
    case TokenQueue::ExecuteToFetch: return Stage::Execute;
    case TokenQueue::ExecuteToResult: return Stage::Execute;
    case TokenQueue::ResultToExecute: return Stage::Result;
  }
  return Stage::Fetch;
}

inline Stage queue_consumer(TokenQueue q) {
  switch (q) {
    case TokenQueue::FetchToExecute: return Stage::Execute;
    case TokenQueue::ExecuteToFetch: return Stage::Fetch;
    case TokenQueue::ExecuteToResult: return Stage::Result;
    case TokenQueue::ResultToExecute: return Stage::Execute;
  }
  return Stage::Fetch;
}

struct Wait {
  TokenQueue queue{};
  bool operator==(const Wait&) const = default;
};

struct Signal {
  TokenQueue queue{};
  bool operator==(const Signal&) const = default;
};

/// Stream num_blocks blocks of block_size bytes, block i starting at
/// dram_base + i * block_offset, and distribute the resulting Dk-bit words
/// over buffers buf_start .. buf_start + buf_range - 1, words_per_buffer
/// consecutive words to each before moving to the next, cycling back with
/// the write offset advanced by words_per_buffer.
struct RunFetch {
  std::uint64_t dram_base = 0;
  std::uint32_t block_size = 0;
  std::uint32_t block_offset = 0;
  std::uint32_t num_blocks = 0;
  std::uint32_t buf_offset = 0;
  std::uint32_t buf_start = 0;
  std::uint32_t buf_range = 1;
  std::uint32_t words_per_buffer = 1;
  bool operator==(const RunFetch&) const = default;

  std::uint64_t total_bytes() const {
    return std::uint64_t{block_size} * num_blocks;
  }
};

/// Read num_reads words from every lhs buffer starting at lhs_offset and
/// from every rhs buffer starting at rhs_offset; each DPU accumulates
/// +/- popcount(lhs & rhs) << shift.
struct RunExecute {
  std::uint32_t lhs_offset = 0;
  std::uint32_t rhs_offset = 0;
  std::uint32_t num_reads = 0;
  std::uint32_t shift = 0;
  bool negate = false;
  bool acc_reset = false;
  bool operator==(const RunExecute&) const = default;
};

/// Drain the oldest result-buffer snapshot to memory. Element (r, c) of the
/// tile goes to dram_base + offset + r * row_stride + c * elem_bytes; only
/// the first valid_rows x valid_cols elements are written.
struct RunResult {
  std::uint64_t dram_base = 0;
  std::uint64_t offset = 0;
  std::uint32_t row_stride = 0;
  std::uint32_t valid_rows = 0;
  std::uint32_t valid_cols = 0;
  bool operator==(const RunResult&) const = default;
};

using Instruction = std::variant<Wait, Signal, RunFetch, RunExecute, RunResult>;

struct Program {
  std::vector<Instruction> fetch;
  std::vector<Instruction> execute;
  std::vector<Instruction> result;

  std::vector<Instruction>& stream(Stage s) {
    return s == Stage::Fetch ? fetch : s == Stage::Execute ? execute : result;
  }
  const std::vector<Instruction>& stream(Stage s) const {
    return s == Stage::Fetch ? fetch : s == Stage::Execute ? execute : result;
  }
  std::size_t size() const {
    return fetch.size() + execute.size() + result.size();
  }
  bool empty() const { return size() == 0; }

  bool operator==(const Program&) const = default;
};

// ---------------------------------------------------------------------------
// text format

inline std::string format_instruction(Stage stage, const Instruction& ins) {
  std::ostringstream os;
  switch (stage) {
    case Stage::Fetch: os << "FETCH "; break;
    case Stage::Execute: os << "EXECUTE "; break;
    case Stage::Result: os << "RESULT "; break;
  }
  std::visit(
      [&](const auto& i) {
        using T = std::decay_t<decltype(i)>;
        if constexpr (std::is_same_v<T, Wait>) {
          os << "WAIT queue=" << queue_name(i.queue);
        } else if constexpr (std::is_same_v<T, Signal>) {
          os << "SIGNAL queue=" << queue_name(i.queue);
        } else if constexpr (std::is_same_v<T, RunFetch>) {
          os << "RUNFETCH dram_base=0x" << std::hex << i.dram_base << std::dec
             << " block_size=" << i.block_size
             << " block_offset=" << i.block_offset
             << " num_blocks=" << i.num_blocks << " buf_offset=" << i.buf_offset
             << " buf_start=" << i.buf_start << " buf_range=" << i.buf_range
             << " words_per_buffer=" << i.words_per_buffer;
        } else if constexpr (std::is_same_v<T, RunExecute>) {
          os << "RUNEXECUTE lhs_offset=" << i.lhs_offset
             << " rhs_offset=" << i.rhs_offset << " num_reads=" << i.num_reads
             << " shift=" << i.shift << " negate=" << (i.negate ? 1 : 0)
             << " acc_reset=" << (i.acc_reset ? 1 : 0);
        } else {
          os << "RUNRESULT dram_base=0x" << std::hex << i.dram_base << std::dec
             << " offset=" << i.offset << " row_stride=" << i.row_stride
             << " valid_rows=" << i.valid_rows
             << " valid_cols=" << i.valid_cols;
        }
      },
      ins);
  return os.str();
}

inline std::string serialize(const Program& p) {
  std::ostringstream os;
  for (Stage s : kStages) {
    os << "[" << stage_name(s) << "]\n";
    for (const auto& ins : p.stream(s)) os << format_instruction(s, ins) << "\n";
  }
  return os.str();
}

namespace detail {

inline std::optional<Stage> parse_stage_token(std::string_view t) {
  if (t == "FETCH" || t == "fetch") return Stage::Fetch;
  if (t == "EXECUTE" || t == "execute") return Stage::Execute;
  if (t == "RESULT" || t == "result") return Stage::Result;
  return std::nullopt;
}

inline std::optional<TokenQueue> parse_queue(std::string_view t) {
  for (auto q : kQueues)
    if (queue_name(q) == t) return q;
  return std::nullopt;
}

class FieldReader {
 public:
  FieldReader(std::size_t line, std::map<std::string, std::string> fields)
      : line_(line), fields_(std::move(fields)) {}

  std::uint64_t u64(const std::string& key) {
    auto it = fields_.find(key);
    if (it == fields_.end())
      throw ParseError(line_, "missing field '" + key + "'");
    auto v = parse_uint(it->second, line_, key);
    fields_.erase(it);
    return v;
  }

  std::uint32_t u32(const std::string& key) {
    const auto v = u64(key);
    if (v > 0xffffffffu)
      throw ParseError(line_, "field '" + key + "' out of 32-bit range");
    return static_cast<std::uint32_t>(v);
  }

  bool flag(const std::string& key) {
    const auto v = u64(key);
    if (v > 1) throw ParseError(line_, "field '" + key + "' must be 0 or 1");
    return v == 1;
  }

  TokenQueue queue() {
    auto it = fields_.find("queue");
    if (it == fields_.end()) throw ParseError(line_, "missing field 'queue'");
    auto q = parse_queue(it->second);
    if (!q) throw ParseError(line_, "unknown queue '" + it->second + "'");
    fields_.erase(it);
    return *q;
  }

  void finish() const {
    if (!fields_.empty())
      throw ParseError(line_, "unknown field '" + fields_.begin()->first + "'");
  }

 private:
  std::size_t line_;
  std::map<std::string, std::string> fields_;
};

}  // namespace detail

inline Program parse_program(std::string_view text) {
  Program p;
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  std::optional<Stage> section;
  while (std::getline(is, line)) {
    lineno++;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(lineno, "malformed section header");
      auto s = detail::parse_stage_token(line.substr(1, line.size() - 2));
      if (!s) throw ParseError(lineno, "unknown section '" + line + "'");
      section = s;
      continue;
    }
    std::istringstream ls(line);
    std::string stage_tok, opcode;
    ls >> stage_tok >> opcode;
    auto stage = detail::parse_stage_token(stage_tok);
    if (!stage) throw ParseError(lineno, "unknown stage '" + stage_tok + "'");
    if (section && *section != *stage)
      throw ParseError(lineno, "instruction for stage " +
                                   std::string(stage_name(*stage)) +
                                   " inside [" +
                                   std::string(stage_name(*section)) + "]");
    if (opcode.empty()) throw ParseError(lineno, "missing opcode");
    std::map<std::string, std::string> fields;
    std::string tok;
    while (ls >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos || eq == 0)
        throw ParseError(lineno, "expected key=value, got '" + tok + "'");
      auto key = tok.substr(0, eq);
      if (!fields.emplace(key, tok.substr(eq + 1)).second)
        throw ParseError(lineno, "duplicate field '" + key + "'");
    }
    detail::FieldReader f(lineno, std::move(fields));
    Instruction ins;
    if (opcode == "WAIT") {
      ins = Wait{f.queue()};
    } else if (opcode == "SIGNAL") {
      ins = Signal{f.queue()};
    } else if (opcode == "RUNFETCH") {
      RunFetch r;
      r.dram_base = f.u64("dram_base");
      r.block_size = f.u32("block_size");
      r.block_offset = f.u32("block_offset");
      r.num_blocks = f.u32("num_blocks");
      r.buf_offset = f.u32("buf_offset");
      r.buf_start = f.u32("buf_start");
      r.buf_range = f.u32("buf_range");
      r.words_per_buffer = f.u32("words_per_buffer");
      ins = r;
    } else if (opcode == "RUNEXECUTE") {
      RunExecute r;
      r.lhs_offset = f.u32("lhs_offset");
      r.rhs_offset = f.u32("rhs_offset");
      r.num_reads = f.u32("num_reads");
      r.shift = f.u32("shift");
      r.negate = f.flag("negate");
      r.acc_reset = f.flag("acc_reset");
      ins = r;
    } else if (opcode == "RUNRESULT") {
      RunResult r;
      r.dram_base = f.u64("dram_base");
      r.offset = f.u64("offset");
      r.row_stride = f.u32("row_stride");
      r.valid_rows = f.u32("valid_rows");
      r.valid_cols = f.u32("valid_cols");
      ins = r;
    } else {
      throw ParseError(lineno, "unknown opcode '" + opcode + "'");
    }
    f.finish();
    p.stream(*stage).push_back(ins);
  }
  return p;
}

// ---------------------------------------------------------------------------
// validation

enum class ViolationKind { StageLegality, Bounds, Alignment, TokenProtocol };

struct Violation {
  ViolationKind kind{};
  Stage stage{};
  std::size_t index = 0;  // instruction index within the stage stream
  std::string message;
};

inline std::string describe(const Violation& v) {
  return std::string(stage_name(v.stage)) + "[" + std::to_string(v.index) +
         "]: " + v.message;
}

inline bool queue_legal(Stage s, const Instruction& ins) {
  if (auto w = std::get_if<Wait>(&ins)) return queue_consumer(w->queue) == s;
  if (auto g = std::get_if<Signal>(&ins)) return queue_producer(g->queue) == s;
  return true;
}

/// Write extent of a RunFetch into buffer position q of its range: number of
/// words landing in that buffer.
inline std::uint64_t fetch_words_in_buffer(const RunFetch& f,
                                           std::uint64_t total_words,
                                           std::uint32_t q) {
  const std::uint64_t per_round = std::uint64_t{f.words_per_buffer} * f.buf_range;
  const std::uint64_t full = total_words / per_round;
  const std::uint64_t rem = total_words % per_round;
  const std::uint64_t start = std::uint64_t{q} * f.words_per_buffer;
  const std::uint64_t part =
      rem > start ? std::min<std::uint64_t>(rem - start, f.words_per_buffer) : 0;
  return full * f.words_per_buffer + part;
}

/// Checks every instruction against the config and lints the token protocol.
/// Returns an empty list iff the program is well formed.
inline std::vector<Violation> validate(const Program& p, const HWConfig& cfg) {
  std::vector<Violation> out;
  auto add = [&](ViolationKind k, Stage s, std::size_t i, std::string msg) {
    out.push_back({k, s, i, std::move(msg)});
  };
  const std::uint64_t word_bytes = cfg.Dk / 8;
  const std::uint64_t rd_align = std::max<std::uint32_t>(1, cfg.F / 8);
  const std::uint64_t wr_align = std::max<std::uint32_t>(1, cfg.R / 8);

  for (Stage s : kStages) {
    const auto& stream = p.stream(s);
    for (std::size_t i = 0; i < stream.size(); i++) {
      const auto& ins = stream[i];
      if (!queue_legal(s, ins)) {
        add(ViolationKind::StageLegality, s, i,
            "queue not usable from this stage in this direction");
        continue;
      }
      if (auto f = std::get_if<RunFetch>(&ins)) {
        if (s != Stage::Fetch) {
          add(ViolationKind::StageLegality, s, i, "RunFetch outside fetch stage");
          continue;
        }
        if (f->buf_range == 0 || f->words_per_buffer == 0) {
          add(ViolationKind::Bounds, s, i, "buf_range and words_per_buffer must be >= 1");
          continue;
        }
        if (std::uint64_t{f->buf_start} + f->buf_range > cfg.num_buffers())
          add(ViolationKind::Bounds, s, i, "buffer range exceeds Dm+Dn buffers");
        if (word_bytes == 0 || f->total_bytes() % word_bytes != 0) {
          add(ViolationKind::Bounds, s, i, "fetched bytes not a multiple of the Dk-bit word");
          continue;
        }
        const std::uint64_t words = f->total_bytes() / word_bytes;
        for (std::uint32_t q = 0; q < f->buf_range; q++) {
          const std::uint32_t b = f->buf_start + q;
          if (b >= cfg.num_buffers()) break;
          const auto n = fetch_words_in_buffer(*f, words, q);
          if (n > 0 && f->buf_offset + n > cfg.buffer_depth(b)) {
            add(ViolationKind::Bounds, s, i,
                "write to buffer " + std::to_string(b) + " ends at word " +
                    std::to_string(f->buf_offset + n) + " beyond depth " +
                    std::to_string(cfg.buffer_depth(b)));
            break;
          }
        }
        if (f->dram_base % rd_align != 0 ||
            (f->num_blocks > 1 && f->block_offset % rd_align != 0))
          add(ViolationKind::Alignment, s, i,
              "fetch address not aligned to the read channel width");
      } else if (auto e = std::get_if<RunExecute>(&ins)) {
        if (s != Stage::Execute) {
          add(ViolationKind::StageLegality, s, i, "RunExecute outside execute stage");
          continue;
        }
        if (std::uint64_t{e->lhs_offset} + e->num_reads > cfg.Bm)
          add(ViolationKind::Bounds, s, i, "lhs reads exceed Bm");
        if (std::uint64_t{e->rhs_offset} + e->num_reads > cfg.Bn)
          add(ViolationKind::Bounds, s, i, "rhs reads exceed Bn");
        if (e->shift >= cfg.A)
          add(ViolationKind::Bounds, s, i, "shift must be below the accumulator width");
      } else if (auto r = std::get_if<RunResult>(&ins)) {
        if (s != Stage::Result) {
          add(ViolationKind::StageLegality, s, i, "RunResult outside result stage");
          continue;
        }
        if (r->valid_rows > cfg.Dm || r->valid_cols > cfg.Dn)
          add(ViolationKind::Bounds, s, i, "valid region larger than the DPA");
        if (r->dram_base % wr_align != 0 || r->row_stride % wr_align != 0)
          add(ViolationKind::Alignment, s, i,
              "result address not aligned to the write channel width");
      }
    }
  }

  // token balance: every Wait needs a matching Signal
  for (TokenQueue q : kQueues) {
    auto count = [&](Stage s, bool waits) {
      std::size_t n = 0;
      for (const auto& ins : p.stream(s)) {
        if (waits) {
          if (auto w = std::get_if<Wait>(&ins); w && w->queue == q) n++;
        } else {
          if (auto g = std::get_if<Signal>(&ins); g && g->queue == q) n++;
        }
      }
      return n;
    };
    const auto waits = count(queue_consumer(q), true);
    const auto signals = count(queue_producer(q), false);
    if (waits > signals)
      add(ViolationKind::TokenProtocol, queue_consumer(q), 0,
          std::string(queue_name(q)) + ": " + std::to_string(waits) +
              " waits but only " + std::to_string(signals) + " signals");
  }

  // untimed execution of the token protocol; a stuck state is a deadlock
  // under every timing
  {
    std::array<std::size_t, 3> pc{};
    std::array<std::size_t, 4> tokens{};
    bool progress = true;
    while (progress) {
      progress = false;
      for (Stage s : kStages) {
        const auto& st = p.stream(s);
        auto& i = pc[static_cast<int>(s)];
        while (i < st.size()) {
          if (auto w = std::get_if<Wait>(&st[i])) {
            auto& t = tokens[static_cast<int>(w->queue)];
            if (t == 0) break;
            t--;
          } else if (auto g = std::get_if<Signal>(&st[i])) {
            tokens[static_cast<int>(g->queue)]++;
          }
          i++;
          progress = true;
        }
      }
    }
    bool stuck = false;
    for (Stage s : kStages)
      if (pc[static_cast<int>(s)] < p.stream(s).size()) stuck = true;
    if (stuck) {
      std::string msg = "token protocol cannot complete; blocked at";
      for (Stage s : kStages)
        msg += " " + std::string(stage_name(s)) + "=" +
               std::to_string(pc[static_cast<int>(s)]);
      add(ViolationKind::TokenProtocol, Stage::Fetch, 0, msg);
    }
  }
  return out;
}

}  // namespace bitserial
