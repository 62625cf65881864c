// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bitserial/costmodel.hpp"
#include "bitserial/gemm.hpp"
#include "bitserial/isa.hpp"
#include "bitserial/matrix_io.hpp"
#include "bitserial/scheduler.hpp"
#include "bitserial/simulator.hpp"
#include "support.hpp"

using namespace bitserial;
using namespace testing_support;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// measured LUTs and peak GOPS of the six runtime instances
struct Measured {
  std::uint32_t dm, dk, dn;
  double lut;
  double gops;
};
constexpr Measured kInstances[] = {
    {8, 64, 8, 19545, 1638.4},  {8, 128, 8, 27740, 3276.8},
    {8, 256, 8, 45573, 6553.6}, {4, 256, 4, 13352, 1638.4},
    {8, 256, 4, 24202, 3276.8}, {4, 512, 4, 21755, 3276.8}};

bool g_tokens_conserved = true;
std::uint64_t g_passing_runs = 0;

ResultMatrix run_compiled(const CompiledProgram& cp, const HWConfig& cfg,
                          const IntMatrix& l, const IntMatrix& r) {
  auto res = simulate(cfg, cp.program, materialize(cp.image, l, r));
  g_passing_runs++;
  g_tokens_conserved &= res.stats.tokens_balanced();
  return extract_result(cp.image, res.memory);
}

Outcome c1_oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(0x5eed0001);
  int bad = 0;
  for (int it = 0; it < 500; it++) {
    const std::size_t m = 1 + rng() % 32, k = 1 + rng() % 512, n = 1 + rng() % 32;
    const unsigned lb = 1 + rng() % 8, rb = 1 + rng() % 8;
    const bool ls = it & 1, rs = (it >> 1) & 1;
    auto l = random_int_matrix(rng, m, k, lb, ls);
    auto r = random_int_matrix(rng, k, n, rb, rs);
    if (!equals(matmul_bitserial(l, r), naive_product(l, r))) bad++;
  }
  const double s = seconds_since(t0);
  return {bad == 0 && s < 60, fmt("500 workloads, %d mismatches, %.1f s (limit 60 s)", bad, s)};
}

Outcome c2_simulator_correctness() {
  const auto t0 = Clock::now();
  std::vector<HWConfig> cfgs;
  for (int i = 1; i <= 6; i++) cfgs.push_back(reference_instance(i));
  HWConfig chunky;
  chunky.Dm = 2;
  chunky.Dk = 32;
  chunky.Dn = 3;
  chunky.Bm = chunky.Bn = 16;
  cfgs.push_back(chunky);

  std::mt19937_64 rng(0x5eed0002);
  int bad = 0, runs = 0;
  for (int it = 0; it < 100; it++) {
    const HWConfig& cfg = cfgs[it % cfgs.size()];
    const std::uint32_t m = 1 + rng() % 64, n = 1 + rng() % 64;
    const std::uint32_t k = 1 + rng() % 4096;
    const unsigned lb = 1 + rng() % 4, rb = 1 + rng() % 4;
    auto l = random_int_matrix(rng, m, k, lb, rng() & 1);
    auto r = random_int_matrix(rng, k, n, rb, rng() & 1);
    const auto want = naive_product(l, r);
    const auto w = describe_operands(l, r);
    for (bool overlap : {false, true}) {
      const auto cp = overlap ? compile_overlapped(w, cfg) : compile_sequential(w, cfg);
      if (!validate(cp.program, cfg).empty() || !equals(run_compiled(cp, cfg, l, r), want))
        bad++;
      runs++;
    }
  }
  // the 2-bit example on the 2x2 array with three plane buffers
  HWConfig ex;
  ex.Dm = ex.Dn = 2;
  ex.Dk = 8;
  ex.Bm = 2;
  ex.Bn = 1;
  ex.F = ex.R = 8;
  IntMatrix l(2, 2, 2, false, {2, 0, 1, 3});
  IntMatrix r(2, 2, 2, false, {0, 1, 1, 2});
  const bool example_ok =
      run_compiled(compile_overlapped(describe_operands(l, r), ex), ex, l, r) ==
      ResultMatrix(2, 2, {0, 2, 3, 7});
  const double s = seconds_since(t0);
  return {bad == 0 && example_ok && s < 300,
          fmt("%d simulated runs, %d mismatches; 2x2 example %s; %.1f s (limit 300 s)",
              runs, bad, example_ok ? "[[0,2],[3,7]]" : "WRONG", s)};
}

Outcome c3_peak_gops() {
  int bad = 0;
  std::string got;
  for (int i = 0; i < 6; i++) {
    const auto& p = kInstances[i];
    HWConfig c;
    c.Dm = p.dm;
    c.Dk = p.dk;
    c.Dn = p.dn;
    c.fclk_mhz = 200;
    const double g = peak_gops(c);
    if (g != p.gops) bad++;
    got += fmt("%s#%d=%.1f", i ? " " : "", i + 1, g);
  }
  return {bad == 0, got};
}

Outcome c4_lut_model() {
  std::vector<HWConfig> cfgs;
  std::vector<double> actual;
  for (const auto& p : kInstances) {
    HWConfig c;
    c.Dm = p.dm;
    c.Dk = p.dk;
    c.Dn = p.dn;
    cfgs.push_back(c);
    actual.push_back(p.lut);
  }
  const auto rep = model_accuracy(cfgs, actual);
  std::string errs;
  for (std::size_t i = 0; i < rep.rows.size(); i++)
    errs += fmt("%s%+.1f%%", i ? " " : "", 100 * rep.rows[i].rel_error);
  return {rep.mean_abs_error <= 0.12 && rep.max_abs_error <= 0.25,
          fmt("mean |err| %.2f%% (limit 12%%), max %.1f%% (limit 25%%); ",
              100 * rep.mean_abs_error, 100 * rep.max_abs_error) +
              errs};
}

Outcome c5_bram_formula() {
  struct P {
    std::uint32_t dm, dk, dn, bm, bn;
  };
  const P grid[] = {{8, 64, 8, 1024, 1024}, {1, 32, 1, 1024, 1024}, {1, 33, 1, 1024, 1024},
                    {1, 32, 1, 1, 1},       {2, 8, 2, 1, 1},        {4, 256, 4, 1024, 1024},
                    {8, 256, 4, 2048, 512}, {4, 512, 4, 1025, 1025}, {2, 1024, 2, 1024, 1024},
                    {3, 96, 5, 3000, 10},   {16, 32, 16, 4096, 4096}, {1, 1, 1, 1, 1},
                    {1, 31, 1, 1024, 1023}, {7, 65, 3, 1, 5000},    {2, 64, 9, 1023, 1024},
                    {5, 128, 5, 2047, 2049}, {1, 2048, 1, 64, 64},  {6, 40, 2, 1024, 3072},
                    {8, 33, 8, 1, 1024},    {12, 100, 12, 8192, 1}};
  int bad = 0;
  for (const auto& p : grid) {
    HWConfig c;
    c.Dm = p.dm;
    c.Dk = p.dk;
    c.Dn = p.dn;
    c.Bm = p.bm;
    c.Bn = p.bn;
    // ceil(Dk/32) * (Dm * ceil(Bm/1024) + Dn * ceil(Bn/1024)) by integer hand arithmetic
    const std::uint64_t slices = p.dk / 32 + (p.dk % 32 != 0);
    const std::uint64_t lb = p.bm / 1024 + (p.bm % 1024 != 0);
    const std::uint64_t rb = p.bn / 1024 + (p.bn % 1024 != 0);
    const std::uint64_t want = slices * (p.dm * lb + p.dn * rb);
    if (estimate(c).bram_array != want) bad++;
  }
  return {bad == 0, fmt("%zu grid points, %d mismatches", std::size(grid), bad)};
}

Outcome c6_efficiency() {
  std::vector<std::uint32_t> ks;
  for (std::uint32_t k = 128; k <= 65536; k *= 2) ks.push_back(k);
  bool monotone = true;
  double e1 = 0, e3 = 0;
  for (int i = 1; i <= 6; i++) {
    const HWConfig c = reference_instance(i);
    const auto pts = efficiency_sweep(c, c.Dm, c.Dn, ks);
    for (std::size_t j = 1; j < pts.size(); j++)
      monotone &= pts[j].efficiency >= pts[j - 1].efficiency;
    for (const auto& p : pts) {
      if (p.k != 8192) continue;
      if (i == 1) e1 = p.efficiency;
      if (i == 3) e3 = p.efficiency;
    }
  }
  const bool ok = std::abs(e1 - 0.89) <= 0.05 && std::abs(e3 - 0.64) <= 0.05 && monotone;
  return {ok, fmt("k=8192: #1 %.1f%% (89+-5), #3 %.1f%% (64+-5); nondecreasing in k: %s",
                  100 * e1, 100 * e3, monotone ? "yes" : "no")};
}

Outcome c7_multibit() {
  const HWConfig c = reference_instance(2);
  std::vector<std::pair<unsigned, unsigned>> wa;
  for (unsigned w = 1; w <= 4; w++)
    for (unsigned a = 1; a <= 4; a++) wa.push_back({w, a});
  int bad = 0, n = 0;
  double worst = 0;
  for (std::uint32_t k : {2048u, 16384u}) {
    for (const auto& p : multibit_sweep(c, c.Dm, c.Dn, k, wa)) {
      n++;
      if (p.cycles > p.projected || p.cycles < p.lower_bound) bad++;
      worst = std::max(worst, static_cast<double>(p.cycles) / p.projected);
    }
  }
  return {bad == 0, fmt("%d points, %d outside [w*a*k/Dk, w*a*t]; max cycles/(w*a*t) = %.3f",
                        n, bad, worst)};
}

Outcome c8_stage_overlap() {
  const auto t0 = Clock::now();
  const auto o = overlap_experiment(reference_instance(1), {256, 4096, 256, 1, 1, false, false});
  const double s = seconds_since(t0);
  const double dov = static_cast<double>(o.overlapped_cycles) / 121133.0 - 1;
  const double dseq = static_cast<double>(o.sequential_cycles) / 266510.0 - 1;
  const bool ok = o.speedup() >= 1.8 && std::abs(dov) <= 0.25 &&
                  std::abs(dseq) <= 0.25 && s < 120;
  return {ok, fmt("overlapped %llu (%+.1f%% vs 121133), sequential %llu (%+.1f%% vs "
                  "266510), speedup %.2fx (>=1.8), %.1f s",
                  static_cast<unsigned long long>(o.overlapped_cycles), 100 * dov,
                  static_cast<unsigned long long>(o.sequential_cycles), 100 * dseq,
                  o.speedup(), s)};
}

Outcome c9_protocol_safety() {
  Program p;
  p.fetch = {Wait{TokenQueue::ExecuteToFetch}, Signal{TokenQueue::FetchToExecute}};
  p.execute = {Wait{TokenQueue::FetchToExecute}, Signal{TokenQueue::ExecuteToFetch}};
  bool fired = false;
  std::uint64_t at = 0;
  try {
    simulate(reference_instance(1), p, MainMemory{});
  } catch (const DeadlockError& e) {
    fired = true;
    at = e.cycle();
  }
  // quiescence starts at cycle 0
  const bool ok = fired && at <= 1 && g_tokens_conserved && g_passing_runs > 0;
  return {ok, fmt("deadlock %s at cycle %llu; tokens conserved on %llu passing runs: %s",
                  fired ? "detected" : "NOT detected", static_cast<unsigned long long>(at),
                  static_cast<unsigned long long>(g_passing_runs),
                  g_tokens_conserved ? "yes" : "no")};
}

Instruction random_instruction(std::mt19937_64& rng, Stage s) {
  auto u32 = [&] { return static_cast<std::uint32_t>(rng()); };
  switch (rng() % 3) {
    case 0:
      for (;;) {
        const auto q = kQueues[rng() % 4];
        if (queue_consumer(q) == s) return Wait{q};
      }
    case 1:
      for (;;) {
        const auto q = kQueues[rng() % 4];
        if (queue_producer(q) == s) return Signal{q};
      }
    default:
      break;
  }
  if (s == Stage::Fetch)
    return RunFetch{rng(), u32(), u32(), u32(), u32(), u32(), u32(), u32()};
  if (s == Stage::Execute)
    return RunExecute{u32(), u32(), u32(), u32() % 64, bool(rng() & 1), bool(rng() & 1)};
  return RunResult{rng(), rng(), u32(), u32(), u32()};
}

Outcome c10_roundtrips() {
  std::mt19937_64 rng(0x5eed000a);
  int bad_prog = 0, bad_mat = 0;
  for (int it = 0; it < 1000; it++) {
    Program p;
    for (Stage s : kStages) {
      const int n = rng() % 20;
      for (int i = 0; i < n; i++) p.stream(s).push_back(random_instruction(rng, s));
    }
    if (parse_program(serialize(p)) != p) bad_prog++;

    const unsigned bits = 1 + rng() % 32;
    auto m = random_int_matrix(rng, rng() % 20, rng() % 20, bits, rng() & 1);
    std::stringstream ss;
    write_matrix(ss, MatrixFile::from(m));
    if (read_matrix(ss).to_int_matrix() != m) bad_mat++;
  }
  return {bad_prog == 0 && bad_mat == 0,
          fmt("1000 programs (%d differ), 1000 matrix files (%d differ)", bad_prog, bad_mat)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"oracle equivalence", c1_oracle_equivalence},
      {"simulator functional correctness", c2_simulator_correctness},
      {"peak GOPS", c3_peak_gops},
      {"LUT cost model", c4_lut_model},
      {"BRAM formula", c5_bram_formula},
      {"execute efficiency", c6_efficiency},
      {"multi-bit runtime", c7_multibit},
      {"stage overlap", c8_stage_overlap},
      {"protocol safety", c9_protocol_safety},
      {"roundtrips", c10_roundtrips},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); i++) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %2zu %-33s %s\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed ? 1 : 0;
}
