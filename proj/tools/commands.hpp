#pragma once
// Subcommand bodies for the bsmm command line tool. Each returns the
// process exit code.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bitserial/costmodel.hpp"
#include "bitserial/gemm.hpp"
#include "bitserial/manifest.hpp"
#include "bitserial/matrix_io.hpp"
#include "bitserial/scheduler.hpp"
#include "bitserial/simulator.hpp"

namespace bitserial_cli {

using namespace bitserial;

enum ExitCode : int {
  kOk = 0,
  kMismatch = 1,
  kUsage = 2,
  kDeadlock = 3,
  kFault = 4,
};

inline HWConfig resolve_config(const std::string& path, int instance) {
  if (!path.empty()) return load_hwconfig(path);
  return reference_instance(instance > 0 ? instance : 1);
}

/// "i:j,i:j,..." -> plane pairs
inline std::vector<PlanePair> parse_planes(const std::string& s) {
  std::vector<PlanePair> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw Error("bad plane pair '" + item + "', expected i:j");
    const auto i = parse_uint(item.substr(0, colon), 0, "planes");
    const auto j = parse_uint(item.substr(colon + 1), 0, "planes");
    out.push_back({static_cast<unsigned>(i), static_cast<unsigned>(j)});
  }
  return out;
}

inline IntMatrix random_matrix(std::mt19937_64& rng, std::size_t rows,
                               std::size_t cols, unsigned bits, bool is_signed) {
  std::uniform_int_distribution<std::int64_t> d(min_value(bits, is_signed),
                                                max_value(bits, is_signed));
  std::vector<std::int64_t> e(rows * cols);
  for (auto& v : e) v = d(rng);
  return IntMatrix(rows, cols, bits, is_signed, std::move(e));
}

// ---------------------------------------------------------------------------

struct GemmOptions {
  std::string lhs, rhs, out;
};

inline int cmd_gemm(const GemmOptions& o, std::ostream& out) {
  const IntMatrix l = load_matrix(o.lhs).to_int_matrix();
  const IntMatrix r = load_matrix(o.rhs).to_int_matrix();
  const ResultMatrix p = matmul_bitserial(l, r);
  const ResultMatrix ref = matmul_oracle(l, r);
  if (!o.out.empty()) {
    MatrixFile f;
    f.rows = static_cast<std::uint32_t>(p.rows);
    f.cols = static_cast<std::uint32_t>(p.cols);
    f.bits = 64;
    f.is_signed = true;
    f.elems = p.elems;
    save_matrix(o.out, f);
  }
  json rows = json::array();
  for (std::size_t i = 0; i < p.rows; i++)
    rows.push_back(std::vector<std::int64_t>(p.elems.begin() + i * p.cols,
                                             p.elems.begin() + (i + 1) * p.cols));
  const bool match = p == ref;
  out << json{{"rows", p.rows}, {"cols", p.cols}, {"result", rows},
              {"oracle_match", match},
              {"binary_ops", count_binary_ops(l.rows(), l.cols(), r.cols(),
                                              l.bits(), r.bits()).binary_ops}}
             .dump(2)
      << "\n";
  return match ? kOk : kMismatch;
}

// ---------------------------------------------------------------------------

struct CompileOptions {
  std::string cfg;
  int instance = 0;
  MatMulDescriptor w;
  bool overlap = false;
  std::string planes;  // empty: all
  std::string lhs, rhs;  // optional input matrices
  std::uint64_t seed = 1;
  std::string out = "program";
};

inline int cmd_compile(const CompileOptions& o, std::ostream& out) {
  const HWConfig cfg = resolve_config(o.cfg, o.instance);
  MatMulDescriptor w = o.w;
  std::optional<IntMatrix> l, r;
  if (!o.lhs.empty() || !o.rhs.empty()) {
    if (o.lhs.empty() || o.rhs.empty())
      throw Error("--lhs and --rhs must be given together");
    l = load_matrix(o.lhs).to_int_matrix();
    r = load_matrix(o.rhs).to_int_matrix();
    w = describe_operands(*l, *r);
  } else {
    std::mt19937_64 rng(o.seed);
    check_descriptor(w);
    l = random_matrix(rng, w.m, w.k, w.lbits, w.lsigned);
    r = random_matrix(rng, w.k, w.n, w.rbits, w.rsigned);
  }
  const auto pairs =
      o.planes.empty() ? all_plane_pairs(w.lbits, w.rbits) : parse_planes(o.planes);
  const CompiledProgram cp = precision_skip(w, cfg, pairs, o.overlap);

  const std::filesystem::path prefix(o.out);
  const std::string base = prefix.filename().string();
  save_matrix(o.out + ".lhs.bism", MatrixFile::from(*l));
  save_matrix(o.out + ".rhs.bism", MatrixFile::from(*r));
  {
    std::ofstream ps(o.out + ".prog");
    if (!ps) throw Error("cannot write " + o.out + ".prog");
    ps << serialize(cp.program);
  }
  json pj = json::array();
  for (const auto& p : pairs) pj.push_back({p.lhs, p.rhs});
  const json manifest = {{"image", to_json(cp.image)},
                         {"plan", to_json(cp.plan)},
                         {"config", to_json(cfg)},
                         {"overlap", o.overlap},
                         {"plane_pairs", pj},
                         {"lhs", base + ".lhs.bism"},
                         {"rhs", base + ".rhs.bism"}};
  {
    std::ofstream ms(o.out + ".json");
    if (!ms) throw Error("cannot write " + o.out + ".json");
    ms << manifest.dump(2) << "\n";
  }
  out << json{{"program", o.out + ".prog"},
              {"manifest", o.out + ".json"},
              {"instructions", {{"fetch", cp.program.fetch.size()},
                                {"execute", cp.program.execute.size()},
                                {"result", cp.program.result.size()}}},
              {"plan", to_json(cp.plan)}}
             .dump(2)
      << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct SimulateOptions {
  std::string cfg;
  int instance = 0;
  std::string program;
  std::string manifest;  // optional
  std::uint64_t memory_bytes = 1 << 20;  // used without a manifest
  bool validate = true;
  std::string out;
};

inline int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
  const HWConfig cfg = resolve_config(o.cfg, o.instance);
  std::ifstream ps(o.program);
  if (!ps) throw Error("cannot open " + o.program);
  std::stringstream text;
  text << ps.rdbuf();
  const Program prog = parse_program(text.str());

  json report = {{"config", to_json(cfg)}};
  if (o.validate) {
    const auto violations = validate(prog, cfg);
    if (!violations.empty()) {
      json v = json::array();
      for (const auto& x : violations) v.push_back(describe(x));
      report["violations"] = v;
      out << report.dump(2) << "\n";
      return kUsage;
    }
  }

  std::optional<MemoryImage> image;
  std::optional<ResultMatrix> expected;
  MainMemory mem(o.memory_bytes);
  if (!o.manifest.empty()) {
    const json mj = load_json(o.manifest);
    image = image_from_json(mj.at("image"));
    const auto dir = std::filesystem::path(o.manifest).parent_path();
    const IntMatrix l =
        load_matrix((dir / mj.at("lhs").get<std::string>()).string()).to_int_matrix();
    const IntMatrix r =
        load_matrix((dir / mj.at("rhs").get<std::string>()).string()).to_int_matrix();
    std::vector<PlanePair> pairs;
    for (const auto& p : mj.at("plane_pairs"))
      pairs.push_back({p.at(0).get<unsigned>(), p.at(1).get<unsigned>()});
    mem = materialize(*image, l, r);
    expected = matmul_bitserial(l, r, pairs);
    report["workload"] = to_json(image->desc);
  }

  const auto t0 = std::chrono::steady_clock::now();
  int code = kOk;
  try {
    SimResult res = simulate(cfg, prog, std::move(mem));
    const auto t1 = std::chrono::steady_clock::now();
    report["stats"] = to_json(res.stats);
    report["wall_clock_ms"] =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    if (image) {
      const bool match = extract_result(*image, res.memory) == *expected;
      report["oracle_match"] = match;
      if (!match) code = kMismatch;
    } else {
      report["oracle_match"] = nullptr;
    }
  } catch (const DeadlockError& e) {
    report["error"] = e.what();
    report["deadlock"] = {{"cycle", e.cycle()},
                          {"pcs", {{"fetch", e.pcs()[0]},
                                   {"execute", e.pcs()[1]},
                                   {"result", e.pcs()[2]}}}};
    code = kDeadlock;
  } catch (const SimulationFault& e) {
    report["error"] = e.what();
    code = kFault;
  }
  const std::string s = report.dump(2) + "\n";
  if (!o.out.empty()) {
    std::ofstream os(o.out);
    if (!os) throw Error("cannot write " + o.out);
    os << s;
  }
  out << s;
  return code;
}

// ---------------------------------------------------------------------------

struct EstimateOptions {
  std::string cfg;
  int instance = 0;
  std::string costs;
};

inline CostConstants resolve_costs(const std::string& path) {
  return path.empty() ? CostConstants{} : load_cost_constants(path);
}

inline int cmd_estimate(const EstimateOptions& o, std::ostream& out) {
  const HWConfig cfg = resolve_config(o.cfg, o.instance);
  const auto e = estimate(cfg, resolve_costs(o.costs));
  json j = to_json(e);
  j["lut_per_op"] = e.lut_per_op(cfg);
  j["config"] = to_json(cfg);
  out << j.dump(2) << "\n";
  return kOk;
}

struct DseOptions {
  double lut = 53200, bram = 140, bandwidth_gbps = 1.6;
  std::vector<std::uint32_t> dm{2, 4, 8, 16}, dk{32, 64, 128, 256, 512, 1024},
      dn{2, 4, 8, 16};
  std::string base_cfg;
  std::string costs;
};

inline int cmd_dse(const DseOptions& o, std::ostream& out) {
  DseRanges r;
  r.dm = o.dm;
  r.dk = o.dk;
  r.dn = o.dn;
  if (!o.base_cfg.empty()) r.base = load_hwconfig(o.base_cfg);
  const auto list =
      dse_enumerate({o.lut, o.bram, o.bandwidth_gbps}, r, resolve_costs(o.costs));
  out << "Dm,Dk,Dn,LUT,BRAM,GOPS,LUT/op\n";
  for (const auto& c : list)
    out << c.cfg.Dm << "," << c.cfg.Dk << "," << c.cfg.Dn << ","
        << c.cost.lut_total << "," << c.cost.bram_total << ","
        << c.cost.peak_gops << "," << c.cost.lut_per_op(c.cfg) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct SweepOptions {
  std::string kind;
  std::vector<std::string> cfgs;
  std::vector<int> instances;
  std::vector<std::uint32_t> ks;
  std::uint32_t m = 0, n = 0, k = 4096;  // 0: one DPA tile
  unsigned bits = 1;
  unsigned max_bits = 4;
  DseOptions dse;
};

inline std::vector<std::pair<std::string, HWConfig>> sweep_configs(
    const SweepOptions& o, std::vector<int> fallback) {
  std::vector<std::pair<std::string, HWConfig>> out;
  for (const auto& p : o.cfgs) out.push_back({p, load_hwconfig(p)});
  for (int i : o.instances)
    out.push_back({"instance" + std::to_string(i), reference_instance(i)});
  if (out.empty())
    for (int i : fallback)
      out.push_back({"instance" + std::to_string(i), reference_instance(i)});
  return out;
}

inline int cmd_sweep(const SweepOptions& o, std::ostream& out) {
  if (o.kind == "efficiency") {
    std::vector<std::uint32_t> ks = o.ks;
    if (ks.empty())
      for (std::uint32_t k = 128; k <= 65536; k *= 2) ks.push_back(k);
    out << "config,Dk,k,cycles,efficiency\n";
    for (const auto& [name, cfg] : sweep_configs(o, {1, 2, 3})) {
      const auto m = o.m ? o.m : cfg.Dm;
      const auto n = o.n ? o.n : cfg.Dn;
      for (const auto& p : efficiency_sweep(cfg, m, n, ks, o.bits))
        out << name << "," << cfg.Dk << "," << p.k << "," << p.cycles << ","
            << p.efficiency << "\n";
    }
    return kOk;
  }
  if (o.kind == "multibit") {
    std::vector<std::uint32_t> ks = o.ks;
    if (ks.empty()) ks = {2048, 16384};
    std::vector<std::pair<unsigned, unsigned>> wa;
    for (unsigned w = 1; w <= o.max_bits; w++)
      for (unsigned a = 1; a <= o.max_bits; a++) wa.push_back({w, a});
    out << "config,k,w,a,wa,cycles,projected,lower_bound\n";
    for (const auto& [name, cfg] : sweep_configs(o, {2})) {
      const auto m = o.m ? o.m : cfg.Dm;
      const auto n = o.n ? o.n : cfg.Dn;
      for (auto k : ks)
        for (const auto& p : multibit_sweep(cfg, m, n, k, wa))
          out << name << "," << k << "," << p.w << "," << p.a << ","
              << p.w * p.a << "," << p.cycles << "," << p.projected << ","
              << p.lower_bound << "\n";
    }
    return kOk;
  }
  if (o.kind == "overlap") {
    out << "config,m,k,n,sequential_cycles,overlapped_cycles,speedup\n";
    for (const auto& [name, cfg] : sweep_configs(o, {1})) {
      const MatMulDescriptor w{o.m ? o.m : 256, o.k, o.n ? o.n : 256, o.bits,
                               o.bits, false, false};
      const auto r = overlap_experiment(cfg, w);
      out << name << "," << w.m << "," << w.k << "," << w.n << ","
          << r.sequential_cycles << "," << r.overlapped_cycles << ","
          << r.speedup() << "\n";
    }
    return kOk;
  }
  if (o.kind == "dse") return cmd_dse(o.dse, out);
  throw Error("unknown sweep kind '" + o.kind +
              "' (efficiency, multibit, overlap, dse)");
}

}  // namespace bitserial_cli
