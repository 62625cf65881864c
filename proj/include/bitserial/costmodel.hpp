#pragma once
// Analytical LUT / BRAM model and a budgeted design-space enumeration.
//
//   lut_dpu   = alpha_dpu * Dk + beta_dpu
//   lut_array = Dm * Dn * (lut_dpu + lut_res)
//   lut_total = lut_base + lut_array
//   bram_array = ceil(Dk / 32) * (Dm * ceil(Bm / 1024) + Dn * ceil(Bn / 1024))
//   bram_total = bram_base + bram_array

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bitserial/error.hpp"
#include "bitserial/hwmodel.hpp"
#include "bitserial/keyvalue.hpp"

namespace bitserial {

struct CostConstants {
  double alpha_dpu = 2.04;
  double beta_dpu = 109.41;
  double lut_res = 120.1;
  double lut_base = 718.0;
  double bram_base = 0.0;

  bool operator==(const CostConstants&) const = default;
};

inline CostConstants parse_cost_constants(std::istream& is) {
  CostConstants c;
  for (const auto& [key, e] : parse_key_values(is)) {
    const double v = parse_double(e.value, e.line, key);
    if (v < 0) throw ParseError(e.line, key + " must be nonnegative");
    if (key == "alpha_dpu") c.alpha_dpu = v;
    else if (key == "beta_dpu") c.beta_dpu = v;
    else if (key == "lut_res") c.lut_res = v;
    else if (key == "lut_base") c.lut_base = v;
    else if (key == "bram_base") c.bram_base = v;
    else throw ParseError(e.line, "unknown cost key '" + key + "'");
  }
  return c;
}

inline CostConstants load_cost_constants(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  return parse_cost_constants(is);
}

struct CostEstimate {
  double lut_dpu_each = 0;
  double lut_res_each = 0;
  double lut_array = 0;
  double lut_base = 0;
  double lut_total = 0;
  std::uint64_t bram_per_word = 0;  // ceil(Dk / 32)
  std::uint64_t bram_lhs = 0;       // Dm * ceil(Bm / 1024), per 32-bit slice
  std::uint64_t bram_rhs = 0;
  std::uint64_t bram_array = 0;
  double bram_base = 0;
  double bram_total = 0;
  double peak_gops = 0;

  // lut_total / binary ops per cycle
  double lut_per_op(const HWConfig& c) const {
    return lut_total / (2.0 * c.Dm * c.Dn * c.Dk);
  }
};

inline void lut_cost(const HWConfig& c, const CostConstants& k, CostEstimate& e) {
  e.lut_dpu_each = k.alpha_dpu * c.Dk + k.beta_dpu;
  e.lut_res_each = k.lut_res;
  e.lut_array = static_cast<double>(c.Dm) * c.Dn * (e.lut_dpu_each + k.lut_res);
  e.lut_base = k.lut_base;
  e.lut_total = e.lut_base + e.lut_array;
}

inline void bram_cost(const HWConfig& c, const CostConstants& k, CostEstimate& e) {
  auto cdiv = [](std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; };
  e.bram_per_word = cdiv(c.Dk, 32);
  e.bram_lhs = std::uint64_t{c.Dm} * cdiv(c.Bm, 1024);
  e.bram_rhs = std::uint64_t{c.Dn} * cdiv(c.Bn, 1024);
  e.bram_array = e.bram_per_word * (e.bram_lhs + e.bram_rhs);
  e.bram_base = k.bram_base;
  e.bram_total = e.bram_base + static_cast<double>(e.bram_array);
}

inline CostEstimate estimate(const HWConfig& c, const CostConstants& k = {}) {
  CostEstimate e;
  lut_cost(c, k, e);
  bram_cost(c, k, e);
  e.peak_gops = peak_gops(c);
  return e;
}

struct AccuracyRow {
  HWConfig cfg;
  double predicted = 0;
  double actual = 0;
  double rel_error = 0;  // (predicted - actual) / actual
};

struct AccuracyReport {
  std::vector<AccuracyRow> rows;
  double mean_abs_error = 0;
  double max_abs_error = 0;
};

inline AccuracyReport model_accuracy(std::span<const HWConfig> cfgs,
                                     std::span<const double> actual_luts,
                                     const CostConstants& k = {}) {
  if (cfgs.size() != actual_luts.size())
    throw DimensionError("model_accuracy: config and actual counts differ");
  AccuracyReport rep;
  for (std::size_t i = 0; i < cfgs.size(); i++) {
    if (!(actual_luts[i] > 0)) throw RangeError("actual LUT count must be positive");
    AccuracyRow r{cfgs[i], estimate(cfgs[i], k).lut_total, actual_luts[i], 0};
    r.rel_error = (r.predicted - r.actual) / r.actual;
    rep.mean_abs_error += std::abs(r.rel_error);
    rep.max_abs_error = std::max(rep.max_abs_error, std::abs(r.rel_error));
    rep.rows.push_back(r);
  }
  if (!rep.rows.empty()) rep.mean_abs_error /= static_cast<double>(rep.rows.size());
  return rep;
}

struct Budget {
  double lut = 0;
  double bram = 0;
  double bandwidth_gbps = 0;  // read channel, GB/s
};

/// Read-channel bandwidth the instance needs: F bits per cycle at fclk.
inline double read_bandwidth_gbps(const HWConfig& c) {
  return c.F / 8.0 * c.fclk_mhz / 1000.0;
}

struct DseRanges {
  std::vector<std::uint32_t> dm, dk, dn;
  HWConfig base;  // everything except Dm, Dk, Dn
};

struct DseCandidate {
  HWConfig cfg;
  CostEstimate cost;
};

inline std::vector<DseCandidate> dse_enumerate(const Budget& b, const DseRanges& r,
                                               const CostConstants& k = {}) {
  if (r.dm.empty() || r.dk.empty() || r.dn.empty())
    throw RangeError("dse_enumerate: empty parameter range");
  std::vector<DseCandidate> out;
  for (auto dm : r.dm)
    for (auto dk : r.dk)
      for (auto dn : r.dn) {
        HWConfig c = r.base;
        c.Dm = dm;
        c.Dk = dk;
        c.Dn = dn;
        if (!validate_config(c).ok()) continue;
        const auto e = estimate(c, k);
        if (e.lut_total > b.lut || e.bram_total > b.bram ||
            read_bandwidth_gbps(c) > b.bandwidth_gbps)
          continue;
        out.push_back({c, e});
      }
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    if (x.cost.peak_gops != y.cost.peak_gops)
      return x.cost.peak_gops > y.cost.peak_gops;
    return x.cost.lut_total < y.cost.lut_total;
  });
  return out;
}

}  // namespace bitserial
