#pragma once
// JSON views of configs, memory images and simulation statistics.

#include <fstream>
#include <string>

#include <json.hpp>

#include "bitserial/costmodel.hpp"
#include "bitserial/hwmodel.hpp"
#include "bitserial/scheduler.hpp"
#include "bitserial/simulator.hpp"

namespace bitserial {

using json = nlohmann::json;

inline json to_json(const MatMulDescriptor& w) {
  return {{"m", w.m}, {"k", w.k}, {"n", w.n}, {"lbits", w.lbits},
          {"rbits", w.rbits}, {"lsigned", w.lsigned}, {"rsigned", w.rsigned}};
}

inline MatMulDescriptor descriptor_from_json(const json& j) {
  MatMulDescriptor w;
  w.m = j.at("m").get<std::uint32_t>();
  w.k = j.at("k").get<std::uint32_t>();
  w.n = j.at("n").get<std::uint32_t>();
  w.lbits = j.at("lbits").get<unsigned>();
  w.rbits = j.at("rbits").get<unsigned>();
  w.lsigned = j.at("lsigned").get<bool>();
  w.rsigned = j.at("rsigned").get<bool>();
  return w;
}

inline json to_json(const HWConfig& c) {
  return {{"Dm", c.Dm}, {"Dn", c.Dn}, {"Dk", c.Dk}, {"Bm", c.Bm}, {"Bn", c.Bn},
          {"Br", c.Br}, {"A", c.A}, {"F", c.F}, {"R", c.R},
          {"fclk_mhz", c.fclk_mhz},
          {"exec_overhead_cycles", c.exec_overhead_cycles},
          {"dma_setup_cycles", c.dma_setup_cycles}};
}

inline json to_json(const MemoryImage& im) {
  return {{"workload", to_json(im.desc)},
          {"word_bytes", im.word_bytes},
          {"words_per_row", im.words_per_row},
          {"row_stride", im.row_stride},
          {"lhs_plane_base", im.lhs_plane_base},
          {"rhs_plane_base", im.rhs_plane_base},
          {"result_base", im.result_base},
          {"result_row_stride", im.result_row_stride},
          {"result_elem_bytes", im.result_elem_bytes},
          {"total_bytes", im.total_bytes}};
}

inline MemoryImage image_from_json(const json& j) {
  MemoryImage im;
  im.desc = descriptor_from_json(j.at("workload"));
  im.word_bytes = j.at("word_bytes").get<std::uint32_t>();
  im.words_per_row = j.at("words_per_row").get<std::uint32_t>();
  im.row_stride = j.at("row_stride").get<std::uint32_t>();
  im.lhs_plane_base = j.at("lhs_plane_base").get<std::vector<std::uint64_t>>();
  im.rhs_plane_base = j.at("rhs_plane_base").get<std::vector<std::uint64_t>>();
  im.result_base = j.at("result_base").get<std::uint64_t>();
  im.result_row_stride = j.at("result_row_stride").get<std::uint32_t>();
  im.result_elem_bytes = j.at("result_elem_bytes").get<std::uint32_t>();
  im.total_bytes = j.at("total_bytes").get<std::uint64_t>();
  if (im.lhs_plane_base.size() != im.desc.lbits ||
      im.rhs_plane_base.size() != im.desc.rbits)
    throw Error("manifest plane tables do not match the workload bitwidths");
  return im;
}

inline json to_json(const TilePlan& tp) {
  json pairs = json::array();
  for (const auto& p : tp.pairs) pairs.push_back({p.lhs, p.rhs});
  return {{"tiles_m", tp.tiles_m}, {"tiles_n", tp.tiles_n},
          {"group_m", tp.group_m}, {"group_n", tp.group_n},
          {"chunk_words", tp.chunk_words}, {"num_chunks", tp.num_chunks},
          {"lhs_slots", tp.lhs_slots}, {"rhs_slots", tp.rhs_slots},
          {"double_buffered", tp.double_buffered}, {"plane_pairs", pairs}};
}

inline json to_json(const SimStats& s) {
  json stages = json::object();
  for (Stage st : kStages) {
    const auto& x = s.stage(st);
    stages[std::string(stage_name(st))] = {{"busy", x.busy},
                                           {"stalled_on_wait", x.stalled_on_wait},
                                           {"idle", x.idle},
                                           {"instructions", x.instructions}};
  }
  json tokens = json::object();
  for (TokenQueue q : kQueues) {
    const int i = static_cast<int>(q);
    tokens[std::string(queue_name(q))] = {{"produced", s.tokens_produced[i]},
                                          {"consumed", s.tokens_consumed[i]}};
  }
  return {{"total_cycles", s.total_cycles}, {"stages", stages},
          {"tokens", tokens}, {"fetch_runs", s.fetch_runs},
          {"execute_runs", s.execute_runs}, {"result_runs", s.result_runs},
          {"bytes_read", s.bytes_read}, {"bytes_written", s.bytes_written},
          {"dpa_read_cycles", s.dpa_read_cycles}, {"binary_ops", s.binary_ops},
          {"achieved_gops", s.achieved_gops}, {"efficiency", s.efficiency}};
}

inline json to_json(const CostEstimate& e) {
  return {{"lut_total", e.lut_total},
          {"lut_base", e.lut_base},
          {"lut_array", e.lut_array},
          {"lut_dpu_each", e.lut_dpu_each},
          {"lut_res_each", e.lut_res_each},
          {"bram_total", e.bram_total},
          {"bram_base", e.bram_base},
          {"bram_array", e.bram_array},
          {"bram_per_word", e.bram_per_word},
          {"bram_lhs", e.bram_lhs},
          {"bram_rhs", e.bram_rhs},
          {"peak_gops", e.peak_gops}};
}

inline json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace bitserial
