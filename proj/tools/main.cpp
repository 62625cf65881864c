#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace bitserial_cli;

namespace {

void add_config_flags(CLI::App* app, std::string& cfg, int& instance) {
  app->add_option("--cfg", cfg, "overlay config file (key=value)");
  app->add_option("--instance", instance, "built-in instance 1..6 when no --cfg")
      ->check(CLI::Range(1, 6));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bit-serial matrix multiplication overlay: reference GEMM, "
               "scheduler, cycle simulator and cost model"};
  app.require_subcommand(1);

  GemmOptions gemm;
  auto* g = app.add_subcommand("gemm", "reference bit-serial GEMM of two matrix files");
  g->add_option("lhs", gemm.lhs, "left matrix (.bism)")->required();
  g->add_option("rhs", gemm.rhs, "right matrix (.bism)")->required();
  g->add_option("--out", gemm.out, "write the product as a .bism file");

  CompileOptions comp;
  auto* c = app.add_subcommand("compile", "compile a matmul to a program and memory manifest");
  add_config_flags(c, comp.cfg, comp.instance);
  c->add_option("--m", comp.w.m);
  c->add_option("--k", comp.w.k);
  c->add_option("--n", comp.w.n);
  c->add_option("--lbits", comp.w.lbits);
  c->add_option("--rbits", comp.w.rbits);
  c->add_flag("--lsigned", comp.w.lsigned);
  c->add_flag("--rsigned", comp.w.rsigned);
  c->add_flag("--overlap", comp.overlap, "overlapped schedule instead of sequential");
  c->add_option("--planes", comp.planes, "active plane pairs, e.g. 1:1,0:1");
  c->add_option("--lhs", comp.lhs, "left matrix file instead of random data");
  c->add_option("--rhs", comp.rhs, "right matrix file instead of random data");
  c->add_option("--seed", comp.seed, "seed for random operands");
  c->add_option("--out", comp.out, "output prefix");

  SimulateOptions sim;
  auto* s = app.add_subcommand("simulate", "run a program on the cycle-level simulator");
  add_config_flags(s, sim.cfg, sim.instance);
  s->add_option("program", sim.program, "program text")->required();
  s->add_option("--manifest", sim.manifest, "memory manifest written by compile");
  s->add_option("--memory-bytes", sim.memory_bytes, "memory size without a manifest");
  s->add_flag("!--no-validate", sim.validate, "skip static program validation");
  s->add_option("--out", sim.out, "also write the report here");

  SweepOptions sweep;
  auto* w = app.add_subcommand("sweep", "CSV series: efficiency, multibit, overlap, dse");
  w->add_option("kind", sweep.kind)->required()
      ->check(CLI::IsMember({"efficiency", "multibit", "overlap", "dse"}));
  w->add_option("--cfg", sweep.cfgs, "config files (repeatable)");
  w->add_option("--instance", sweep.instances, "built-in instances (repeatable)");
  w->add_option("--k", sweep.ks, "k values");
  w->add_option("--m", sweep.m);
  w->add_option("--n", sweep.n);
  w->add_option("--bits", sweep.bits, "operand bits for efficiency/overlap");
  w->add_option("--max-bits", sweep.max_bits, "largest w and a for multibit");
  w->add_option("--lut", sweep.dse.lut);
  w->add_option("--bram", sweep.dse.bram);
  w->add_option("--bandwidth", sweep.dse.bandwidth_gbps, "read bandwidth budget, GB/s");
  w->add_option("--costs", sweep.dse.costs, "cost constants file");

  EstimateOptions est;
  auto* e = app.add_subcommand("estimate", "LUT/BRAM/GOPS estimate as JSON");
  add_config_flags(e, est.cfg, est.instance);
  e->add_option("--costs", est.costs, "cost constants file");

  DseOptions dse;
  auto* d = app.add_subcommand("dse", "enumerate configs within a resource budget (CSV)");
  d->add_option("--lut", dse.lut);
  d->add_option("--bram", dse.bram);
  d->add_option("--bandwidth", dse.bandwidth_gbps, "read bandwidth budget, GB/s");
  d->add_option("--dm", dse.dm);
  d->add_option("--dk", dse.dk);
  d->add_option("--dn", dse.dn);
  d->add_option("--base-cfg", dse.base_cfg, "config supplying B, F, R and clock");
  d->add_option("--costs", dse.costs, "cost constants file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*g) return cmd_gemm(gemm, std::cout);
    if (*c) return cmd_compile(comp, std::cout);
    if (*s) return cmd_simulate(sim, std::cout);
    if (*w) return cmd_sweep(sweep, std::cout);
    if (*e) return cmd_estimate(est, std::cout);
    if (*d) return cmd_dse(dse, std::cout);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
