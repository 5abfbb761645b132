#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "raes/cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace raes::cli;
  CLI::App app{"Residual echo suppression: data synthesis, processing, evaluation, benchmarking"};
  app.require_subcommand(1);

  SynthOptions synth;
  std::uint64_t synth_seed = 0;
  auto* s = app.add_subcommand("synth", "generate a mixture dataset from a JSON config");
  s->add_option("--config", synth.config, "dataset config (JSON)")->required();
  auto* seed_opt = s->add_option("--seed", synth_seed, "override the config seed");

  ProcessOptions proc;
  double gate = 0.9;
  auto* p = app.add_subcommand("process", "suppress echo in a mic recording");
  p->add_option("--mic", proc.mic, "microphone WAV (mono, 16 kHz)")->required();
  p->add_option("--ref", proc.ref, "far-end reference WAV")->required();
  p->add_option("--model", proc.model, "RAES weight file");
  p->add_option("--out", proc.out, "output WAV")->required();
  p->add_flag("--af-only", proc.af_only, "bypass the network and write the AF error e(n)");
  auto* gate_opt = p->add_option("--dtd-gate", gate, "force zero masks on confident far-end single talk");
  p->add_option("--alpha-profile", proc.alpha_profile, "suppression-ratio tag of the model (metadata)");
  std::uint64_t unused_seed = kDefaultSeed;
  p->add_option("--seed", unused_seed, "accepted for uniformity; processing is deterministic");

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "score processed outputs against a manifest");
  e->add_option("--manifest", ev.manifest, "manifest.jsonl")->required();
  e->add_option("--processed", ev.processed, "directory of <id>.wav outputs")->required();
  e->add_option("--out", ev.out, "JSON report path")->required();

  BenchOptions bench;
  auto* b = app.add_subcommand("bench", "real-time factor and complexity");
  b->add_option("--model", bench.model, "RAES weight file")->required();
  b->add_option("--seconds", bench.seconds, "audio length")->capture_default_str();
  b->add_option("--runs", bench.runs, "timed runs after one warm-up")->capture_default_str()->check(CLI::PositiveNumber);
  b->add_option("--seed", bench.seed, "noise generator seed")->capture_default_str();

  ExportOptions exp;
  auto* x = app.add_subcommand("export-fixture", "write an untrained weight file");
  x->add_option("--out", exp.out, "output .raes path")->required();
  x->add_option("--kind", exp.kind, "random | pass-through | zero")->capture_default_str();
  x->add_option("--seed", exp.seed, "seed for random weights")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (s->parsed()) {
      if (seed_opt->count()) synth.seed = synth_seed;
      return cmd_synth(synth, std::cout);
    }
    if (p->parsed()) {
      if (gate_opt->count()) proc.dtd_gate = gate;
      return cmd_process(proc, std::cout);
    }
    if (e->parsed()) return cmd_eval(ev, std::cout);
    if (b->parsed()) return cmd_bench(bench, std::cout);
    if (x->parsed()) return cmd_export_fixture(exp, std::cout);
  } catch (const std::exception& ex) {
    std::cerr << "raes: " << ex.what() << "\n";
    return 1;
  }
  return 2;
}
