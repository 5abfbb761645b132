#pragma once

// Subcommand bodies for the raes command-line tool. Each returns a process
// exit status and throws raes::Error on failure; main() turns exceptions
// into a message and a nonzero exit.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "raes/audio.hpp"
#include "raes/error.hpp"
#include "raes/metrics/complexity.hpp"
#include "raes/metrics/report.hpp"
#include "raes/nn/model.hpp"
#include "raes/nn/weights.hpp"
#include "raes/pipeline.hpp"
#include "raes/synth/dataset.hpp"

namespace raes::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr std::uint64_t kDefaultSeed = 1;

struct SynthOptions {
  fs::path config;
  std::optional<std::uint64_t> seed;  // overrides the config's seed
};

struct ProcessOptions {
  fs::path mic;
  fs::path ref;
  fs::path model;  // optional with --af-only
  fs::path out;
  bool af_only = false;
  std::optional<double> dtd_gate;  // confidence
  std::string alpha_profile;       // recorded only
};

struct EvalOptions {
  fs::path manifest;
  fs::path processed;
  fs::path out;
};

struct BenchOptions {
  fs::path model;
  double seconds = 60.0;
  int runs = 3;
  std::uint64_t seed = kDefaultSeed;
};

struct ExportOptions {
  fs::path out;
  std::string kind = "random";  // random | pass-through | zero
  std::uint64_t seed = kDefaultSeed;
};

inline void require_file(const fs::path& p, const char* what) {
  if (p.empty()) throw InvalidArgument(std::string(what) + " path is required");
  if (!fs::is_regular_file(p)) throw InvalidArgument(std::string(what) + " not found: " + p.string());
}

inline void require_parent(const fs::path& p, const char* what) {
  if (p.empty()) throw InvalidArgument(std::string(what) + " path is required");
  const auto parent = p.parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw InvalidArgument(std::string(what) + " directory does not exist: " + parent.string());
  }
}

inline std::shared_ptr<const nn::RaesModel> load_model(const fs::path& path) {
  return std::make_shared<const nn::RaesModel>(nn::load_weights_file(path));
}

inline int cmd_synth(const SynthOptions& opt, std::ostream& os) {
  require_file(opt.config, "config");
  synth::DatasetConfig cfg = synth::load_dataset_config(opt.config);
  if (opt.seed) cfg.seed = *opt.seed;
  const auto summary = synth::synth_dataset(cfg);
  os << "records            " << summary.records << "\n"
     << "far-end only       " << summary.far_end_single << "\n"
     << "wav files          " << 4 * summary.records << "\n"
     << "frames near-end    " << summary.label_histogram[0] << "\n"
     << "frames far-end     " << summary.label_histogram[1] << "\n"
     << "frames double-talk " << summary.label_histogram[2] << "\n"
     << "  mutual silence   " << summary.mutual_silence_frames << "\n"
     << "manifest           " << summary.manifest.string() << "\n";
  return 0;
}

inline int cmd_process(const ProcessOptions& opt, std::ostream& os) {
  require_file(opt.mic, "mic");
  require_file(opt.ref, "reference");
  if (!opt.af_only || !opt.model.empty()) require_file(opt.model, "model");
  require_parent(opt.out, "output");

  const AudioSignal mic = read_wav(opt.mic, kDefaultSampleRate);
  const AudioSignal ref = read_wav(opt.ref, kDefaultSampleRate);
  if (mic.size() != ref.size()) {
    throw AudioFormatError("mic and reference lengths differ (" + std::to_string(mic.size()) + " vs " +
                           std::to_string(ref.size()) + " samples)");
  }
  std::shared_ptr<const nn::RaesModel> model;
  if (!opt.model.empty()) model = load_model(opt.model);

  PipelineConfig cfg;
  cfg.mask_source = opt.af_only ? MaskSource::kAfOnly : MaskSource::kNetwork;
  if (opt.dtd_gate) {
    cfg.dtd_gate = true;
    cfg.dtd_confidence = *opt.dtd_gate;
  }
  const OfflineResult r = process_offline(mic, ref, cfg, model);
  write_wav(opt.out, opt.af_only ? r.af_error : r.enhanced);
  os << "wrote " << opt.out.string() << " (" << mic.size() << " samples";
  if (!opt.alpha_profile.empty()) os << ", alpha profile " << opt.alpha_profile;
  os << ")\n";
  return 0;
}

inline int cmd_eval(const EvalOptions& opt, std::ostream& os) {
  require_file(opt.manifest, "manifest");
  if (!fs::is_directory(opt.processed)) {
    throw InvalidArgument("processed directory not found: " + opt.processed.string());
  }
  require_parent(opt.out, "report");
  const auto report = metrics::evaluate_dataset(opt.manifest, opt.processed);
  std::ofstream out(opt.out);
  if (!out) throw Error("cannot write " + opt.out.string());
  out << report.to_json().dump(2) << "\n";
  if (!out) throw Error("failed writing " + opt.out.string());
  report.print_table(os);
  for (const auto& id : report.missing) os << "missing: " << id << "\n";
  for (const auto& [id, why] : report.failed) os << "failed: " << id << ": " << why << "\n";
  return 0;
}

// Far-end white noise, mic = attenuated delayed echo plus a weaker
// independent near-end noise.
inline std::pair<AudioSignal, AudioSignal> bench_signals(double seconds, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(seconds * kDefaultSampleRate);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 0.1f);
  AudioSignal far, mic;
  far.samples.resize(n);
  mic.samples.resize(n);
  for (auto& v : far.samples) v = g(rng);
  for (std::size_t i = 0; i < n; ++i) {
    mic.samples[i] = (i >= 80 ? 0.5f * far.samples[i - 80] : 0.0f) + 0.3f * g(rng);
  }
  return {std::move(mic), std::move(far)};
}

struct BenchReport {
  double rt_factor = 0.0;
  double mflops = 0.0;
  std::size_t parameters = 0;
  double model_mb = 0.0;
  std::string fingerprint;
};

inline BenchReport run_bench(const BenchOptions& opt) {
  require_file(opt.model, "model");
  if (!(opt.seconds > 0.0)) throw InvalidArgument("--seconds must be positive");
  const auto model = load_model(opt.model);
  const auto [mic, far] = bench_signals(opt.seconds, opt.seed);
  const PipelineConfig cfg;
  const auto m = metrics::rt_factor([&] { (void)process_offline(mic, far, cfg, model); }, mic.duration_seconds(),
                                    opt.runs);
  BenchReport r;
  r.rt_factor = m.rt_factor;
  r.mflops = metrics::count_mflops(model->table());
  r.parameters = model->weights().parameter_count();
  r.model_mb = static_cast<double>(fs::file_size(opt.model)) / 1e6;
  r.fingerprint = nn::hex(model->weights().fingerprint());
  return r;
}

inline int cmd_bench(const BenchOptions& opt, std::ostream& os) {
  const BenchReport r = run_bench(opt);
  os << std::fixed << std::setprecision(4) << "RT factor      " << r.rt_factor << "  (" << opt.seconds
     << " s audio, median of " << opt.runs << ")\n"
     << std::setprecision(3) << "MFLOPs/frame   " << r.mflops << "\n"
     << "parameters     " << r.parameters << "\n"
     << "model size MB  " << r.model_mb << "\n"
     << "fingerprint    " << r.fingerprint << "\n";
  return 0;
}

inline int cmd_export_fixture(const ExportOptions& opt, std::ostream& os) {
  require_parent(opt.out, "output");
  nn::WeightBundle bundle;
  if (opt.kind == "random") {
    bundle = nn::make_random_bundle(opt.seed);
  } else if (opt.kind == "pass-through") {
    bundle = nn::make_pass_through_bundle();
  } else if (opt.kind == "zero") {
    bundle = nn::make_zero_bundle();
  } else {
    throw InvalidArgument("unknown fixture kind '" + opt.kind + "' (random, pass-through, zero)");
  }
  nn::save_weights_file(opt.out, bundle);
  os << "wrote " << opt.out.string() << " (" << bundle.parameter_count() << " parameters, fingerprint "
     << nn::hex(bundle.fingerprint()) << ")\n";
  return 0;
}

}  // namespace raes::cli
