#pragma once

// Synthetic training / evaluation mixtures.
//
// Per record: far-end u (concatenated utterances, optionally mixed with
// music) -> hard clip (p = 0.7) -> loudspeaker sigmoid -> bulk delay ->
// room impulse response (p = 0.9) -> echo y. The near-end s is a tiled
// utterance or silence; d = s + y at a target SER; frames labeled by activity.
//
// Outputs per record: <id>_u.wav, <id>_d.wav, <id>_s.wav, <id>_y.wav (32-bit
// float) and one JSON line in manifest.jsonl.

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "raes/audio.hpp"
#include "raes/error.hpp"
#include "raes/labels.hpp"
#include "raes/synth/distortion.hpp"
#include "raes/synth/mixing.hpp"
#include "raes/synth/rir.hpp"

namespace raes::synth {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double draw(std::mt19937_64& rng) const {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  }
};

// Sampling ranges and probabilities for one record.
struct SynthParams {
  Range u_max{0.75, 0.99};
  Range gamma{0.15, 0.3};
  Range a_pos{0.05, 0.45};
  Range a_neg{0.1, 0.4};
  Range delay_ms{8.0, 40.0};
  Range ser_db{-13.0, 0.0};
  double clip_probability = 0.7;
  double rir_probability = 0.9;
  NonlinearityMode nonlinearity_mode = NonlinearityMode::kCorrected;
};

struct RirSourceConfig {
  bool simulated = true;
  std::vector<fs::path> wav_dirs;
  int mic_positions_per_room = 4;
  int speaker_positions_per_mic = 5;
};

struct DatasetConfig {
  std::vector<fs::path> farend_dirs;
  std::vector<fs::path> nearend_dirs;
  std::vector<fs::path> music_dirs;
  double music_ratio = 0.1;
  double silent_nearend_ratio = 0.5;
  int farend_utterances = 3;
  int count = 0;
  std::uint64_t seed = 0;
  fs::path output_dir;
  RirSourceConfig rir;
  SynthParams params;
  double sample_rate = kDefaultSampleRate;
  int threads = 0;  // 0 = RAES_THREADS or hardware concurrency
};

inline Range parse_range(const json& j, const std::string& key, Range fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2) throw InvalidArgument("config: '" + key + "' must be [lo, hi]");
  Range r{v[0].get<double>(), v[1].get<double>()};
  if (!(r.lo <= r.hi)) throw InvalidArgument("config: '" + key + "' has lo > hi");
  return r;
}

inline DatasetConfig parse_dataset_config(const json& j, const fs::path& base_dir = {}) {
  auto paths = [&](const char* key) {
    std::vector<fs::path> out;
    if (!j.contains(key)) return out;
    const auto& v = j.at(key);
    if (v.is_string()) {
      out.push_back(base_dir / v.get<std::string>());
    } else {
      for (const auto& p : v) out.push_back(base_dir / p.get<std::string>());
    }
    return out;
  };
  DatasetConfig c;
  try {
    c.farend_dirs = paths("farend_dirs");
    c.nearend_dirs = paths("nearend_dirs");
    c.music_dirs = paths("music_dirs");
    c.music_ratio = j.value("music_ratio", 0.1);
    c.silent_nearend_ratio = j.value("silent_nearend_ratio", 0.5);
    c.farend_utterances = j.value("farend_utterances", 3);
    c.count = j.at("count").get<int>();
    c.seed = j.value("seed", std::uint64_t{0});
    c.output_dir = base_dir / j.at("output_dir").get<std::string>();
    c.sample_rate = j.value("sample_rate", kDefaultSampleRate);
    c.threads = j.value("threads", 0);
    c.params.ser_db = parse_range(j, "ser_range_db", c.params.ser_db);
    c.params.u_max = parse_range(j, "u_max_range", c.params.u_max);
    c.params.gamma = parse_range(j, "gamma_range", c.params.gamma);
    c.params.a_pos = parse_range(j, "a_pos_range", c.params.a_pos);
    c.params.a_neg = parse_range(j, "a_neg_range", c.params.a_neg);
    c.params.delay_ms = parse_range(j, "delay_ms_range", c.params.delay_ms);
    c.params.clip_probability = j.value("clip_probability", 0.7);
    c.params.rir_probability = j.value("rir_probability", 0.9);
    c.params.nonlinearity_mode = parse_nonlinearity_mode(j.value("nonlinearity_mode", std::string("corrected")));
    if (j.contains("rir")) {
      const auto& r = j.at("rir");
      c.rir.simulated = r.value("simulated", true);
      if (r.contains("wav_dir")) {
        const auto& w = r.at("wav_dir");
        if (w.is_string()) c.rir.wav_dirs.push_back(base_dir / w.get<std::string>());
        else for (const auto& p : w) c.rir.wav_dirs.push_back(base_dir / p.get<std::string>());
      }
      c.rir.mic_positions_per_room = r.value("mic_positions_per_room", 4);
      c.rir.speaker_positions_per_mic = r.value("speaker_positions_per_mic", 5);
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  if (c.farend_dirs.empty()) throw InvalidArgument("config: 'farend_dirs' is required");
  if (c.nearend_dirs.empty()) throw InvalidArgument("config: 'nearend_dirs' is required");
  if (c.count <= 0) throw InvalidArgument("config: 'count' must be positive");
  if (c.farend_utterances <= 0) throw InvalidArgument("config: 'farend_utterances' must be positive");
  for (double p : {c.music_ratio, c.silent_nearend_ratio, c.params.clip_probability, c.params.rir_probability}) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("config: probabilities must be in [0, 1]");
  }
  if (c.params.u_max.lo <= 0.0 || c.params.u_max.hi > 1.0) throw InvalidArgument("config: u_max range must lie in (0, 1]");
  if (c.params.delay_ms.lo < 0.0) throw InvalidArgument("config: delay must be non-negative");
  if (!c.rir.simulated && c.rir.wav_dirs.empty() && c.params.rir_probability > 0.0) {
    throw InvalidArgument("config: rir needs 'simulated': true or a 'wav_dir'");
  }
  return c;
}

inline DatasetConfig load_dataset_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidArgument("config " + path.string() + ": " + e.what());
  }
  return parse_dataset_config(j, path.parent_path());
}

// WAV files below each root grouped by containing directory (one group per
// speaker); groups and files are sorted for determinism.
inline std::vector<std::vector<fs::path>> scan_speaker_groups(const std::vector<fs::path>& roots) {
  std::vector<std::vector<fs::path>> groups;
  for (const auto& root : roots) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw InvalidArgument("source directory not found: " + root.string());
    std::map<fs::path, std::vector<fs::path>> by_dir;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (!entry.is_regular_file()) continue;
      auto ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
      if (ext == ".wav") by_dir[entry.path().parent_path()].push_back(entry.path());
    }
    for (auto& [_, files] : by_dir) {
      std::sort(files.begin(), files.end());
      groups.push_back(std::move(files));
    }
  }
  return groups;
}

struct SimulatedRir {
  int room = 0;
  int mic = 0;
  int speaker = 0;
  int rt60_index = 0;
};

// Deterministic mic / loudspeaker placement for (room, mic, speaker).
inline RoomSpec simulated_room(const SimulatedRir& which, std::uint64_t seed) {
  const Vec3& dims = standard_rooms()[static_cast<std::size_t>(which.room)];
  std::seed_seq mic_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        0x51C0u, static_cast<std::uint32_t>(which.room), static_cast<std::uint32_t>(which.mic)};
  std::mt19937_64 mic_rng(mic_seq);
  RoomSpec room;
  room.dims = dims;
  for (std::size_t i = 0; i < 3; ++i) {
    room.mic[i] = std::uniform_real_distribution<double>(0.5, dims[i] - 0.5)(mic_rng);
  }
  std::seed_seq spk_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        0x5EA4u, static_cast<std::uint32_t>(which.room),
                        static_cast<std::uint32_t>(which.mic), static_cast<std::uint32_t>(which.speaker)};
  std::mt19937_64 spk_rng(spk_seq);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> radius(0.3, 1.2);
  constexpr double kMargin = 0.1;
  for (int attempt = 0;; ++attempt) {
    Vec3 dir{normal(spk_rng), normal(spk_rng), normal(spk_rng)};
    const double norm = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
    const double r = radius(spk_rng);
    bool ok = norm > 0.0;
    for (std::size_t i = 0; i < 3 && ok; ++i) {
      room.source[i] = room.mic[i] + r * dir[i] / norm;
      ok = room.source[i] > kMargin && room.source[i] < dims[i] - kMargin;
    }
    if (ok) break;
    if (attempt > 200) {
      for (std::size_t i = 0; i < 3; ++i) room.source[i] = std::clamp(room.source[i], kMargin, dims[i] - kMargin);
      break;
    }
  }
  room.rt60 = kRoomRt60s[static_cast<std::size_t>(which.rt60_index)];
  room.rir_length = kRoomRirLengths[static_cast<std::size_t>(which.rt60_index)];
  return room;
}

struct DatasetSummary {
  int records = 0;
  int far_end_single = 0;
  std::array<std::size_t, 3> label_histogram{};
  std::size_t mutual_silence_frames = 0;
  fs::path manifest;
};

namespace dataset_detail {

inline std::vector<float> tile(const std::vector<float>& src, std::size_t n) {
  std::vector<float> out(n, 0.0f);
  if (src.empty()) return out;
  for (std::size_t i = 0; i < n; ++i) out[i] = src[i % src.size()];
  return out;
}

inline double rms(std::span<const float> x) {
  double e = 0.0;
  for (float v : x) e += static_cast<double>(v) * v;
  return x.empty() ? 0.0 : std::sqrt(e / static_cast<double>(x.size()));
}

inline std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline json rle_json(std::span<const DtdLabel> labels) {
  json runs = json::array();
  for (const auto& [v, n] : run_length_encode(labels)) runs.push_back({v, n});
  return runs;
}

inline json bool_rle_json(const std::vector<bool>& flags) {
  json runs = json::array();
  for (std::size_t i = 0; i < flags.size();) {
    std::size_t j = i;
    while (j < flags.size() && flags[j] == flags[i]) ++j;
    runs.push_back({flags[i] ? 1 : 0, j - i});
    i = j;
  }
  return runs;
}

inline json vec_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

struct Sources {
  std::vector<std::vector<fs::path>> farend;
  std::vector<std::vector<fs::path>> nearend;
  std::vector<fs::path> music;
  std::vector<fs::path> rir_wavs;
};

inline std::string relative_name(const fs::path& p, const std::vector<fs::path>& roots) {
  for (const auto& root : roots) {
    std::error_code ec;
    const auto rel = fs::relative(p, root, ec);
    if (!ec && !rel.empty() && rel.native()[0] != '.') return (root.filename() / rel).generic_string();
  }
  return p.filename().generic_string();
}

}  // namespace dataset_detail

struct GeneratedRecord {
  std::string id;
  AudioSignal u, d, s, y;
  MixResult mix;
  json manifest_line;
};

inline std::uint64_t record_seed(std::uint64_t master, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(index), 0xD5EEDu};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

inline GeneratedRecord generate_record(const DatasetConfig& cfg, const dataset_detail::Sources& src,
                                       int index, bool silent_near) {
  using namespace dataset_detail;
  const std::uint64_t seed = record_seed(cfg.seed, index);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const SynthParams& p = cfg.params;
  GeneratedRecord rec;
  char id[32];
  std::snprintf(id, sizeof id, "rec_%04d", index);
  rec.id = id;

  // Far-end: utterances of one speaker, concatenated.
  const std::size_t far_group = pick(rng, src.farend.size());
  json far_sources = json::array();
  AudioSignal u;
  u.sample_rate = cfg.sample_rate;
  for (int i = 0; i < cfg.farend_utterances; ++i) {
    const auto& files = src.farend[far_group];
    const fs::path& f = files[pick(rng, files.size())];
    const AudioSignal part = read_wav(f, cfg.sample_rate);
    u.samples.insert(u.samples.end(), part.samples.begin(), part.samples.end());
    far_sources.push_back(relative_name(f, cfg.farend_dirs));
  }
  if (u.size() < 2 * 128) throw InvalidArgument("far-end sources too short for " + rec.id);

  json music_source = nullptr;
  const bool add_music = !src.music.empty() && unit(rng) < cfg.music_ratio;
  if (add_music) {
    const fs::path& f = src.music[pick(rng, src.music.size())];
    const auto m = tile(read_wav(f, cfg.sample_rate).samples, u.size());
    const double gu = rms(u.samples), gm = rms(m);
    const double g = gm > 0.0 ? gu / gm : 0.0;
    float peak = 0.0f;
    for (std::size_t i = 0; i < u.size(); ++i) {
      u.samples[i] += static_cast<float>(g * m[i]);
      peak = std::max(peak, std::abs(u.samples[i]));
    }
    if (peak > kPeakLimit) {
      for (float& v : u.samples) v *= kPeakLimit / peak;
    }
    music_source = relative_name(f, cfg.music_dirs);
  }

  // Near-end: one utterance from a different speaker, tiled to length.
  AudioSignal s;
  s.sample_rate = cfg.sample_rate;
  json near_source = nullptr;
  {
    std::size_t g = pick(rng, src.nearend.size());
    if (src.nearend.size() > 1 && src.nearend[g] == src.farend[far_group]) {
      g = (g + 1 + pick(rng, src.nearend.size() - 1)) % src.nearend.size();
    }
    const auto& files = src.nearend[g];
    const fs::path& f = files[pick(rng, files.size())];
    if (silent_near) {
      s.samples.assign(u.size(), 0.0f);
    } else {
      s.samples = tile(read_wav(f, cfg.sample_rate).samples, u.size());
      near_source = relative_name(f, cfg.nearend_dirs);
    }
  }

  // Echo path.
  const bool clipped = unit(rng) < p.clip_probability;
  const double u_max = p.u_max.draw(rng);
  const double gamma = p.gamma.draw(rng);
  const double a_pos = p.a_pos.draw(rng);
  const double a_neg = p.a_neg.draw(rng);
  const double delay = p.delay_ms.draw(rng);
  const bool use_rir = unit(rng) < p.rir_probability;
  const double ser = p.ser_db.draw(rng);

  AudioSignal echo = clipped ? hard_clip(u, u_max) : u;
  echo = loudspeaker_nonlinearity(std::move(echo), gamma, a_pos, a_neg, p.nonlinearity_mode);
  echo = apply_delay(echo, delay);
  json rir_json = nullptr;
  if (use_rir) {
    const std::size_t n_sim = cfg.rir.simulated
                                  ? standard_rooms().size() * kRoomRt60s.size() *
                                        static_cast<std::size_t>(cfg.rir.mic_positions_per_room) *
                                        static_cast<std::size_t>(cfg.rir.speaker_positions_per_mic)
                                  : 0;
    const bool take_wav = !src.rir_wavs.empty() && (n_sim == 0 || unit(rng) < 0.5);
    std::vector<double> h;
    if (take_wav) {
      const fs::path& f = src.rir_wavs[pick(rng, src.rir_wavs.size())];
      const AudioSignal r = read_wav(f, cfg.sample_rate);
      h.assign(r.samples.begin(), r.samples.end());
      rir_json = {{"kind", "wav"}, {"path", relative_name(f, cfg.rir.wav_dirs)}};
    } else {
      SimulatedRir which;
      which.room = static_cast<int>(pick(rng, standard_rooms().size()));
      which.mic = static_cast<int>(pick(rng, static_cast<std::size_t>(cfg.rir.mic_positions_per_room)));
      which.speaker = static_cast<int>(pick(rng, static_cast<std::size_t>(cfg.rir.speaker_positions_per_mic)));
      which.rt60_index = static_cast<int>(pick(rng, kRoomRt60s.size()));
      const RoomSpec room = simulated_room(which, cfg.seed);
      h = generate_rir(room, cfg.sample_rate);
      rir_json = {{"kind", "simulated"},     {"room", vec_json(room.dims)},
                  {"source", vec_json(room.source)}, {"mic", vec_json(room.mic)},
                  {"rt60", room.rt60},       {"length", room.rir_length},
                  {"mic_index", which.mic},  {"speaker_index", which.speaker}};
    }
    echo = convolve_rir(echo, h);
  }

  rec.mix = mix_at_ser(s, echo, ser);
  rec.u = std::move(u);
  rec.d = rec.mix.d;
  rec.s = rec.mix.s;
  rec.y = rec.mix.y;

  json params = {{"clipped", clipped},
                 {"u_max", u_max},
                 {"gamma", gamma},
                 {"a_pos", a_pos},
                 {"a_neg", a_neg},
                 {"delay_ms", delay},
                 {"delay_samples", delay_samples(delay, cfg.sample_rate)},
                 {"nonlinearity_mode", to_string(p.nonlinearity_mode)},
                 {"rir", rir_json},
                 {"target_ser_db", silent_near ? json(nullptr) : json(ser)},
                 {"record_seed", seed}};
  std::size_t silence = 0;
  for (bool b : rec.mix.mutual_silence) silence += b ? 1 : 0;
  rec.manifest_line = {
      {"id", rec.id},
      {"u", rec.id + "_u.wav"},
      {"d", rec.id + "_d.wav"},
      {"s", rec.id + "_s.wav"},
      {"y", rec.id + "_y.wav"},
      {"sample_rate", cfg.sample_rate},
      {"num_samples", rec.d.size()},
      {"num_frames", rec.mix.labels.size()},
      {"far_end_single", silent_near},
      {"farend_sources", far_sources},
      {"nearend_source", near_source},
      {"music_source", music_source},
      {"params", params},
      {"measured_ser_db", rec.mix.measured_ser_db ? json(*rec.mix.measured_ser_db) : json(nullptr)},
      {"near_scale", rec.mix.near_scale},
      {"echo_scale", rec.mix.echo_scale},
      {"labels_rle", rle_json(rec.mix.labels)},
      {"mutual_silence_frames", silence},
      {"mutual_silence_rle", bool_rle_json(rec.mix.mutual_silence)},
  };
  return rec;
}

// RAES_THREADS caps whatever was requested (0 = hardware concurrency).
inline int worker_count(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("RAES_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return n;
}

inline DatasetSummary synth_dataset(const DatasetConfig& cfg) {
  using namespace dataset_detail;
  Sources src;
  src.farend = scan_speaker_groups(cfg.farend_dirs);
  src.nearend = scan_speaker_groups(cfg.nearend_dirs);
  if (src.farend.empty()) throw InvalidArgument("no far-end WAV files found");
  if (src.nearend.empty()) throw InvalidArgument("no near-end WAV files found");
  for (const auto& g : scan_speaker_groups(cfg.music_dirs)) src.music.insert(src.music.end(), g.begin(), g.end());
  for (const auto& g : scan_speaker_groups(cfg.rir.wav_dirs)) src.rir_wavs.insert(src.rir_wavs.end(), g.begin(), g.end());

  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw InvalidArgument("cannot create output directory " + cfg.output_dir.string());

  // Exactly round(count * ratio) silent near-ends, placed by a seeded shuffle.
  std::vector<int> order(static_cast<std::size_t>(cfg.count));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 master(cfg.seed);
  std::shuffle(order.begin(), order.end(), master);
  const auto n_silent = static_cast<std::size_t>(std::llround(cfg.count * cfg.silent_nearend_ratio));
  std::vector<bool> silent(static_cast<std::size_t>(cfg.count), false);
  for (std::size_t i = 0; i < n_silent; ++i) silent[static_cast<std::size_t>(order[i])] = true;

  std::vector<json> lines(static_cast<std::size_t>(cfg.count));
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::string first_error;
  auto work = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= cfg.count) return;
      try {
        GeneratedRecord rec = generate_record(cfg, src, i, silent[static_cast<std::size_t>(i)]);
        write_wav(cfg.output_dir / (rec.id + "_u.wav"), rec.u);
        write_wav(cfg.output_dir / (rec.id + "_d.wav"), rec.d);
        write_wav(cfg.output_dir / (rec.id + "_s.wav"), rec.s);
        write_wav(cfg.output_dir / (rec.id + "_y.wav"), rec.y);
        lines[static_cast<std::size_t>(i)] = std::move(rec.manifest_line);
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mutex);
        if (first_error.empty()) first_error = e.what();
        next = cfg.count;
      }
    }
  };
  const int workers = std::min(worker_count(cfg.threads), cfg.count);
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (!first_error.empty()) throw Error("synthesis failed: " + first_error);

  DatasetSummary summary;
  summary.records = cfg.count;
  summary.manifest = cfg.output_dir / "manifest.jsonl";
  std::ofstream out(summary.manifest, std::ios::binary);
  if (!out) throw Error("cannot write " + summary.manifest.string());
  for (const auto& line : lines) {
    out << line.dump() << '\n';
    if (line.at("far_end_single").get<bool>()) ++summary.far_end_single;
    for (const auto& run : line.at("labels_rle")) {
      summary.label_histogram[run[0].get<std::size_t>()] += run[1].get<std::size_t>();
    }
    summary.mutual_silence_frames += line.at("mutual_silence_frames").get<std::size_t>();
  }
  return summary;
}

}  // namespace raes::synth
