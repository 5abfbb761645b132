#include <gtest/gtest.h>

#include <cmath>

#include "raes/synth/dataset.hpp"
#include "support/corpus.hpp"
#include "support/oracles.hpp"

using namespace raes;
using namespace raes::synth;

namespace {

AudioSignal echo_of(const std::vector<float>& u) {
  AudioSignal y = oracle::signal(std::vector<float>(u.size(), 0.0f));
  for (std::size_t n = 30; n < u.size(); ++n) y.samples[n] = 0.4f * u[n - 30] + 0.1f * u[n - 12];
  return y;
}

double t20_seconds(const std::vector<double>& h, double fs) {
  const auto edc = oracle::schroeder_db(h);
  std::size_t a = 0, b = 0;
  while (a < edc.size() && edc[a] > -5.0) ++a;
  while (b < edc.size() && edc[b] > -25.0) ++b;
  return 3.0 * static_cast<double>(b - a) / fs;
}

}  // namespace

TEST(Distortion, HardClip) {
  const auto out = hard_clip(oracle::signal({-1.0f, -0.5f, 0.0f, 0.7f, 0.81f, 2.0f}), 0.8);
  EXPECT_EQ(out.samples, (std::vector<float>{-0.8f, -0.5f, 0.0f, 0.7f, 0.8f, 0.8f}));
  EXPECT_THROW(hard_clip(oracle::signal({0.0f}), 0.0), InvalidArgument);
  EXPECT_THROW(hard_clip(oracle::signal({0.0f}), 1.5), InvalidArgument);
}

TEST(Distortion, NonlinearityMatchesClosedForm) {
  // 2 / (1 + exp(-x)) - 1 = tanh(x / 2).
  for (double u : {-0.9, -0.3, 0.0, 0.2, 0.5, 0.99}) {
    const double b = 1.5 * u - 0.3 * u * u;
    const double a = b > 0.0 ? 0.2 : 0.35;
    EXPECT_NEAR(loudspeaker_sample(u, 0.25, 0.2, 0.35, NonlinearityMode::kCorrected), 0.25 * std::tanh(a * b / 2.0), 1e-15);
    EXPECT_NEAR(loudspeaker_sample(u, 0.25, 0.2, 0.35, NonlinearityMode::kAsWritten),
                0.25 * (std::tanh(a * b / 2.0) + 1.0), 1e-15);
  }
  EXPECT_EQ(loudspeaker_sample(0.0, 0.3, 0.1, 0.1, NonlinearityMode::kCorrected), 0.0);
  EXPECT_EQ(loudspeaker_sample(0.0, 0.3, 0.1, 0.1, NonlinearityMode::kAsWritten), 0.3);
}

TEST(Distortion, NonlinearityMonotoneAndBounded) {
  double prev = -1e9;
  for (int i = -1000; i <= 1000; ++i) {
    const double v = loudspeaker_sample(i / 1000.0, 0.3, 0.45, 0.1, NonlinearityMode::kCorrected);
    EXPECT_GT(v, prev);
    EXPECT_LT(std::abs(v), 0.3);
    prev = v;
  }
  EXPECT_EQ(parse_nonlinearity_mode("as_written"), NonlinearityMode::kAsWritten);
  EXPECT_THROW(parse_nonlinearity_mode("literal"), InvalidArgument);
}

TEST(Distortion, Delay) {
  EXPECT_EQ(delay_samples(8.0, 16000.0), 128u);
  EXPECT_EQ(delay_samples(40.0, 16000.0), 640u);
  const auto u = oracle::white_noise(4000, 3);
  const auto d = apply_delay(oracle::signal(u), 8.0);
  ASSERT_EQ(d.size(), u.size());
  for (std::size_t n = 0; n < 128; ++n) EXPECT_EQ(d.samples[n], 0.0f);
  for (std::size_t n = 128; n < u.size(); ++n) ASSERT_EQ(d.samples[n], u[n - 128]);
  EXPECT_EQ(oracle::xcorr_peak_lag(d.samples, u, 700), 128);
  EXPECT_EQ(oracle::xcorr_peak_lag(apply_delay(oracle::signal(u), 23.4).samples, u, 700), 374);
  EXPECT_THROW(delay_samples(-1.0, 16000.0), InvalidArgument);
}

TEST(Rir, AnechoicIsDirectPathOnly) {
  RoomSpec room;
  RirOptions opts;
  opts.absorption = 1.0;
  const auto h = generate_rir(room, 16000.0, opts);
  const double dist = room.distance();
  const auto idx = static_cast<std::size_t>(std::lround(dist * 16000.0 / 343.0));
  for (std::size_t n = 0; n < h.size(); ++n) {
    if (n == idx) EXPECT_NEAR(h[n], 1.0 / (4.0 * std::numbers::pi * dist), 1e-15);
    else ASSERT_EQ(h[n], 0.0) << n;
  }
}

TEST(Rir, DirectPathIsFirstAndLargest) {
  RoomSpec room;
  const auto h = generate_rir(room, 16000.0);
  const auto idx = static_cast<std::size_t>(std::lround(room.distance() * 16000.0 / 343.0));
  for (std::size_t n = 0; n < idx; ++n) EXPECT_EQ(h[n], 0.0);
  EXPECT_EQ(std::max_element(h.begin(), h.end()) - h.begin(), static_cast<long>(idx));
  EXPECT_EQ(h.size(), 4096u);
}

// Schroeder T20 extrapolated to -60 dB, over a response long enough to hold
// the whole decay. Currently fails for rt60 >= 0.4 s: with Sabine absorption
// the image method decays about 45% slower than the target.
TEST(Rir, ReverberationTimeMatchesTarget) {
  for (const auto& dims : standard_rooms()) {
    for (double rt60 : kRoomRt60s) {
      RoomSpec room;
      room.dims = dims;
      room.source = {dims[0] * 0.3, dims[1] * 0.35, 1.2};
      room.mic = {dims[0] * 0.6, dims[1] * 0.55, 1.4};
      room.rt60 = rt60;
      room.rir_length = rir_length_for_rt60(rt60);
      room.validate();
      RirOptions opts;
      opts.length = static_cast<int>(1.5 * rt60 * 16000.0);
      const double t = t20_seconds(generate_rir(room, 16000.0, opts), 16000.0);
      EXPECT_NEAR(t, rt60, 0.3 * rt60) << "room " << dims[0] << " rt60 " << rt60;
    }
  }
}

TEST(Rir, RejectsInvalidRooms) {
  RoomSpec room;
  room.mic = {7.0, 1.0, 1.0};
  EXPECT_THROW(generate_rir(room, 16000.0), InvalidArgument);
  EXPECT_THROW(room.validate(), InvalidArgument);
  room = RoomSpec{};
  room.rir_length = 2048;
  EXPECT_THROW(room.validate(), InvalidArgument);
  EXPECT_THROW(rir_length_for_rt60(0.45), InvalidArgument);
  EXPECT_EQ(rir_length_for_rt60(0.3), 2048);
  EXPECT_EQ(rir_length_for_rt60(0.6), 4096);
}

TEST(Rir, ConvolutionMatchesDirectSum) {
  const auto u = oracle::white_noise(3000, 4, 0.3);
  EXPECT_EQ(convolve_rir(oracle::signal(u), std::vector<double>{1.0}).samples.size(), u.size());
  const auto id = convolve_rir(oracle::signal(u), std::vector<double>{1.0});
  for (std::size_t n = 0; n < u.size(); ++n) ASSERT_NEAR(id.samples[n], u[n], 1e-7);
  const auto shifted = convolve_rir(oracle::signal(u), std::vector<double>{0.0, 0.0, 0.5});
  EXPECT_NEAR(shifted.samples[0], 0.0, 1e-9);
  for (std::size_t n = 2; n < u.size(); ++n) ASSERT_NEAR(shifted.samples[n], 0.5 * u[n - 2], 1e-7);
  RoomSpec room;
  room.rt60 = 0.3;
  room.rir_length = 2048;
  const auto h = generate_rir(room, 16000.0);
  const auto fast = convolve_rir(oracle::signal(u), h);
  const auto ref = oracle::naive_convolve(u, h);
  for (std::size_t n = 0; n < u.size(); ++n) ASSERT_NEAR(fast.samples[n], ref[n], 1e-6);
}

TEST(Mixing, HitsTargetSerOnDoubleTalk) {
  const auto s = oracle::signal(oracle::speech_like(3.0, 5));
  const auto y = echo_of(oracle::white_noise(s.size(), 6, 0.2));
  for (double target : {0.0, -5.0, -13.0}) {
    const auto r = mix_at_ser(s, y, target);
    ASSERT_TRUE(r.measured_ser_db.has_value());
    EXPECT_NEAR(*r.measured_ser_db, target, 0.1);
    EXPECT_NEAR(oracle::double_talk_ser_db(r.s.samples, r.y.samples), target, 0.1) << target;
    for (std::size_t n = 0; n < s.size(); ++n) ASSERT_EQ(r.d.samples[n], r.s.samples[n] + r.y.samples[n]);
    float peak = 0.0f;
    for (float v : r.d.samples) peak = std::max(peak, std::abs(v));
    EXPECT_LE(peak, 0.99f);
  }
}

TEST(Mixing, PeakLimitKeepsSer) {
  auto s = oracle::signal(oracle::speech_like(2.0, 7, 16000.0, 3.0));
  const auto y = echo_of(oracle::white_noise(s.size(), 8, 1.0));
  const auto r = mix_at_ser(s, y, -2.0);
  EXPECT_LT(r.echo_scale, 1.0);
  float peak = 0.0f;
  for (float v : r.d.samples) peak = std::max(peak, std::abs(v));
  EXPECT_LE(peak, 0.99f);
  EXPECT_NEAR(oracle::double_talk_ser_db(r.s.samples, r.y.samples), -2.0, 0.1);
}

TEST(Mixing, SilentNearEndGivesEchoOnly) {
  const auto y = echo_of(oracle::white_noise(16000, 9, 0.2));
  const auto r = mix_at_ser(oracle::signal(std::vector<float>(y.size(), 0.0f)), y, -5.0);
  EXPECT_FALSE(r.measured_ser_db.has_value());
  EXPECT_EQ(r.d.samples, r.y.samples);
  EXPECT_EQ(r.y.samples, y.samples);
}

TEST(Mixing, Errors) {
  const auto s = oracle::signal(oracle::white_noise(1000, 1));
  const auto zeros = oracle::signal(std::vector<float>(1000, 0.0f));
  EXPECT_THROW(mix_at_ser(s, zeros, 0.0), InvalidArgument);
  EXPECT_THROW(mix_at_ser(zeros, zeros, 0.0), InvalidArgument);
  EXPECT_THROW(mix_at_ser(s, oracle::signal(oracle::white_noise(999, 2)), 0.0), InvalidArgument);
  EXPECT_THROW(mix_at_ser(s, s, std::nan("")), InvalidArgument);
}

TEST(Dataset, DeterministicAndConsistent) {
  const auto root = corpus::fresh_dir("synth_det");
  const auto config = corpus::make_dataset(root, 8, 42);
  auto cfg = load_dataset_config(config);
  const auto first = synth_dataset(cfg);
  EXPECT_EQ(first.records, 8);
  EXPECT_EQ(first.far_end_single, 4);
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(cfg.output_dir)) files[e.path().filename().string()] = corpus::slurp(e.path());
  EXPECT_EQ(files.size(), 8u * 4u + 1u);

  cfg.threads = 1;
  (void)synth_dataset(cfg);
  for (const auto& [name, bytes] : files) EXPECT_EQ(corpus::slurp(cfg.output_dir / name), bytes) << name;

  std::ifstream manifest(first.manifest);
  std::string line;
  int n = 0;
  while (std::getline(manifest, line)) {
    const auto j = json::parse(line);
    const auto d = read_wav(cfg.output_dir / j.at("d").get<std::string>());
    const auto s = read_wav(cfg.output_dir / j.at("s").get<std::string>());
    const auto y = read_wav(cfg.output_dir / j.at("y").get<std::string>());
    const auto u = read_wav(cfg.output_dir / j.at("u").get<std::string>());
    ASSERT_EQ(d.size(), s.size());
    ASSERT_EQ(u.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) ASSERT_NEAR(d.samples[i], s.samples[i] + y.samples[i], 1e-7);
    std::size_t frames = 0;
    for (const auto& run : j.at("labels_rle")) frames += run.at(1).get<std::size_t>();
    EXPECT_EQ(frames, j.at("num_frames").get<std::size_t>());
    EXPECT_EQ(frames, (d.size() - 128) / 64 + 1);
    if (j.at("far_end_single").get<bool>()) {
      for (float v : s.samples) ASSERT_EQ(v, 0.0f);
      EXPECT_TRUE(j.at("measured_ser_db").is_null());
    } else {
      const double target = j.at("params").at("target_ser_db").get<double>();
      EXPECT_NEAR(j.at("measured_ser_db").get<double>(), target, 0.1);
    }
    ++n;
  }
  EXPECT_EQ(n, 8);

  cfg.seed = 43;
  (void)synth_dataset(cfg);
  EXPECT_NE(corpus::slurp(first.manifest), files.at("manifest.jsonl"));
  fs::remove_all(root);
}

TEST(Dataset, MissingSourceDirectoryIsNamed) {
  const auto root = corpus::fresh_dir("synth_missing");
  const auto config = corpus::make_dataset(root, 2, 1, {{"farend_dirs", {"nowhere"}}});
  try {
    (void)synth_dataset(load_dataset_config(config));
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("nowhere"), std::string::npos);
  }
  fs::remove_all(root);
}

TEST(Dataset, ConfigValidation) {
  EXPECT_THROW(parse_dataset_config(json{{"count", 3}, {"output_dir", "o"}}), InvalidArgument);
  const json base = {{"farend_dirs", {"a"}}, {"nearend_dirs", {"b"}}, {"count", 3}, {"output_dir", "o"}};
  EXPECT_NO_THROW(parse_dataset_config(base));
  auto bad = base;
  bad["count"] = 0;
  EXPECT_THROW(parse_dataset_config(bad), InvalidArgument);
  bad = base;
  bad["ser_range_db"] = {0.0, -13.0};
  EXPECT_THROW(parse_dataset_config(bad), InvalidArgument);
  bad = base;
  bad["silent_nearend_ratio"] = 1.5;
  EXPECT_THROW(parse_dataset_config(bad), InvalidArgument);
  const auto c = parse_dataset_config(base, "/data");
  EXPECT_EQ(c.farend_dirs.front(), fs::path("/data/a"));
  EXPECT_EQ(c.params.ser_db.lo, -13.0);
  EXPECT_EQ(c.silent_nearend_ratio, 0.5);
}
