#pragma once

// Microphone mixture d = s + y at a target signal-to-echo ratio.
//
// SER is measured over double-talk frames only. Frame labels depend on the
// absolute levels (fixed 0.001 threshold), so scaling and labeling are
// iterated to a fixed point; a joint gain keeps |d| <= 1.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "raes/audio.hpp"
#include "raes/error.hpp"
#include "raes/labels.hpp"

namespace raes::synth {

inline constexpr double kSerToleranceDb = 0.01;
inline constexpr float kPeakLimit = 0.99f;

// 10 log10(P_s / P_y) over samples of label-2 frames; nullopt when undefined.
inline std::optional<double> measure_ser_db(std::span<const float> s, std::span<const float> y,
                                            std::span<const DtdLabel> labels,
                                            const StftConfig& cfg = {}) {
  const auto mask = label_sample_mask(labels, s.size(), DtdLabel::kDoubleTalk, cfg);
  double ps = 0.0, py = 0.0;
  for (std::size_t n = 0; n < s.size(); ++n) {
    if (!mask[n]) continue;
    ps += static_cast<double>(s[n]) * s[n];
    py += static_cast<double>(y[n]) * y[n];
  }
  if (ps <= 0.0 || py <= 0.0) return std::nullopt;
  return 10.0 * std::log10(ps / py);
}

struct MixResult {
  AudioSignal d;
  AudioSignal s;  // scaled near-end
  AudioSignal y;  // echo after the joint gain
  double near_scale = 1.0;
  double echo_scale = 1.0;
  std::optional<double> measured_ser_db;
  std::vector<DtdLabel> labels;
  std::vector<bool> mutual_silence;
};

namespace mixing_detail {

inline double energy(std::span<const float> x) {
  double e = 0.0;
  for (float v : x) e += static_cast<double>(v) * v;
  return e;
}

inline std::vector<float> scaled(std::span<const float> x, double g) {
  std::vector<float> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<float>(x[i] * g);
  return out;
}

}  // namespace mixing_detail

inline MixResult mix_at_ser(const AudioSignal& s, const AudioSignal& y, double target_ser_db,
                            const StftConfig& cfg = {}) {
  using namespace mixing_detail;
  if (s.size() != y.size()) throw InvalidArgument("mix_at_ser: signal lengths differ");
  if (!std::isfinite(target_ser_db)) throw InvalidArgument("mix_at_ser: target SER must be finite");
  const double es = energy(s.samples), ey = energy(y.samples);
  const bool silent_near = es == 0.0;
  if (!silent_near && ey == 0.0) {
    throw InvalidArgument("mix_at_ser: echo has zero power while the near-end is active");
  }
  if (silent_near && ey == 0.0) throw InvalidArgument("mix_at_ser: both signals are silent");

  double g = silent_near ? 0.0 : std::sqrt(std::pow(10.0, target_ser_db / 10.0) * ey / es);
  double c = 1.0;
  MixResult r;
  for (int iter = 0; iter < 60; ++iter) {
    // Joint gain so the mixture stays inside [-1, 1].
    float peak = 0.0f;
    for (std::size_t n = 0; n < s.size(); ++n) {
      peak = std::max(peak, std::abs(static_cast<float>(s.samples[n] * g) + y.samples[n]));
    }
    c = peak > kPeakLimit ? kPeakLimit / peak : 1.0;
    const auto ss = scaled(s.samples, g * c);
    const auto ys = scaled(y.samples, c);
    auto activity = frame_activity(ss, ys, cfg);
    r.measured_ser_db = silent_near ? std::nullopt : measure_ser_db(ss, ys, activity.labels, cfg);
    r.labels = std::move(activity.labels);
    r.mutual_silence = std::move(activity.mutual_silence);
    r.s.samples = ss;
    r.y.samples = ys;
    if (silent_near || !r.measured_ser_db) break;
    const double err = target_ser_db - *r.measured_ser_db;
    if (std::abs(err) < kSerToleranceDb) break;
    g *= std::pow(10.0, err / 20.0);
  }
  if (!silent_near && !r.measured_ser_db) {
    throw InvalidArgument("mix_at_ser: no double-talk frames to measure SER over");
  }
  r.near_scale = g * c;
  r.echo_scale = c;
  r.s.sample_rate = r.y.sample_rate = r.d.sample_rate = s.sample_rate;
  r.d.samples.resize(s.size());
  for (std::size_t n = 0; n < s.size(); ++n) r.d.samples[n] = r.s.samples[n] + r.y.samples[n];
  return r;
}

}  // namespace raes::synth
