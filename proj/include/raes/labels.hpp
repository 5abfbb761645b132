#pragma once

// Frame-level double-talk labels and their mapping back to samples.
//
//   0  near-end single talk: max_k |Y(l,k)| < 0.001 and max_k |S(l,k)| > 0.001
//   1  far-end single talk:  max_k |S(l,k)| < 0.001 and max_k |Y(l,k)| > 0.001
//   2  otherwise (double talk, and mutual silence)

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "raes/audio.hpp"
#include "raes/error.hpp"
#include "raes/stft.hpp"

namespace raes {

enum class DtdLabel : int { kNearEndSingle = 0, kFarEndSingle = 1, kDoubleTalk = 2 };

inline constexpr double kDtdActivityThreshold = 0.001;

inline double max_magnitude(const SpectralFrame& f) {
  double m = 0.0;
  for (const Complex& b : f.bins) m = std::max(m, std::abs(b));
  return m;
}

struct FrameActivity {
  std::vector<DtdLabel> labels;
  std::vector<bool> mutual_silence;  // both below threshold; labeled 2 by the rule
};

inline FrameActivity frame_activity(std::span<const float> near_end, std::span<const float> echo,
                                    const StftConfig& cfg = {}) {
  if (near_end.size() != echo.size()) throw InvalidArgument("dtd_labels: signal lengths differ");
  const auto s = stft(near_end, cfg);
  const auto y = stft(echo, cfg);
  FrameActivity out;
  out.labels.reserve(s.size());
  out.mutual_silence.reserve(s.size());
  for (std::size_t l = 0; l < s.size(); ++l) {
    const double ms = max_magnitude(s[l]);
    const double my = max_magnitude(y[l]);
    const bool s_active = ms > kDtdActivityThreshold, s_quiet = ms < kDtdActivityThreshold;
    const bool y_active = my > kDtdActivityThreshold, y_quiet = my < kDtdActivityThreshold;
    DtdLabel label = DtdLabel::kDoubleTalk;
    if (y_quiet && s_active) label = DtdLabel::kNearEndSingle;
    else if (s_quiet && y_active) label = DtdLabel::kFarEndSingle;
    out.labels.push_back(label);
    out.mutual_silence.push_back(s_quiet && y_quiet);
  }
  return out;
}

inline std::vector<DtdLabel> dtd_labels(const AudioSignal& near_end, const AudioSignal& echo,
                                        const StftConfig& cfg = {}) {
  return frame_activity(near_end.samples, echo.samples, cfg).labels;
}

// Sample mask selecting the samples owned by frames carrying `wanted`. Frame l
// owns the central hop of its window, [l*hop + (K-hop)/2, +hop); samples before
// the first and after the last owned span take the nearest frame's label.
// Sample n belongs to the frame whose central hop covers it; the lead-in
// goes to frame 0 and the tail to the last frame.
template <class FramePredicate>
inline std::vector<bool> frame_sample_mask(std::size_t num_frames, std::size_t num_samples, FramePredicate pick,
                                           const StftConfig& cfg = {}) {
  std::vector<bool> mask(num_samples, false);
  if (num_frames == 0) return mask;
  const auto hop = static_cast<std::size_t>(cfg.hop);
  const auto lead = static_cast<std::size_t>((cfg.window_size - cfg.hop) / 2);
  for (std::size_t n = 0; n < num_samples; ++n) {
    const std::size_t l = n < lead ? 0 : std::min((n - lead) / hop, num_frames - 1);
    mask[n] = pick(l);
  }
  return mask;
}

inline std::vector<bool> label_sample_mask(std::span<const DtdLabel> labels, std::size_t num_samples,
                                           DtdLabel wanted, const StftConfig& cfg = {}) {
  return frame_sample_mask(labels.size(), num_samples, [&](std::size_t l) { return labels[l] == wanted; }, cfg);
}

// Run-length encoding as (label, count) pairs.
inline std::vector<std::pair<int, std::size_t>> run_length_encode(std::span<const DtdLabel> labels) {
  std::vector<std::pair<int, std::size_t>> runs;
  for (DtdLabel l : labels) {
    const int v = static_cast<int>(l);
    if (!runs.empty() && runs.back().first == v) ++runs.back().second;
    else runs.emplace_back(v, 1);
  }
  return runs;
}

inline std::vector<DtdLabel> run_length_decode(std::span<const std::pair<int, std::size_t>> runs) {
  std::vector<DtdLabel> labels;
  for (const auto& [v, n] : runs) {
    if (v < 0 || v > 2) throw InvalidArgument("invalid DTD label " + std::to_string(v));
    labels.insert(labels.end(), n, static_cast<DtdLabel>(v));
  }
  return labels;
}

}  // namespace raes
