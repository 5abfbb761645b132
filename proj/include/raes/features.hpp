#pragma once

// Network input construction: causal stack of the last 20 log-spectra of the
// AF error (channel 0) and the far-end reference (channel 1), reshaped from
// 2 x 20 x 64 to 2 x 40 x 32.
//
// Frame i of the stack (0 = oldest, 19 = current) occupies rows 2i (bins
// 0..31) and 2i + 1 (bins 32..63) of its channel.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "raes/error.hpp"
#include "raes/stft.hpp"

namespace raes {

inline constexpr int kFeatureChannels = 2;
inline constexpr int kFeatureFrames = 20;
inline constexpr int kFeatureBins = 64;
inline constexpr int kFeatureRows = 40;
inline constexpr int kFeatureCols = 32;
inline constexpr int kFeatureSize = kFeatureChannels * kFeatureRows * kFeatureCols;
inline constexpr double kLogSpectrumFloor = 1e-7;

using LogSpectrum = std::array<double, kFeatureBins>;

inline LogSpectrum log_spectrum(const SpectralFrame& frame) {
  if (frame.size() != kFeatureBins) {
    throw InvalidArgument("log_spectrum expects a 64-bin frame");
  }
  LogSpectrum out{};
  for (int k = 0; k < kFeatureBins; ++k) {
    out[static_cast<std::size_t>(k)] =
        std::log(std::abs(frame.bins[static_cast<std::size_t>(k)]) + kLogSpectrumFloor);
  }
  return out;
}

struct FeatureIndex {
  int channel = 0;
  int row = 0;
  int col = 0;

  bool operator==(const FeatureIndex&) const = default;
  int flat() const { return (channel * kFeatureRows + row) * kFeatureCols + col; }
};

// (channel, stack frame, bin) -> tensor position.
constexpr FeatureIndex feature_index(int channel, int frame, int bin) {
  return {channel, 2 * frame + bin / kFeatureCols, bin % kFeatureCols};
}

struct StackPosition {
  int channel = 0;
  int frame = 0;
  int bin = 0;

  bool operator==(const StackPosition&) const = default;
};

constexpr StackPosition stack_position(FeatureIndex idx) {
  return {idx.channel, idx.row / 2, (idx.row % 2) * kFeatureCols + idx.col};
}

struct FeatureTensor {
  std::vector<float> data = std::vector<float>(kFeatureSize, 0.0f);
  std::int64_t frame_index = -1;  // newest contributing frame

  float at(int channel, int row, int col) const {
    return data[static_cast<std::size_t>(FeatureIndex{channel, row, col}.flat())];
  }
};

// Ring of the last 20 log-spectra per channel; missing history reads as ln(1e-7).
class FrameHistory {
 public:
  FrameHistory() {
    const double fill = std::log(kLogSpectrumFloor);
    for (auto& channel : ring_) {
      for (auto& frame : channel) frame.fill(fill);
    }
  }

  void push(const LogSpectrum& error_log, const LogSpectrum& farend_log,
            std::int64_t frame_index) {
    head_ = (head_ + 1) % kFeatureFrames;
    ring_[0][static_cast<std::size_t>(head_)] = error_log;
    ring_[1][static_cast<std::size_t>(head_)] = farend_log;
    newest_ = frame_index;
    ++count_;
  }

  // age 0 is the newest frame.
  const LogSpectrum& frame(int channel, int age) const {
    const int slot = ((head_ - age) % kFeatureFrames + kFeatureFrames) % kFeatureFrames;
    return ring_[static_cast<std::size_t>(channel)][static_cast<std::size_t>(slot)];
  }

  std::int64_t newest_frame_index() const { return newest_; }
  std::int64_t frames_seen() const { return count_; }

 private:
  std::array<std::array<LogSpectrum, kFeatureFrames>, kFeatureChannels> ring_{};
  int head_ = kFeatureFrames - 1;
  std::int64_t newest_ = -1;
  std::int64_t count_ = 0;
};

inline FeatureTensor build_feature(const FrameHistory& history) {
  FeatureTensor out;
  out.frame_index = history.newest_frame_index();
  for (int c = 0; c < kFeatureChannels; ++c) {
    for (int i = 0; i < kFeatureFrames; ++i) {
      const LogSpectrum& spec = history.frame(c, kFeatureFrames - 1 - i);
      for (int k = 0; k < kFeatureBins; ++k) {
        out.data[static_cast<std::size_t>(feature_index(c, i, k).flat())] =
            static_cast<float>(spec[static_cast<std::size_t>(k)]);
      }
    }
  }
  return out;
}

}  // namespace raes
