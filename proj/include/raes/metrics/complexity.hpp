#pragma once

// Analytic FLOPs accounting and wall-clock real-time factor.

#include <algorithm>
#include <chrono>
#include <functional>
#include <vector>

#include "raes/audio.hpp"
#include "raes/error.hpp"
#include "raes/nn/architecture.hpp"

namespace raes::metrics {

// conv = 2 C_out C_in k^2 H_out W_out, depthwise = 2 C k^2 H_out W_out,
// FC = 2 in out; every elementwise layer costs one op per output element.
inline double layer_flops(const nn::LayerSpec& l) {
  using nn::LayerKind;
  const double out_hw = static_cast<double>(l.out_height) * l.out_width;
  const double k2 = static_cast<double>(l.kernel) * l.kernel;
  switch (l.kind) {
    case LayerKind::kConv:
      return 2.0 * l.out_channels * l.in_channels * k2 * out_hw;
    case LayerKind::kDepthwise:
      return 2.0 * l.out_channels * k2 * out_hw;
    case LayerKind::kFullyConnected:
      return 2.0 * l.in_channels * l.out_channels;
    case LayerKind::kGlobalAvgPool:
      return static_cast<double>(l.in_channels) * l.in_height * l.in_width;
    case LayerKind::kAffine:
    case LayerKind::kActivation:
    case LayerKind::kResidualAdd:
    case LayerKind::kChannelGate:
      return static_cast<double>(l.output_elements());
  }
  return 0.0;
}

inline double count_flops(const std::vector<nn::LayerSpec>& table) {
  double total = 0.0;
  for (const auto& l : table) total += layer_flops(l);
  return total;
}

inline double count_mflops(const std::vector<nn::LayerSpec>& table) {
  return count_flops(table) / 1e6;
}

struct RtMeasurement {
  double rt_factor = 0.0;       // median wall time / audio duration
  std::vector<double> seconds;  // per timed run
};

// Runs `work` once to warm up, then `runs` times; reports the median.
inline RtMeasurement rt_factor(const std::function<void()>& work, double audio_seconds, int runs = 3) {
  if (!(audio_seconds > 0.0)) throw InvalidArgument("rt_factor: audio duration must be positive");
  if (runs < 1) throw InvalidArgument("rt_factor: need at least one timed run");
  work();
  RtMeasurement m;
  for (int i = 0; i < runs; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    work();
    const auto t1 = std::chrono::steady_clock::now();
    m.seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::vector<double> sorted = m.seconds;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  const double median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  m.rt_factor = median / audio_seconds;
  return m;
}

}  // namespace raes::metrics
