#pragma once

// Square-root-Hann STFT analysis / overlap-add synthesis at 50% overlap.
//
// A frame of K samples is windowed, transformed with a K-point real FFT and
// reduced to bins 1..K/2: Nyquist is kept, so a K = 128 frame carries exactly
// 64 complex values. The real DC value rides along in a separate field so a
// plain stft/istft pair reconstructs exactly; every frame built by the
// enhancement path leaves it at 0, which is how the system discards DC.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "raes/audio.hpp"
#include "raes/error.hpp"
#include "raes/fft.hpp"

namespace raes {

using Complex = std::complex<double>;

struct StftConfig {
  int window_size = 128;
  int hop = 64;
  double sample_rate = kDefaultSampleRate;

  int num_bins() const { return window_size / 2; }

  void validate() const {
    if (window_size < 4 || window_size % 2 != 0) {
      throw InvalidArgument("STFT window size must be even and >= 4");
    }
    if (hop * 2 != window_size) throw InvalidArgument("STFT hop must be half the window size");
    if (!(sample_rate > 0.0)) throw InvalidArgument("STFT sample rate must be positive");
  }
};

struct SpectralFrame {
  std::vector<Complex> bins;  // bins 1..K/2 of the K-point transform
  double dc = 0.0;            // bin 0; never seen by features, filter or model
  std::int64_t frame_index = 0;

  SpectralFrame() = default;
  explicit SpectralFrame(int num_bins, std::int64_t index = 0)
      : bins(static_cast<std::size_t>(num_bins)), frame_index(index) {}

  std::size_t size() const { return bins.size(); }

  double energy() const {
    double e = 0.0;
    for (const Complex& b : bins) e += std::norm(b);
    return e;
  }
};

// Periodic square-root Hann: w[n] = sin(pi n / K). Satisfies w^2[n] + w^2[n + K/2] = 1.
inline std::vector<double> sqrt_hann(int window_size) {
  std::vector<double> w(static_cast<std::size_t>(window_size));
  for (int n = 0; n < window_size; ++n) {
    w[static_cast<std::size_t>(n)] = std::sin(std::numbers::pi * n / window_size);
  }
  return w;
}

// Windowed transform of a single K-sample block.
class FrameTransform {
 public:
  explicit FrameTransform(const StftConfig& cfg)
      : cfg_((cfg.validate(), cfg)),
        window_(sqrt_hann(cfg.window_size)),
        fft_(cfg.window_size),
        time_(static_cast<std::size_t>(cfg.window_size)),
        spec_(static_cast<std::size_t>(cfg.window_size / 2 + 1)) {}

  const StftConfig& config() const { return cfg_; }
  const std::vector<double>& window() const { return window_; }

  template <typename T>
  SpectralFrame analyze(std::span<const T> block, std::int64_t index) {
    for (std::size_t n = 0; n < window_.size(); ++n) {
      time_[n] = static_cast<double>(block[n]) * window_[n];
    }
    fft_.forward(time_, spec_);
    SpectralFrame frame(cfg_.num_bins(), index);
    std::copy(spec_.begin() + 1, spec_.end(), frame.bins.begin());
    frame.dc = spec_[0].real();
    return frame;
  }

  // Inverse transform followed by the synthesis window; returns K samples.
  std::span<const double> synthesize(const SpectralFrame& frame) {
    if (static_cast<int>(frame.size()) != cfg_.num_bins()) {
      throw InvalidArgument("spectral frame has the wrong number of bins");
    }
    spec_[0] = Complex(frame.dc, 0.0);
    std::copy(frame.bins.begin(), frame.bins.end(), spec_.begin() + 1);
    fft_.inverse(spec_, time_);
    for (std::size_t n = 0; n < window_.size(); ++n) time_[n] *= window_[n];
    return time_;
  }

 private:
  StftConfig cfg_;
  std::vector<double> window_;
  RealFft fft_;
  std::vector<double> time_;
  std::vector<Complex> spec_;
};

// Offline analysis: frame l covers samples [l*hop, l*hop + K).
inline std::vector<SpectralFrame> stft(std::span<const float> samples,
                                       const StftConfig& cfg = {}) {
  cfg.validate();
  const auto k = static_cast<std::size_t>(cfg.window_size);
  if (samples.size() < k) throw InvalidArgument("stft: insufficient samples");
  const std::size_t hop = static_cast<std::size_t>(cfg.hop);
  const std::size_t count = (samples.size() - k) / hop + 1;
  FrameTransform transform(cfg);
  std::vector<SpectralFrame> frames;
  frames.reserve(count);
  for (std::size_t l = 0; l < count; ++l) {
    frames.push_back(transform.analyze(samples.subspan(l * hop, k),
                                       static_cast<std::int64_t>(l)));
  }
  return frames;
}

inline std::vector<SpectralFrame> stft(const AudioSignal& signal, const StftConfig& cfg = {}) {
  return stft(std::span<const float>(signal.samples), cfg);
}

// Offline synthesis; output length is (frames - 1) * hop + K.
inline std::vector<double> istft_samples(std::span<const SpectralFrame> frames,
                                         const StftConfig& cfg = {}) {
  if (frames.empty()) throw InvalidArgument("istft: empty frame sequence");
  FrameTransform transform(cfg);
  const auto hop = static_cast<std::size_t>(cfg.hop);
  const auto k = static_cast<std::size_t>(cfg.window_size);
  std::vector<double> out((frames.size() - 1) * hop + k, 0.0);
  for (std::size_t l = 0; l < frames.size(); ++l) {
    const auto block = transform.synthesize(frames[l]);
    for (std::size_t n = 0; n < k; ++n) out[l * hop + n] += block[n];
  }
  return out;
}

inline AudioSignal istft(std::span<const SpectralFrame> frames, const StftConfig& cfg = {}) {
  const auto samples = istft_samples(frames, cfg);
  AudioSignal out;
  out.sample_rate = cfg.sample_rate;
  out.samples.assign(samples.begin(), samples.end());
  return out;
}

// Streaming analysis. The K-sample buffer starts with K - hop zeros so the
// first pushed hop already yields a frame and every real sample is covered by
// two frames.
class StreamingAnalyzer {
 public:
  explicit StreamingAnalyzer(const StftConfig& cfg = {})
      : transform_(cfg), buffer_(static_cast<std::size_t>(cfg.window_size), 0.0f) {}

  // Consumes exactly one hop of samples.
  SpectralFrame push(std::span<const float> hop_samples) {
    const auto hop = static_cast<std::size_t>(transform_.config().hop);
    if (hop_samples.size() != hop) throw InvalidArgument("analyzer expects exactly one hop");
    const auto keep = std::shift_left(buffer_.begin(), buffer_.end(), static_cast<std::ptrdiff_t>(hop));
    std::copy(hop_samples.begin(), hop_samples.end(), keep);
    return transform_.analyze(std::span<const float>(buffer_), frames_++);
  }

  std::int64_t frames_emitted() const { return frames_; }

 private:
  FrameTransform transform_;
  std::vector<float> buffer_;
  std::int64_t frames_ = 0;
};

// Streaming overlap-add. Each pushed frame finalizes one hop of output.
class StreamingSynthesizer {
 public:
  explicit StreamingSynthesizer(const StftConfig& cfg = {})
      : transform_(cfg), accum_(static_cast<std::size_t>(cfg.window_size), 0.0) {}

  std::vector<float> push(const SpectralFrame& frame) {
    const auto hop = static_cast<std::size_t>(transform_.config().hop);
    const auto block = transform_.synthesize(frame);
    for (std::size_t n = 0; n < accum_.size(); ++n) accum_[n] += block[n];
    std::vector<float> out(accum_.begin(), accum_.begin() + static_cast<std::ptrdiff_t>(hop));
    std::fill(std::shift_left(accum_.begin(), accum_.end(), static_cast<std::ptrdiff_t>(hop)), accum_.end(), 0.0);
    return out;
  }

 private:
  FrameTransform transform_;
  std::vector<double> accum_;
};

}  // namespace raes
