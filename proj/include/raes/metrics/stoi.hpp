#pragma once

// Short-time objective intelligibility (Taal et al.):
// resample to 10 kHz, drop frames more than 40 dB below the loudest clean
// frame, 15 one-third-octave bands from 150 Hz, 30-frame (384 ms) envelope
// segments, -15 dB clipping, mean band correlation.

#include <algorithm>
#include <cmath>
#include <complex>
#include <array>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "raes/audio.hpp"
#include "raes/error.hpp"
#include "raes/fft.hpp"
#include "raes/labels.hpp"
#include "raes/metrics/resample.hpp"

namespace raes::metrics {

namespace stoi_detail {

inline constexpr long kFs = 10000;
inline constexpr int kFrame = 256;
inline constexpr int kNfft = 512;
inline constexpr int kBands = 15;
inline constexpr double kMinFreq = 150.0;
inline constexpr int kSegment = 30;
inline constexpr double kBeta = -15.0;
inline constexpr double kDynRange = 40.0;
inline constexpr double kEps = std::numeric_limits<double>::epsilon();

// Symmetric Hann without its zero endpoints.
inline std::vector<double> hann_inner(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (i + 1) / (n + 1));
  }
  return w;
}

// Band b spans FFT bins [lo_b, hi_b).
inline std::vector<std::pair<int, int>> third_octave_bands() {
  const int n_bins = kNfft / 2 + 1;
  auto nearest_bin = [&](double freq) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_bins; ++i) {
      const double f = static_cast<double>(kFs) * i / kNfft;
      const double d = (f - freq) * (f - freq);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  };
  std::vector<std::pair<int, int>> bands;
  for (int k = 0; k < kBands; ++k) {
    const double lo = kMinFreq * std::pow(2.0, (2.0 * k - 1.0) / 6.0);
    const double hi = kMinFreq * std::pow(2.0, (2.0 * k + 1.0) / 6.0);
    bands.emplace_back(nearest_bin(lo), nearest_bin(hi));
  }
  return bands;
}

inline void remove_silent_frames(std::vector<double>& x, std::vector<double>& y) {
  const int hop = kFrame / 2;
  const auto w = hann_inner(kFrame);
  std::vector<std::size_t> starts;
  std::vector<double> energies;
  for (std::size_t i = 0; i + kFrame < x.size(); i += hop) {
    double e = 0.0;
    for (int n = 0; n < kFrame; ++n) {
      const double v = w[static_cast<std::size_t>(n)] * x[i + static_cast<std::size_t>(n)];
      e += v * v;
    }
    starts.push_back(i);
    energies.push_back(20.0 * std::log10(std::sqrt(e) + kEps));
  }
  if (starts.empty()) {
    x.clear();
    y.clear();
    return;
  }
  const double peak = *std::max_element(energies.begin(), energies.end());
  std::vector<std::size_t> kept;
  for (std::size_t f = 0; f < starts.size(); ++f) {
    if (peak - kDynRange - energies[f] < 0.0) kept.push_back(starts[f]);
  }
  const std::size_t out_len = (kept.size() - 1) * hop + kFrame;
  std::vector<double> xs(out_len, 0.0), ys(out_len, 0.0);
  for (std::size_t f = 0; f < kept.size(); ++f) {
    for (int n = 0; n < kFrame; ++n) {
      const auto src = kept[f] + static_cast<std::size_t>(n);
      const auto dst = f * hop + static_cast<std::size_t>(n);
      xs[dst] += w[static_cast<std::size_t>(n)] * x[src];
      ys[dst] += w[static_cast<std::size_t>(n)] * y[src];
    }
  }
  x = std::move(xs);
  y = std::move(ys);
}

// Third-octave band envelopes, [band][frame].
inline std::vector<std::vector<double>> band_envelopes(const std::vector<double>& x) {
  const int hop = kFrame / 2;
  const auto w = hann_inner(kFrame);
  const auto bands = third_octave_bands();
  RealFft fft(kNfft);
  std::vector<double> buf(kNfft);
  std::vector<std::complex<double>> spec(kNfft / 2 + 1);
  std::vector<std::vector<double>> env(kBands);
  for (std::size_t i = 0; i + kFrame < x.size(); i += hop) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int n = 0; n < kFrame; ++n) buf[static_cast<std::size_t>(n)] = w[static_cast<std::size_t>(n)] * x[i + static_cast<std::size_t>(n)];
    fft.forward(buf, spec);
    for (int b = 0; b < kBands; ++b) {
      double p = 0.0;
      for (int k = bands[static_cast<std::size_t>(b)].first; k < bands[static_cast<std::size_t>(b)].second; ++k) {
        p += std::norm(spec[static_cast<std::size_t>(k)]);
      }
      env[static_cast<std::size_t>(b)].push_back(std::sqrt(p));
    }
  }
  return env;
}

}  // namespace stoi_detail

inline double stoi(std::span<const float> clean, std::span<const float> processed, double fs) {
  using namespace stoi_detail;
  if (clean.size() != processed.size()) throw InvalidArgument("stoi: signal lengths differ");
  std::vector<double> x(clean.begin(), clean.end()), y(processed.begin(), processed.end());
  const long rate = std::lround(fs);
  x = resample(x, rate, kFs);
  y = resample(y, rate, kFs);
  remove_silent_frames(x, y);
  const auto xe = band_envelopes(x);
  const auto ye = band_envelopes(y);
  const std::size_t frames = xe.empty() ? 0 : xe[0].size();
  if (frames < static_cast<std::size_t>(kSegment)) {
    throw InvalidArgument("stoi: segment shorter than one analysis window (" +
                          std::to_string(frames) + " of " + std::to_string(kSegment) + " frames)");
  }
  const double clip = std::pow(10.0, -kBeta / 20.0);
  double total = 0.0;
  std::size_t count = 0;
  std::array<double, kSegment> xs{}, ys{};
  for (std::size_t m = kSegment; m <= frames; ++m) {
    for (int b = 0; b < kBands; ++b) {
      const auto& xb = xe[static_cast<std::size_t>(b)];
      const auto& yb = ye[static_cast<std::size_t>(b)];
      double nx = 0.0, ny = 0.0;
      for (int j = 0; j < kSegment; ++j) {
        xs[static_cast<std::size_t>(j)] = xb[m - kSegment + static_cast<std::size_t>(j)];
        ys[static_cast<std::size_t>(j)] = yb[m - kSegment + static_cast<std::size_t>(j)];
        nx += xs[static_cast<std::size_t>(j)] * xs[static_cast<std::size_t>(j)];
        ny += ys[static_cast<std::size_t>(j)] * ys[static_cast<std::size_t>(j)];
      }
      const double norm = std::sqrt(nx) / (std::sqrt(ny) + kEps);
      double mx = 0.0, my = 0.0;
      for (int j = 0; j < kSegment; ++j) {
        auto& yv = ys[static_cast<std::size_t>(j)];
        yv = std::min(yv * norm, xs[static_cast<std::size_t>(j)] * (1.0 + clip));
        mx += xs[static_cast<std::size_t>(j)];
        my += yv;
      }
      mx /= kSegment;
      my /= kSegment;
      double sxy = 0.0, sxx = 0.0, syy = 0.0;
      for (int j = 0; j < kSegment; ++j) {
        const double a = xs[static_cast<std::size_t>(j)] - mx;
        const double c = ys[static_cast<std::size_t>(j)] - my;
        sxy += a * c;
        sxx += a * a;
        syy += c * c;
      }
      total += sxy / ((std::sqrt(sxx) + kEps) * (std::sqrt(syy) + kEps));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

inline double stoi(const AudioSignal& clean, const AudioSignal& processed) {
  return stoi(clean.samples, processed.samples, clean.sample_rate);
}

// STOI over the samples of double-talk frames, concatenated. Frames flagged
// in `mutual_silence` carry label 2 by rule but contain no speech; they are
// left out.
inline double stoi(const AudioSignal& clean, const AudioSignal& processed,
                   std::span<const DtdLabel> labels, const std::vector<bool>& mutual_silence = {},
                   const StftConfig& cfg = {}) {
  if (clean.size() != processed.size()) throw InvalidArgument("stoi: signal lengths differ");
  if (!mutual_silence.empty() && mutual_silence.size() != labels.size()) {
    throw InvalidArgument("stoi: mutual-silence flags and labels differ in length");
  }
  const auto mask = frame_sample_mask(
      labels.size(), clean.size(),
      [&](std::size_t l) {
        return labels[l] == DtdLabel::kDoubleTalk && (mutual_silence.empty() || !mutual_silence[l]);
      },
      cfg);
  std::vector<float> x, y;
  for (std::size_t n = 0; n < clean.size(); ++n) {
    if (!mask[n]) continue;
    x.push_back(clean.samples[n]);
    y.push_back(processed.samples[n]);
  }
  return stoi(x, y, clean.sample_rate);
}

}  // namespace raes::metrics
