#pragma once

// Shoebox room impulse responses by the image-source method with uniform wall
// absorption and nearest-sample image placement, plus FFT-based convolution.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "raes/audio.hpp"
#include "raes/error.hpp"
#include "raes/fft.hpp"

namespace raes::synth {

using Vec3 = std::array<double, 3>;

inline constexpr double kSpeedOfSound = 343.0;

// Reverberation times and the impulse-response length that goes with each.
inline constexpr std::array<double, 4> kRoomRt60s = {0.3, 0.4, 0.5, 0.6};
inline constexpr std::array<int, 4> kRoomRirLengths = {2048, 2048, 4096, 4096};

inline int rir_length_for_rt60(double rt60) {
  for (std::size_t i = 0; i < kRoomRt60s.size(); ++i) {
    if (std::abs(rt60 - kRoomRt60s[i]) < 1e-9) return kRoomRirLengths[i];
  }
  throw InvalidArgument("rt60 " + std::to_string(rt60) + " s is not one of 0.3, 0.4, 0.5, 0.6");
}

struct RoomSpec {
  Vec3 dims{6.5, 4.1, 2.95};
  Vec3 source{1.0, 1.0, 1.5};
  Vec3 mic{2.0, 2.0, 1.5};
  double rt60 = 0.5;
  int rir_length = 4096;

  static bool inside(const Vec3& p, const Vec3& dims) {
    for (int i = 0; i < 3; ++i) {
      if (!(p[static_cast<std::size_t>(i)] > 0.0 && p[static_cast<std::size_t>(i)] < dims[static_cast<std::size_t>(i)])) return false;
    }
    return true;
  }

  void validate() const {
    for (double d : dims) {
      if (!(d > 0.0)) throw InvalidArgument("room dimensions must be positive");
    }
    if (!inside(source, dims)) throw InvalidArgument("source position is outside the room");
    if (!inside(mic, dims)) throw InvalidArgument("microphone position is outside the room");
    if (rir_length != rir_length_for_rt60(rt60)) {
      throw InvalidArgument("rir_length " + std::to_string(rir_length) + " does not match rt60 " +
                            std::to_string(rt60) + " s");
    }
  }

  double distance() const {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double d = source[static_cast<std::size_t>(i)] - mic[static_cast<std::size_t>(i)];
      s += d * d;
    }
    return std::sqrt(s);
  }
};

// The two rooms used for simulated echo paths.
inline const std::array<Vec3, 2>& standard_rooms() {
  static const std::array<Vec3, 2> rooms = {Vec3{6.5, 4.1, 2.95}, Vec3{4.2, 3.83, 2.75}};
  return rooms;
}

// Sabine: rt60 = 0.161 V / (S alpha).
inline double sabine_absorption(const Vec3& dims, double rt60) {
  const double volume = dims[0] * dims[1] * dims[2];
  const double surface = 2.0 * (dims[0] * dims[1] + dims[1] * dims[2] + dims[0] * dims[2]);
  const double alpha = 0.161 * volume / (surface * rt60);
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw InvalidArgument("rt60 " + std::to_string(rt60) + " s is not reachable in this room");
  }
  return alpha;
}

struct RirOptions {
  std::optional<double> absorption;  // overrides the Sabine estimate
  std::optional<int> length;         // overrides room.rir_length
  double sound_speed = kSpeedOfSound;
};

inline std::vector<double> generate_rir(const RoomSpec& room, double fs, const RirOptions& opts = {}) {
  for (double d : room.dims) {
    if (!(d > 0.0)) throw InvalidArgument("room dimensions must be positive");
  }
  if (!RoomSpec::inside(room.source, room.dims)) throw InvalidArgument("source position is outside the room");
  if (!RoomSpec::inside(room.mic, room.dims)) throw InvalidArgument("microphone position is outside the room");
  const int length = opts.length.value_or(room.rir_length);
  if (length <= 0) throw InvalidArgument("rir length must be positive");
  const double alpha = opts.absorption.value_or(sabine_absorption(room.dims, room.rt60));
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("absorption must be in [0, 1]");
  const double beta = std::sqrt(1.0 - alpha);

  std::vector<double> h(static_cast<std::size_t>(length), 0.0);
  const double max_dist = opts.sound_speed * length / fs;
  std::array<int, 3> n_max{};
  for (std::size_t i = 0; i < 3; ++i) {
    n_max[i] = static_cast<int>(std::ceil(max_dist / (2.0 * room.dims[i]))) + 1;
  }

  // Image (n, q) along one axis sits at (1 - 2q) src + 2 n L; it has met
  // |n - q| + |n| walls.
  auto axis_terms = [&](std::size_t axis) {
    struct Term {
      double offset;
      int reflections;
    };
    std::vector<Term> terms;
    for (int n = -n_max[axis]; n <= n_max[axis]; ++n) {
      for (int q = 0; q <= 1; ++q) {
        const double pos = (1 - 2 * q) * room.source[axis] + 2.0 * n * room.dims[axis];
        terms.push_back({pos - room.mic[axis], std::abs(n - q) + std::abs(n)});
      }
    }
    return terms;
  };
  const auto tx = axis_terms(0), ty = axis_terms(1), tz = axis_terms(2);
  for (const auto& x : tx) {
    for (const auto& y : ty) {
      const double dxy2 = x.offset * x.offset + y.offset * y.offset;
      if (dxy2 > max_dist * max_dist) continue;
      for (const auto& z : tz) {
        const double dist = std::sqrt(dxy2 + z.offset * z.offset);
        const auto idx = static_cast<long>(std::lround(dist * fs / opts.sound_speed));
        if (idx >= length) continue;
        const int order = x.reflections + y.reflections + z.reflections;
        const double gain = (order == 0 ? 1.0 : std::pow(beta, order)) / (4.0 * std::numbers::pi * dist);
        if (gain != 0.0) h[static_cast<std::size_t>(idx)] += gain;
      }
    }
  }
  return h;
}

// Linear convolution truncated to the input length.
inline AudioSignal convolve_rir(const AudioSignal& u, std::span<const double> rir) {
  AudioSignal out;
  out.sample_rate = u.sample_rate;
  out.samples.assign(u.size(), 0.0f);
  if (u.empty() || rir.empty()) return out;
  const std::size_t full = u.size() + rir.size() - 1;
  std::size_t n = 2;
  while (n < full) n <<= 1;
  RealFft fft(static_cast<int>(n));
  std::vector<double> a(n, 0.0), b(n, 0.0), y(n);
  std::copy(u.samples.begin(), u.samples.end(), a.begin());
  std::copy(rir.begin(), rir.end(), b.begin());
  std::vector<std::complex<double>> fa(n / 2 + 1), fb(n / 2 + 1);
  fft.forward(a, fa);
  fft.forward(b, fb);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  fft.inverse(fa, y);
  for (std::size_t i = 0; i < u.size(); ++i) out.samples[i] = static_cast<float>(y[i]);
  return out;
}

}  // namespace raes::synth
