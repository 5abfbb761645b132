#pragma once

// Loudspeaker-path distortions applied to the far-end signal before it
// becomes echo: amplifier hard clipping, a memoryless sigmoid nonlinearity
// and a bulk system delay.

#include <algorithm>
#include <cmath>
#include <string>

#include "raes/audio.hpp"
#include "raes/error.hpp"

namespace raes::synth {

enum class NonlinearityMode {
  kCorrected,  // gamma * (2 / (1 + exp(-a b)) - 1): zero in, zero out
  kAsWritten,  // gamma * (2 / (1 + exp(-a b))): literal form, offset gamma at silence
};

inline const char* to_string(NonlinearityMode m) {
  return m == NonlinearityMode::kCorrected ? "corrected" : "as_written";
}

inline NonlinearityMode parse_nonlinearity_mode(const std::string& s) {
  if (s == "corrected") return NonlinearityMode::kCorrected;
  if (s == "as_written") return NonlinearityMode::kAsWritten;
  throw InvalidArgument("unknown nonlinearity mode '" + s + "'");
}

inline AudioSignal hard_clip(AudioSignal u, double u_max) {
  if (!(u_max > 0.0 && u_max <= 1.0)) throw InvalidArgument("hard_clip: u_max must be in (0, 1]");
  const auto limit = static_cast<float>(u_max);
  for (float& v : u.samples) v = std::clamp(v, -limit, limit);
  return u;
}

inline double loudspeaker_sample(double u_clip, double gamma, double a_pos, double a_neg,
                                 NonlinearityMode mode) {
  const double b = 1.5 * u_clip - 0.3 * u_clip * u_clip;
  const double a = b > 0.0 ? a_pos : a_neg;
  const double s = 2.0 / (1.0 + std::exp(-a * b));
  return gamma * (mode == NonlinearityMode::kCorrected ? s - 1.0 : s);
}

inline AudioSignal loudspeaker_nonlinearity(AudioSignal u_clip, double gamma, double a_pos,
                                            double a_neg,
                                            NonlinearityMode mode = NonlinearityMode::kCorrected) {
  for (float& v : u_clip.samples) {
    v = static_cast<float>(loudspeaker_sample(v, gamma, a_pos, a_neg, mode));
  }
  return u_clip;
}

inline std::size_t delay_samples(double delay_ms, double sample_rate) {
  if (!(delay_ms >= 0.0)) throw InvalidArgument("delay must be non-negative");
  return static_cast<std::size_t>(std::llround(delay_ms * sample_rate / 1000.0));
}

// Zero-prefix shift keeping the original length.
inline AudioSignal apply_delay(const AudioSignal& u, double delay_ms) {
  const std::size_t shift = delay_samples(delay_ms, u.sample_rate);
  AudioSignal out;
  out.sample_rate = u.sample_rate;
  out.samples.assign(u.size(), 0.0f);
  if (shift < u.size()) {
    std::copy(u.samples.begin(), u.samples.end() - static_cast<std::ptrdiff_t>(shift),
              out.samples.begin() + static_cast<std::ptrdiff_t>(shift));
  }
  return out;
}

}  // namespace raes::synth
