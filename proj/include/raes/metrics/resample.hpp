#pragma once

// Rational resampling with the Octave-compatible anti-aliasing filter that
// pystoi uses (Kaiser-windowed sinc, 60 dB rejection, 10% roll-off), applied
// as a zero-phase polyphase FIR like scipy.signal.resample_poly.

#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "raes/error.hpp"

namespace raes::metrics {

inline std::vector<double> octave_resample_filter(long up, long down) {
  const double stopband = 1.0 / (2.0 * static_cast<double>(std::max(up, down)));
  const double roll_off = stopband / 10.0;
  const double rejection_db = 60.0;
  const auto half = static_cast<long>(std::ceil((rejection_db - 8.0) / (28.714 * roll_off)));
  const double beta = 0.1102 * (rejection_db - 8.7);
  const double i0_beta = std::cyl_bessel_i(0.0, beta);
  const long m = 2 * half + 1;
  std::vector<double> h(static_cast<std::size_t>(m));
  double sum = 0.0;
  for (long i = 0; i < m; ++i) {
    const double t = static_cast<double>(i - half);
    const double arg = 2.0 * stopband * t;
    const double sinc = arg == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
    const double r = 2.0 * static_cast<double>(i) / static_cast<double>(m - 1) - 1.0;
    const double win = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
    h[static_cast<std::size_t>(i)] = win * 2.0 * static_cast<double>(up) * stopband * sinc;
    sum += h[static_cast<std::size_t>(i)];
  }
  // Unit DC gain after zero-stuffing by `up`.
  for (double& v : h) v = v / sum * static_cast<double>(up);
  return h;
}

// y[m] = sum_n x[n] h[m*down + half - n*up], output length ceil(len * up / down).
inline std::vector<double> resample(std::span<const double> x, long fs_in, long fs_out) {
  if (fs_in <= 0 || fs_out <= 0) throw InvalidArgument("resample: rates must be positive");
  if (fs_in == fs_out) return {x.begin(), x.end()};
  const long g = std::gcd(fs_in, fs_out);
  const long up = fs_out / g;
  const long down = fs_in / g;
  const auto h = octave_resample_filter(up, down);
  const auto half = static_cast<long long>(h.size() - 1) / 2;
  const auto len = static_cast<long long>(x.size());
  const auto n_out = static_cast<std::size_t>((len * up + down - 1) / down);
  std::vector<double> y(n_out, 0.0);
  for (std::size_t m = 0; m < n_out; ++m) {
    const long long center = static_cast<long long>(m) * down + half;
    // h index k = center - n*up must lie in [0, size).
    long long n_lo = (center - static_cast<long long>(h.size()) + up) / up;
    if (center - static_cast<long long>(h.size()) + up < 0) n_lo = 0;
    const long long n_hi = std::min(center / up, len - 1);
    double acc = 0.0;
    for (long long n = std::max(0LL, n_lo); n <= n_hi; ++n) {
      acc += x[static_cast<std::size_t>(n)] * h[static_cast<std::size_t>(center - n * up)];
    }
    y[m] = acc;
  }
  return y;
}

}  // namespace raes::metrics
