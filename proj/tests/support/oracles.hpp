#pragma once

// Independent reference implementations used as test oracles. Everything
// here is deliberately naive (direct sums, double precision) and shares no
// code with the library beyond plain data types.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "raes/audio.hpp"
#include "raes/nn/tensor.hpp"
#include "raes/nn/weights.hpp"

namespace oracle {

using cd = std::complex<double>;

// X[k] = sum_n x[n] e^{-2 pi i k n / N} for k = 0..N/2.
inline std::vector<cd> direct_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<cd> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    cd acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n);
      acc += x[t] * cd(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

inline std::vector<double> sqrt_hann(int k) {
  std::vector<double> w(static_cast<std::size_t>(k));
  for (int n = 0; n < k; ++n) w[static_cast<std::size_t>(n)] = std::sin(std::numbers::pi * n / k);
  return w;
}

// Windowed DFT of x[start, start + K), bins 1..K/2.
inline std::vector<cd> frame_dft(const std::vector<float>& x, std::size_t start, int k = 128) {
  const auto w = sqrt_hann(k);
  std::vector<double> seg(static_cast<std::size_t>(k));
  for (int n = 0; n < k; ++n) seg[static_cast<std::size_t>(n)] = x[start + static_cast<std::size_t>(n)] * w[static_cast<std::size_t>(n)];
  auto full = direct_dft(seg);
  return {full.begin() + 1, full.end()};
}

// out[co][oy][ox] = b[co] + sum in[ci][oy*s - p + ky][ox*s - p + kx] * w[co][ci][ky][kx]
inline raes::nn::Tensor naive_conv2d(const raes::nn::Tensor& in, const raes::nn::Tensor& w,
                                     const std::vector<float>& bias, int stride, int pad) {
  const int co_n = w.dim(0), ci_n = w.dim(1), k = w.dim(2);
  const int h = in.dim(1), wd = in.dim(2);
  const int oh = (h + 2 * pad - k) / stride + 1, ow = (wd + 2 * pad - k) / stride + 1;
  raes::nn::Tensor out({co_n, oh, ow});
  for (int co = 0; co < co_n; ++co)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double acc = bias.empty() ? 0.0 : bias[static_cast<std::size_t>(co)];
        for (int ci = 0; ci < ci_n; ++ci)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int iy = oy * stride - pad + ky, ix = ox * stride - pad + kx;
              if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
              acc += static_cast<double>(in.at(ci, iy, ix)) *
                     w[static_cast<std::size_t>(((co * ci_n + ci) * k + ky) * k + kx)];
            }
        out.at(co, oy, ox) = static_cast<float>(acc);
      }
  return out;
}

inline raes::nn::Tensor naive_depthwise(const raes::nn::Tensor& in, const raes::nn::Tensor& w,
                                        const std::vector<float>& bias, int stride, int pad) {
  const int c_n = w.dim(0), k = w.dim(2);
  const int h = in.dim(1), wd = in.dim(2);
  const int oh = (h + 2 * pad - k) / stride + 1, ow = (wd + 2 * pad - k) / stride + 1;
  raes::nn::Tensor out({c_n, oh, ow});
  for (int c = 0; c < c_n; ++c)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double acc = bias.empty() ? 0.0 : bias[static_cast<std::size_t>(c)];
        for (int ky = 0; ky < k; ++ky)
          for (int kx = 0; kx < k; ++kx) {
            const int iy = oy * stride - pad + ky, ix = ox * stride - pad + kx;
            if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
            acc += static_cast<double>(in.at(c, iy, ix)) * w[static_cast<std::size_t>((c * k + ky) * k + kx)];
          }
        out.at(c, oy, ox) = static_cast<float>(acc);
      }
  return out;
}

inline std::vector<float> naive_fc(const std::vector<float>& x, const raes::nn::Tensor& w,
                                   const std::vector<float>& b) {
  const int n_out = w.dim(0), n_in = w.dim(1);
  std::vector<float> y(static_cast<std::size_t>(n_out));
  for (int o = 0; o < n_out; ++o) {
    double acc = b.empty() ? 0.0 : b[static_cast<std::size_t>(o)];
    for (int i = 0; i < n_in; ++i) acc += static_cast<double>(w[static_cast<std::size_t>(o * n_in + i)]) * x[static_cast<std::size_t>(i)];
    y[static_cast<std::size_t>(o)] = static_cast<float>(acc);
  }
  return y;
}

inline float relu6(float x) { return x < 0.0f ? 0.0f : (x > 6.0f ? 6.0f : x); }
inline float sigmoid(double x) { return static_cast<float>(1.0 / (1.0 + std::exp(-x))); }

struct ReferenceOutput {
  std::vector<float> mask, dtd;
};

// Layer-by-layer forward pass of the normative architecture, written from the
// architecture description only.
inline ReferenceOutput reference_forward(const std::vector<float>& features, const raes::nn::WeightBundle& wb) {
  using raes::nn::Tensor;
  auto vec = [&](const std::string& n) { return wb.get(n).values(); };
  Tensor x({2, 40, 32}, features);
  const float scale = wb.get("input_norm.scale")[0], offset = wb.get("input_norm.offset")[0];
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = x[i] * scale + offset;
  x = naive_conv2d(x, wb.get("stem.weight"), vec("stem.bias"), 2, 1);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = relu6(x[i]);
  const int strides[4] = {2, 2, 1, 1};
  for (int b = 0; b < 4; ++b) {
    const std::string n = "irb" + std::to_string(b + 1);
    Tensor h = naive_conv2d(x, wb.get(n + ".expand.weight"), vec(n + ".expand.bias"), 1, 0);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = relu6(h[i]);
    h = naive_depthwise(h, wb.get(n + ".depthwise.weight"), vec(n + ".depthwise.bias"), strides[b], 1);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = relu6(h[i]);
    Tensor o = naive_conv2d(h, wb.get(n + ".project.weight"), vec(n + ".project.bias"), 1, 0);
    if (strides[b] == 1 && o.dim(0) == x.dim(0)) {
      for (std::size_t i = 0; i < o.size(); ++i) o[i] += x[i];
    }
    x = o;
  }
  const int c = x.dim(0), plane = x.dim(1) * x.dim(2);
  std::vector<float> pooled(static_cast<std::size_t>(c));
  for (int ch = 0; ch < c; ++ch) {
    double s = 0.0;
    for (int p = 0; p < plane; ++p) s += x[static_cast<std::size_t>(ch * plane + p)];
    pooled[static_cast<std::size_t>(ch)] = static_cast<float>(s / plane);
  }
  auto emb = naive_fc(pooled, wb.get("dtd.fc1.weight"), vec("dtd.fc1.bias"));
  for (auto& v : emb) v = relu6(v);
  auto logits = naive_fc(emb, wb.get("dtd.fc2.weight"), vec("dtd.fc2.bias"));
  ReferenceOutput out;
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (float v : logits) total += std::exp(v - peak);
  for (float v : logits) out.dtd.push_back(static_cast<float>(std::exp(v - peak) / total));
  auto gate = naive_fc(emb, wb.get("gate.weight"), vec("gate.bias"));
  std::vector<float> flat(x.values());
  for (int ch = 0; ch < c; ++ch) {
    const float g = sigmoid(gate[static_cast<std::size_t>(ch)]);
    for (int p = 0; p < plane; ++p) flat[static_cast<std::size_t>(ch * plane + p)] *= g;
  }
  auto hidden = naive_fc(flat, wb.get("mask.fc1.weight"), vec("mask.fc1.bias"));
  for (auto& v : hidden) v = relu6(v);
  for (float v : naive_fc(hidden, wb.get("mask.fc2.weight"), vec("mask.fc2.bias"))) out.mask.push_back(sigmoid(v));
  return out;
}

// Byte-level writer for the weight file, independent of the library serializer.
class RaesWriter {
 public:
  RaesWriter& magic(const char* m = "RAES") {
    bytes_.insert(bytes_.end(), m, m + 4);
    return *this;
  }
  RaesWriter& u8(std::uint8_t v) {
    bytes_.push_back(v);
    return *this;
  }
  RaesWriter& u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
  }
  RaesWriter& u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
  }
  RaesWriter& raw(const std::uint8_t* p, std::size_t n) {
    bytes_.insert(bytes_.end(), p, p + n);
    return *this;
  }
  RaesWriter& f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    return u32(bits);
  }
  RaesWriter& tensor(const std::string& name, const std::vector<int>& dims, const std::vector<float>& data,
                     std::uint8_t dtype = 0) {
    u16(static_cast<std::uint16_t>(name.size()));
    bytes_.insert(bytes_.end(), name.begin(), name.end());
    u8(dtype).u8(static_cast<std::uint8_t>(dims.size()));
    for (int d : dims) u32(static_cast<std::uint32_t>(d));
    for (float v : data) f32(v);
    return *this;
  }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

inline std::vector<float> white_noise(std::size_t n, std::uint64_t seed, double sigma = 0.1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<float> x(n);
  for (auto& v : x) v = static_cast<float>(g(rng));
  return x;
}

// Voiced "syllables" (harmonic stacks with a smooth envelope and drifting
// pitch) separated by pauses of true silence.
inline std::vector<float> speech_like(double seconds, std::uint64_t seed, double fs = 16000.0,
                                      double level = 0.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto n = static_cast<std::size_t>(seconds * fs);
  std::vector<float> x(n, 0.0f);
  std::size_t pos = static_cast<std::size_t>(0.05 * fs);
  while (pos < n) {
    const auto len = static_cast<std::size_t>((0.12 + 0.25 * u(rng)) * fs);
    const double f0 = 100.0 + 140.0 * u(rng);
    const double drift = (u(rng) - 0.5) * 0.4;
    const double formant = 500.0 + 2000.0 * u(rng);
    double phase = 0.0;
    for (std::size_t i = 0; i < len && pos + i < n; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(len);
      const double env = std::sin(std::numbers::pi * t);
      const double f = f0 * (1.0 + drift * t);
      phase += 2.0 * std::numbers::pi * f / fs;
      double v = 0.0;
      for (int h = 1; h * f < 0.45 * fs && h <= 30; ++h) {
        const double fh = h * f;
        const double amp = 1.0 / (1.0 + std::pow((fh - formant) / 400.0, 2)) + 0.3 / h;
        v += amp * std::sin(h * phase);
      }
      x[pos + i] = static_cast<float>(level * 0.25 * env * v);
    }
    pos += len + static_cast<std::size_t>((0.05 + 0.25 * u(rng)) * fs);
  }
  return x;
}

inline raes::AudioSignal signal(std::vector<float> v, double fs = 16000.0) {
  raes::AudioSignal s;
  s.samples = std::move(v);
  s.sample_rate = fs;
  return s;
}

// Truncated direct-sum convolution.
inline std::vector<double> naive_convolve(const std::vector<float>& u, const std::vector<double>& h) {
  std::vector<double> y(u.size(), 0.0);
  for (std::size_t n = 0; n < u.size(); ++n)
    for (std::size_t j = 0; j < h.size() && j <= n; ++j) y[n] += h[j] * u[n - j];
  return y;
}

// Lag maximizing sum a[n] b[n - lag].
inline long xcorr_peak_lag(const std::vector<float>& a, const std::vector<float>& b, long max_lag) {
  long best = 0;
  double best_v = -1e300;
  for (long lag = -max_lag; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (long n = 0; n < static_cast<long>(a.size()); ++n) {
      const long m = n - lag;
      if (m >= 0 && m < static_cast<long>(b.size())) acc += static_cast<double>(a[static_cast<std::size_t>(n)]) * b[static_cast<std::size_t>(m)];
    }
    if (acc > best_v) {
      best_v = acc;
      best = lag;
    }
  }
  return best;
}

// Schroeder backward-integrated energy decay curve, dB re. total.
inline std::vector<double> schroeder_db(const std::vector<double>& h) {
  std::vector<double> edc(h.size());
  double acc = 0.0;
  for (std::size_t i = h.size(); i-- > 0;) {
    acc += h[i] * h[i];
    edc[i] = acc;
  }
  for (auto& v : edc) v = 10.0 * std::log10(v / acc + 1e-300);
  return edc;
}

// Double-talk frames by direct transform, then per-sample ownership of the
// central hop of each window, then the power ratio.
inline double double_talk_ser_db(const std::vector<float>& s, const std::vector<float>& y) {
  const std::size_t frames = (s.size() - 128) / 64 + 1;
  std::vector<bool> dt(frames);
  auto peak = [](const std::vector<float>& x, std::size_t start) {
    double m = 0.0;
    for (const auto& c : oracle::frame_dft(x, start)) m = std::max(m, std::abs(c));
    return m;
  };
  for (std::size_t l = 0; l < frames; ++l) {
    const double ms = peak(s, l * 64), my = peak(y, l * 64);
    const bool near_single = my < 0.001 && ms > 0.001;
    const bool far_single = ms < 0.001 && my > 0.001;
    dt[l] = !near_single && !far_single;
  }
  double ps = 0.0, py = 0.0;
  for (std::size_t n = 0; n < s.size(); ++n) {
    const std::size_t l = n < 32 ? 0 : std::min((n - 32) / 64, frames - 1);
    if (!dt[l]) continue;
    ps += static_cast<double>(s[n]) * s[n];
    py += static_cast<double>(y[n]) * y[n];
  }
  return 10.0 * std::log10(ps / py);
}

}  // namespace oracle
