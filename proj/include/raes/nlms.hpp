#pragma once

// Subband NLMS: an independent multi-tap complex NLMS filter in every STFT bin.
//
// For bin k with far-end history x_k = [U(l,k), U(l-1,k), ..., U(l-T+1,k)]:
//   yhat = sum_t h_t x_t
//   e    = d - yhat
//   h_t += mu * conj(x_t) * e / (|x_k|^2 + delta)

#include <complex>
#include <cstdint>
#include <vector>

#include "raes/error.hpp"
#include "raes/stft.hpp"

namespace raes {

struct NlmsConfig {
  int taps_per_bin = 16;
  double step_size = 0.5;
  double regularization = 1e-6;
  // Far-end frame energy (sum of |U(l,k)|^2) below which adaptation is skipped.
  double freeze_energy = 1e-8;
  bool adapt = true;

  void validate() const {
    if (taps_per_bin < 1) throw InvalidArgument("NLMS needs at least one tap per bin");
    if (!(step_size > 0.0 && step_size <= 1.0)) throw InvalidArgument("NLMS step size must be in (0, 1]");
    if (!(regularization > 0.0)) throw InvalidArgument("NLMS regularization must be positive");
  }
};

struct NlmsOutput {
  SpectralFrame error;
  SpectralFrame echo_estimate;
};

class NlmsState;
inline NlmsOutput nlms_step(const SpectralFrame& mic, const SpectralFrame& farend, NlmsState& state);

class NlmsState {
 public:
  explicit NlmsState(int num_bins = 64, NlmsConfig cfg = {})
      : cfg_((cfg.validate(), cfg)),
        bins_(num_bins),
        taps_(static_cast<std::size_t>(num_bins * cfg.taps_per_bin)),
        history_(static_cast<std::size_t>(num_bins * cfg.taps_per_bin)) {}

  const NlmsConfig& config() const { return cfg_; }
  int num_bins() const { return bins_; }
  int taps_per_bin() const { return cfg_.taps_per_bin; }
  std::int64_t frames_processed() const { return frames_; }

  // Tap t of bin k; t = 0 multiplies the current far-end frame.
  Complex tap(int k, int t) const { return taps_[index(k, t)]; }
  void set_tap(int k, int t, Complex v) { taps_[index(k, t)] = v; }
  void set_adaptation(bool enabled) { cfg_.adapt = enabled; }

 private:
  friend NlmsOutput nlms_step(const SpectralFrame&, const SpectralFrame&, NlmsState&);

  // Slot of tap t inside the history ring for bin k.
  std::size_t index(int k, int t) const {
    return static_cast<std::size_t>(k * cfg_.taps_per_bin + t);
  }
  std::size_t ring_index(int k, int t) const {
    const int slot = (head_ - t + cfg_.taps_per_bin) % cfg_.taps_per_bin;
    return static_cast<std::size_t>(k * cfg_.taps_per_bin + slot);
  }

  NlmsConfig cfg_;
  int bins_;
  std::vector<Complex> taps_;
  std::vector<Complex> history_;
  int head_ = 0;
  std::int64_t frames_ = 0;
};

inline NlmsOutput nlms_step(const SpectralFrame& mic, const SpectralFrame& farend,
                            NlmsState& state) {
  const int bins = state.bins_;
  if (static_cast<int>(mic.size()) != bins || static_cast<int>(farend.size()) != bins) {
    throw InvalidArgument("nlms_step: frame size does not match filter state");
  }
  const int taps = state.cfg_.taps_per_bin;
  state.head_ = (state.head_ + 1) % taps;
  for (int k = 0; k < bins; ++k) {
    state.history_[state.ring_index(k, 0)] = farend.bins[static_cast<std::size_t>(k)];
  }

  const bool adapt = state.cfg_.adapt && farend.energy() >= state.cfg_.freeze_energy;
  NlmsOutput out{SpectralFrame(bins, mic.frame_index), SpectralFrame(bins, mic.frame_index)};
  for (int k = 0; k < bins; ++k) {
    Complex yhat(0.0, 0.0);
    double power = 0.0;
    for (int t = 0; t < taps; ++t) {
      const Complex x = state.history_[state.ring_index(k, t)];
      yhat += state.taps_[state.index(k, t)] * x;
      power += std::norm(x);
    }
    const Complex e = mic.bins[static_cast<std::size_t>(k)] - yhat;
    out.echo_estimate.bins[static_cast<std::size_t>(k)] = yhat;
    out.error.bins[static_cast<std::size_t>(k)] = e;
    if (adapt) {
      const Complex g = state.cfg_.step_size * e / (power + state.cfg_.regularization);
      for (int t = 0; t < taps; ++t) {
        state.taps_[state.index(k, t)] += g * std::conj(state.history_[state.ring_index(k, t)]);
      }
    }
  }
  ++state.frames_;
  return out;
}

}  // namespace raes
