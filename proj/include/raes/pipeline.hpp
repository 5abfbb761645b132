#pragma once

// Streaming residual echo suppression:
//   STFT(mic, far-end) -> subband NLMS -> log features -> CNN -> DTD gating
//   -> phase-sensitive mask applied to the AF error E -> overlap-add.
//
// The stream output is delayed by exactly one window: out[n] = s_hat[n - K].

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <memory>
#include <span>
#include <vector>

#include "raes/audio.hpp"
#include "raes/error.hpp"
#include "raes/features.hpp"
#include "raes/labels.hpp"
#include "raes/nlms.hpp"
#include "raes/nn/model.hpp"
#include "raes/stft.hpp"

namespace raes {

inline constexpr double kPsmEpsilon = 1e-9;

using MaskFrame = std::vector<double>;

// clamp(|S| / max(|E|, eps) * cos(theta_S - theta_E), 0, 1) per bin.
inline MaskFrame psm_target(const SpectralFrame& near_end, const SpectralFrame& error) {
  if (near_end.size() != error.size()) throw InvalidArgument("psm_target: frame sizes differ");
  MaskFrame g(near_end.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Complex s = near_end.bins[k];
    const Complex e = error.bins[k];
    const double mag_e = std::abs(e);
    // |S| cos(theta_S - theta_E) = Re(S conj(E)) / |E|; arg(0) is taken as 0.
    const double projected = mag_e > 0.0 ? std::real(s * std::conj(e)) / mag_e : std::real(s);
    g[k] = std::clamp(projected / std::max(mag_e, kPsmEpsilon), 0.0, 1.0);
  }
  return g;
}

inline SpectralFrame apply_mask(const SpectralFrame& error, std::span<const double> mask) {
  if (mask.size() != error.size()) throw InvalidArgument("apply_mask: mask size differs from frame");
  SpectralFrame out(static_cast<int>(error.size()), error.frame_index);
  for (std::size_t k = 0; k < mask.size(); ++k) out.bins[k] = mask[k] * error.bins[k];
  return out;
}

// Forces the mask to 0 (far-end single talk) or 1 (near-end single talk) when
// the DTD posterior is confident; double talk leaves it unchanged.
inline MaskFrame dtd_postprocess(MaskFrame mask, std::span<const float> dtd, double confidence) {
  if (!(confidence >= 0.5 && confidence <= 1.0)) {
    throw InvalidArgument("dtd_postprocess: confidence must be in [0.5, 1]");
  }
  if (dtd.size() != 3) throw InvalidArgument("dtd_postprocess: expected a 3-way posterior");
  const auto best = static_cast<int>(std::max_element(dtd.begin(), dtd.end()) - dtd.begin());
  if (dtd[static_cast<std::size_t>(best)] < confidence) return mask;
  if (best == static_cast<int>(DtdLabel::kFarEndSingle)) {
    std::fill(mask.begin(), mask.end(), 0.0);
  } else if (best == static_cast<int>(DtdLabel::kNearEndSingle)) {
    std::fill(mask.begin(), mask.end(), 1.0);
  }
  return mask;
}

enum class MaskSource {
  kNetwork,  // CNN mask
  kOracle,   // psm_target from a supplied near-end reference
  kAfOnly,   // no suppression; emits the AF error e(n)
};

struct PipelineConfig {
  StftConfig stft;
  NlmsConfig nlms;
  MaskSource mask_source = MaskSource::kNetwork;
  bool dtd_gate = false;
  double dtd_confidence = 0.9;

  void validate() const {
    stft.validate();
    nlms.validate();
    if (stft.num_bins() != kFeatureBins) {
      throw InvalidArgument("the suppression network needs a 128-point STFT (64 bins)");
    }
    if (dtd_gate && !(dtd_confidence >= 0.5 && dtd_confidence <= 1.0)) {
      throw InvalidArgument("DTD confidence must be in [0.5, 1]");
    }
  }
};

struct StreamChunk {
  std::vector<float> enhanced;  // s_hat, delayed by K
  std::vector<float> af_error;  // e(n), same delay
};

class RaesPipeline {
 public:
  RaesPipeline(PipelineConfig cfg, std::shared_ptr<const nn::RaesModel> model)
      : cfg_((cfg.validate(), cfg)),
        model_(std::move(model)),
        mic_(cfg_.stft),
        far_(cfg_.stft),
        near_(cfg_.stft),
        nlms_(cfg_.stft.num_bins(), cfg_.nlms),
        out_synth_(cfg_.stft),
        err_synth_(cfg_.stft) {
    if (cfg_.mask_source == MaskSource::kNetwork && !model_) {
      throw InvalidArgument("network mask source requires a model");
    }
    // One extra hop of zeros on top of the synthesizer's own hop delay.
    const std::size_t prefill = static_cast<std::size_t>(cfg_.stft.window_size);
    out_fifo_.assign(prefill, 0.0f);
    err_fifo_.assign(prefill, 0.0f);
  }

  const PipelineConfig& config() const { return cfg_; }
  int latency_samples() const { return cfg_.stft.window_size; }
  std::int64_t frames_processed() const { return frames_; }
  const NlmsState& nlms_state() const { return nlms_; }
  const nn::ModelOutput& last_model_output() const { return last_output_; }

  // Pushes equal-length chunks and returns the same number of output samples.
  // Samples short of a full hop are buffered until the next call.
  StreamChunk process(std::span<const float> mic, std::span<const float> farend) {
    if (cfg_.mask_source == MaskSource::kOracle) {
      throw InvalidArgument("oracle mask source needs the near-end reference; use process_oracle");
    }
    return run(mic, farend, {});
  }

  StreamChunk process_oracle(std::span<const float> mic, std::span<const float> farend,
                             std::span<const float> near_end) {
    if (cfg_.mask_source != MaskSource::kOracle) {
      throw InvalidArgument("process_oracle requires MaskSource::kOracle");
    }
    if (near_end.size() != mic.size()) throw InvalidArgument("near-end chunk length mismatch");
    return run(mic, farend, near_end);
  }

 private:
  StreamChunk run(std::span<const float> mic, std::span<const float> farend,
                  std::span<const float> near_end) {
    if (mic.size() != farend.size()) {
      throw InvalidArgument("mic and far-end chunks must have equal length");
    }
    pending_mic_.insert(pending_mic_.end(), mic.begin(), mic.end());
    pending_far_.insert(pending_far_.end(), farend.begin(), farend.end());
    pending_near_.insert(pending_near_.end(), near_end.begin(), near_end.end());

    const auto hop = static_cast<std::size_t>(cfg_.stft.hop);
    std::size_t consumed = 0;
    while (pending_mic_.size() - consumed >= hop) {
      process_hop(std::span<const float>(pending_mic_).subspan(consumed, hop),
                  std::span<const float>(pending_far_).subspan(consumed, hop),
                  pending_near_.empty()
                      ? std::span<const float>{}
                      : std::span<const float>(pending_near_).subspan(consumed, hop));
      consumed += hop;
    }
    const auto drop = static_cast<std::ptrdiff_t>(consumed);
    pending_mic_.erase(pending_mic_.begin(), pending_mic_.begin() + drop);
    pending_far_.erase(pending_far_.begin(), pending_far_.begin() + drop);
    if (!pending_near_.empty()) pending_near_.erase(pending_near_.begin(), pending_near_.begin() + drop);

    StreamChunk out;
    out.enhanced = pop(out_fifo_, mic.size());
    out.af_error = pop(err_fifo_, mic.size());
    return out;
  }

  void process_hop(std::span<const float> mic, std::span<const float> far,
                   std::span<const float> near_end) {
    const SpectralFrame d = mic_.push(mic);
    const SpectralFrame u = far_.push(far);
    const NlmsOutput af = nlms_step(d, u, nlms_);
    const SpectralFrame& e = af.error;

    MaskFrame mask(e.size(), 1.0);
    switch (cfg_.mask_source) {
      case MaskSource::kAfOnly:
        break;
      case MaskSource::kOracle:
        mask = psm_target(near_.push(near_end), e);
        break;
      case MaskSource::kNetwork: {
        history_.push(log_spectrum(e), log_spectrum(u), e.frame_index);
        last_output_ = model_->forward(build_feature(history_));
        mask.assign(last_output_.mask.begin(), last_output_.mask.end());
        if (cfg_.dtd_gate) mask = dtd_postprocess(std::move(mask), last_output_.dtd, cfg_.dtd_confidence);
        break;
      }
    }
    for (double& g : mask) g = std::clamp(g, 0.0, 1.0);

    auto enhanced = out_synth_.push(apply_mask(e, mask));
    auto error = err_synth_.push(e);
    // The first frame only finalizes the primed (virtual) hop before sample 0.
    if (frames_ > 0) {
      out_fifo_.insert(out_fifo_.end(), enhanced.begin(), enhanced.end());
      err_fifo_.insert(err_fifo_.end(), error.begin(), error.end());
    }
    ++frames_;
  }

  static std::vector<float> pop(std::deque<float>& fifo, std::size_t n) {
    std::vector<float> out(fifo.begin(), fifo.begin() + static_cast<std::ptrdiff_t>(n));
    fifo.erase(fifo.begin(), fifo.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
  }

  PipelineConfig cfg_;
  std::shared_ptr<const nn::RaesModel> model_;
  StreamingAnalyzer mic_, far_, near_;
  NlmsState nlms_;
  FrameHistory history_;
  StreamingSynthesizer out_synth_, err_synth_;
  nn::ModelOutput last_output_;
  std::vector<float> pending_mic_, pending_far_, pending_near_;
  std::deque<float> out_fifo_, err_fifo_;
  std::int64_t frames_ = 0;
};

struct OfflineResult {
  AudioSignal enhanced;
  AudioSignal af_error;
};

// Whole-signal processing aligned to the input: the stream is flushed with K
// zeros and the K-sample latency removed, so outputs have the input length.
inline OfflineResult process_offline(const AudioSignal& mic, const AudioSignal& farend,
                                     const PipelineConfig& cfg,
                                     std::shared_ptr<const nn::RaesModel> model,
                                     const AudioSignal* near_end = nullptr,
                                     std::size_t chunk_size = 1024) {
  if (mic.size() != farend.size()) {
    throw InvalidArgument("mic and far-end signals differ in length (" +
                          std::to_string(mic.size()) + " vs " + std::to_string(farend.size()) + ")");
  }
  if (near_end && near_end->size() != mic.size()) {
    throw InvalidArgument("near-end reference differs in length from mic");
  }
  if (chunk_size == 0) throw InvalidArgument("chunk size must be positive");
  RaesPipeline pipeline(cfg, std::move(model));
  const auto latency = static_cast<std::size_t>(pipeline.latency_samples());
  const std::size_t total = mic.size() + latency;
  auto padded = [&](const AudioSignal& s) {
    std::vector<float> v(total, 0.0f);
    std::copy(s.samples.begin(), s.samples.end(), v.begin());
    return v;
  };
  const auto m = padded(mic);
  const auto f = padded(farend);
  const auto n = near_end ? padded(*near_end) : std::vector<float>{};

  std::vector<float> enhanced, error;
  enhanced.reserve(total);
  error.reserve(total);
  for (std::size_t pos = 0; pos < total; pos += chunk_size) {
    const std::size_t len = std::min(chunk_size, total - pos);
    const auto ms = std::span<const float>(m).subspan(pos, len);
    const auto fs = std::span<const float>(f).subspan(pos, len);
    StreamChunk c = near_end ? pipeline.process_oracle(ms, fs, std::span<const float>(n).subspan(pos, len))
                             : pipeline.process(ms, fs);
    enhanced.insert(enhanced.end(), c.enhanced.begin(), c.enhanced.end());
    error.insert(error.end(), c.af_error.begin(), c.af_error.end());
  }
  OfflineResult r;
  r.enhanced.sample_rate = r.af_error.sample_rate = mic.sample_rate;
  r.enhanced.samples.assign(enhanced.begin() + static_cast<std::ptrdiff_t>(latency), enhanced.end());
  r.af_error.samples.assign(error.begin() + static_cast<std::ptrdiff_t>(latency), error.end());
  return r;
}

}  // namespace raes
