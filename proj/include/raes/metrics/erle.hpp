#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "raes/audio.hpp"
#include "raes/error.hpp"
#include "raes/labels.hpp"

namespace raes::metrics {

inline constexpr double kErleCapDb = 80.0;

// 10 log10(sum d^2 / sum r^2) over the selected samples, capped at 80 dB.
inline double erle_db(std::span<const float> d, std::span<const float> residual,
                      const std::vector<bool>* sample_mask = nullptr) {
  if (d.size() != residual.size()) throw InvalidArgument("erle: signal lengths differ");
  double ed = 0.0, er = 0.0;
  for (std::size_t n = 0; n < d.size(); ++n) {
    if (sample_mask && !(*sample_mask)[n]) continue;
    ed += static_cast<double>(d[n]) * d[n];
    er += static_cast<double>(residual[n]) * residual[n];
  }
  if (ed <= 0.0) throw InvalidArgument("erle: no reference energy");
  if (er <= 0.0) return kErleCapDb;
  return std::min(kErleCapDb, 10.0 * std::log10(ed / er));
}

// ERLE over far-end single-talk frames.
inline double erle_db(const AudioSignal& d, const AudioSignal& residual,
                      std::span<const DtdLabel> labels, const StftConfig& cfg = {}) {
  const auto mask = label_sample_mask(labels, d.size(), DtdLabel::kFarEndSingle, cfg);
  return erle_db(d.samples, residual.samples, &mask);
}

}  // namespace raes::metrics
