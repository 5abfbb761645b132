#pragma once

#include <algorithm>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "raes/features.hpp"
#include "raes/nn/architecture.hpp"
#include "raes/nn/layers.hpp"
#include "raes/nn/weights.hpp"

namespace raes::nn {

struct ModelOutput {
  std::vector<float> mask;  // per-bin gain in [0, 1]
  std::vector<float> dtd;   // posterior over {near-end single, far-end single, double talk}
};

// Validated weights bound to an architecture. Immutable after construction;
// forward() is reentrant.
class RaesModel {
 public:
  explicit RaesModel(WeightBundle weights, ArchitectureConfig cfg = default_architecture())
      : cfg_(std::move(cfg)), table_(layer_table(cfg_)), weights_(std::move(weights)) {
    validate_weights(weights_, table_);
    for (std::size_t b = 0; b < cfg_.blocks.size(); ++b) {
      const std::string n = "irb" + std::to_string(b + 1);
      blocks_.push_back({weights_.get(n + ".expand.weight"), weights_.get(n + ".expand.bias").values(),
                         weights_.get(n + ".depthwise.weight"), weights_.get(n + ".depthwise.bias").values(),
                         weights_.get(n + ".project.weight"), weights_.get(n + ".project.bias").values()});
    }
  }

  const WeightBundle& weights() const { return weights_; }
  const ArchitectureConfig& architecture() const { return cfg_; }
  const std::vector<LayerSpec>& table() const { return table_; }

  ModelOutput forward(const FeatureTensor& features) const {
    return forward(Tensor({cfg_.input_channels, cfg_.input_height, cfg_.input_width}, features.data));
  }

  ModelOutput forward(const Tensor& input) const {
    const Shape expected{cfg_.input_channels, cfg_.input_height, cfg_.input_width};
    if (input.shape() != expected) {
      throw LayerError("input", "expected " + shape_string(expected) + ", got " +
                                    shape_string(input.shape()));
    }
    Tensor x = input;
    const float scale = w("input_norm.scale")[0];
    const float offset = w("input_norm.offset")[0];
    for (float& v : x.data()) v = v * scale + offset;
    finite(x, "input_norm");

    x = conv2d(x, w("stem.weight"), w("stem.bias").data(), cfg_.stem_stride, cfg_.stem_padding, "stem");
    finite(x, "stem");
    activate_inplace(x, Activation::kRelu6);

    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const std::string n = "irb" + std::to_string(b + 1);
      x = inverted_residual(x, blocks_[b], cfg_.blocks[b].stride, cfg_.blocks[b].expand, n);
      finite(x, n);
    }

    // DTD branch.
    const int c = x.channels();
    const std::size_t plane = static_cast<std::size_t>(x.height()) * x.width();
    std::vector<float> pooled(static_cast<std::size_t>(c));
    for (int ch = 0; ch < c; ++ch) {
      float s = 0.0f;
      for (std::size_t p = 0; p < plane; ++p) s += x[ch * plane + p];
      pooled[static_cast<std::size_t>(ch)] = s / static_cast<float>(plane);
    }
    Tensor embedding = fully_connected(pooled, w("dtd.fc1.weight"), w("dtd.fc1.bias").data(), "dtd.fc1");
    finite(embedding, "dtd.fc1");
    activate_inplace(embedding, Activation::kRelu6);
    Tensor dtd = fully_connected(embedding.data(), w("dtd.fc2.weight"), w("dtd.fc2.bias").data(), "dtd.fc2");
    finite(dtd, "dtd.fc2");
    activate_inplace(dtd, Activation::kSoftmax, "dtd.fc2");
    finite(dtd, "dtd.fc2");

    // Conditional gate from the DTD embedding onto the trunk channels.
    Tensor gate = fully_connected(embedding.data(), w("gate.weight"), w("gate.bias").data(), "gate");
    finite(gate, "gate");
    activate_inplace(gate, Activation::kSigmoid);
    for (int ch = 0; ch < c; ++ch) {
      const float g = gate[static_cast<std::size_t>(ch)];
      for (std::size_t p = 0; p < plane; ++p) x[ch * plane + p] *= g;
    }

    // Mask branch.
    Tensor hidden = fully_connected(x.data(), w("mask.fc1.weight"), w("mask.fc1.bias").data(), "mask.fc1");
    finite(hidden, "mask.fc1");
    activate_inplace(hidden, Activation::kRelu6);
    Tensor mask = fully_connected(hidden.data(), w("mask.fc2.weight"), w("mask.fc2.bias").data(), "mask.fc2");
    finite(mask, "mask.fc2");
    activate_inplace(mask, Activation::kSigmoid);

    ModelOutput out;
    out.mask.assign(mask.data().begin(), mask.data().end());
    for (float& g : out.mask) g = std::clamp(g, 0.0f, 1.0f);
    out.dtd.assign(dtd.data().begin(), dtd.data().end());
    return out;
  }

 private:
  const Tensor& w(const std::string& name) const { return weights_.get(name); }

  static void finite(const Tensor& t, const std::string& layer) {
    if (!t.all_finite()) throw LayerError(layer, "non-finite activation");
  }

  ArchitectureConfig cfg_;
  std::vector<LayerSpec> table_;
  WeightBundle weights_;
  std::vector<InvertedResidualParams> blocks_;
};

inline ModelOutput forward(const FeatureTensor& features, const WeightBundle& weights) {
  return RaesModel(weights).forward(features);
}

// ---------------------------------------------------------------------------
// Fixture bundles. None of these are trained; they exist for tests, demos and
// benchmarking.

// Every tensor zero except the input normalization (scale 1, offset 0).
inline WeightBundle make_zero_bundle(const ArchitectureConfig& cfg = default_architecture()) {
  const auto table = layer_table(cfg);
  WeightBundle bundle(architecture_fingerprint(table));
  for (const auto& spec : tensor_specs(table)) {
    const float fill = spec.name == "input_norm.scale" ? 1.0f : 0.0f;
    bundle.add(spec.name, Tensor(spec.shape, fill));
  }
  return bundle;
}

// Zero network whose mask head saturates at 1, so the pipeline passes E through.
inline WeightBundle make_pass_through_bundle(const ArchitectureConfig& cfg = default_architecture()) {
  WeightBundle bundle = make_zero_bundle(cfg);
  for (float& v : bundle.mutable_tensor("mask.fc2.bias").data()) v = 30.0f;
  return bundle;
}

// Seeded random weights with variance 1/fan_in; deterministic for a given seed.
inline WeightBundle make_random_bundle(std::uint64_t seed,
                                       const ArchitectureConfig& cfg = default_architecture()) {
  const auto table = layer_table(cfg);
  WeightBundle bundle(architecture_fingerprint(table));
  std::mt19937_64 rng(seed);
  for (const auto& spec : tensor_specs(table)) {
    Tensor t(spec.shape);
    if (spec.name == "input_norm.scale") {
      t[0] = 0.125f;
    } else if (spec.name == "input_norm.offset") {
      t[0] = 1.0f;
    } else {
      const bool is_bias = spec.name.ends_with(".bias");
      const std::size_t fan_in = is_bias ? 1 : shape_elements(spec.shape) / static_cast<std::size_t>(spec.shape[0]);
      const float limit = is_bias ? 0.05f : std::sqrt(3.0f / static_cast<float>(fan_in));
      std::uniform_real_distribution<float> dist(-limit, limit);
      for (float& v : t.data()) v = dist(rng);
    }
    bundle.add(spec.name, std::move(t));
  }
  return bundle;
}

}  // namespace raes::nn
