#pragma once

// Normative architecture of the suppression network.
//
//   input affine (scale, offset)                       2 x 40 x 32
//   stem   Conv(16, 3x3, stride 2, pad 1) + relu6      16 x 20 x 16
//   irb1   InvertedResidual(24, stride 2, expand 4)    24 x 10 x 8
//   irb2   InvertedResidual(32, stride 2, expand 4)    32 x 5 x 4
//   irb3   InvertedResidual(64, stride 1, expand 4)    64 x 5 x 4
//   irb4   InvertedResidual(96, stride 1, expand 4)    96 x 5 x 4
//   dtd    global avg pool -> FC(96, 32) + relu6 -> FC(32, 3) + softmax
//   gate   FC(32, 96) + sigmoid, scales trunk channels
//   mask   flatten(1920) -> FC(1920, 256) + relu6 -> FC(256, 64) + sigmoid
//
// The layer table derived from ArchitectureConfig drives the weight-file
// schema, the analytic FLOPs count and the architecture fingerprint.

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "raes/features.hpp"
#include "raes/nn/layers.hpp"
#include "raes/nn/tensor.hpp"

namespace raes::nn {

struct BottleneckSpec {
  int out_channels;
  int stride;
  int expand;
};

struct ArchitectureConfig {
  int input_channels = kFeatureChannels;
  int input_height = kFeatureRows;
  int input_width = kFeatureCols;
  int stem_channels = 16;
  int stem_kernel = 3;
  int stem_stride = 2;
  int stem_padding = 1;
  std::vector<BottleneckSpec> blocks = {{24, 2, 4}, {32, 2, 4}, {64, 1, 4}, {96, 1, 4}};
  int dtd_embedding = 32;
  int dtd_classes = 3;
  int mask_hidden = 256;
  int mask_bins = kFeatureBins;
};

inline const ArchitectureConfig& default_architecture() {
  static const ArchitectureConfig cfg{};
  return cfg;
}

enum class LayerKind {
  kAffine,
  kConv,
  kDepthwise,
  kActivation,
  kResidualAdd,
  kGlobalAvgPool,
  kFullyConnected,
  kChannelGate,
};

inline const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kAffine: return "affine";
    case LayerKind::kConv: return "conv";
    case LayerKind::kDepthwise: return "depthwise";
    case LayerKind::kActivation: return "activation";
    case LayerKind::kResidualAdd: return "residual_add";
    case LayerKind::kGlobalAvgPool: return "global_avg_pool";
    case LayerKind::kFullyConnected: return "fc";
    case LayerKind::kChannelGate: return "channel_gate";
  }
  return "?";
}

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kNone: return "none";
    case Activation::kRelu6: return "relu6";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kSoftmax: return "softmax";
  }
  return "?";
}

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::kConv;
  int in_channels = 0;
  int in_height = 1;
  int in_width = 1;
  int out_channels = 0;
  int out_height = 1;
  int out_width = 1;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  Activation activation = Activation::kNone;

  std::size_t output_elements() const {
    return static_cast<std::size_t>(out_channels) * out_height * out_width;
  }
};

struct TensorSpec {
  std::string name;
  Shape shape;
};

namespace arch_detail {

inline LayerSpec conv_layer(std::string name, LayerKind kind, int c_in, int h, int w, int c_out,
                            int k, int stride, int padding) {
  LayerSpec s;
  s.name = std::move(name);
  s.kind = kind;
  s.in_channels = c_in;
  s.in_height = h;
  s.in_width = w;
  s.out_channels = c_out;
  s.out_height = conv_output_dim(h, k, stride, padding);
  s.out_width = conv_output_dim(w, k, stride, padding);
  s.kernel = k;
  s.stride = stride;
  s.padding = padding;
  return s;
}

inline LayerSpec elementwise(std::string name, LayerKind kind, int c, int h, int w,
                             Activation act = Activation::kNone) {
  LayerSpec s;
  s.name = std::move(name);
  s.kind = kind;
  s.in_channels = s.out_channels = c;
  s.in_height = s.out_height = h;
  s.in_width = s.out_width = w;
  s.activation = act;
  return s;
}

inline LayerSpec fc_layer(std::string name, int n_in, int n_out) {
  LayerSpec s;
  s.name = std::move(name);
  s.kind = LayerKind::kFullyConnected;
  s.in_channels = n_in;
  s.out_channels = n_out;
  return s;
}

}  // namespace arch_detail

inline std::vector<LayerSpec> layer_table(const ArchitectureConfig& cfg = default_architecture()) {
  using namespace arch_detail;
  std::vector<LayerSpec> t;
  int c = cfg.input_channels, h = cfg.input_height, w = cfg.input_width;
  t.push_back(elementwise("input_norm", LayerKind::kAffine, c, h, w));

  t.push_back(conv_layer("stem", LayerKind::kConv, c, h, w, cfg.stem_channels, cfg.stem_kernel,
                         cfg.stem_stride, cfg.stem_padding));
  c = t.back().out_channels, h = t.back().out_height, w = t.back().out_width;
  t.push_back(elementwise("stem.act", LayerKind::kActivation, c, h, w, Activation::kRelu6));

  for (std::size_t b = 0; b < cfg.blocks.size(); ++b) {
    const auto& blk = cfg.blocks[b];
    const std::string n = "irb" + std::to_string(b + 1);
    const int hidden = c * blk.expand;
    const int c_in = c, h_in = h, w_in = w;
    t.push_back(conv_layer(n + ".expand", LayerKind::kConv, c, h, w, hidden, 1, 1, 0));
    t.push_back(elementwise(n + ".expand.act", LayerKind::kActivation, hidden, h, w, Activation::kRelu6));
    t.push_back(conv_layer(n + ".depthwise", LayerKind::kDepthwise, hidden, h, w, hidden, 3, blk.stride, 1));
    h = t.back().out_height, w = t.back().out_width;
    t.push_back(elementwise(n + ".depthwise.act", LayerKind::kActivation, hidden, h, w, Activation::kRelu6));
    t.push_back(conv_layer(n + ".project", LayerKind::kConv, hidden, h, w, blk.out_channels, 1, 1, 0));
    c = blk.out_channels;
    if (blk.stride == 1 && c == c_in && h == h_in && w == w_in) {
      t.push_back(elementwise(n + ".residual", LayerKind::kResidualAdd, c, h, w));
    }
  }

  const int trunk_c = c, trunk_h = h, trunk_w = w;
  LayerSpec pool = elementwise("dtd.pool", LayerKind::kGlobalAvgPool, trunk_c, trunk_h, trunk_w);
  pool.out_height = pool.out_width = 1;
  t.push_back(pool);
  t.push_back(fc_layer("dtd.fc1", trunk_c, cfg.dtd_embedding));
  t.push_back(elementwise("dtd.fc1.act", LayerKind::kActivation, cfg.dtd_embedding, 1, 1, Activation::kRelu6));
  t.push_back(fc_layer("dtd.fc2", cfg.dtd_embedding, cfg.dtd_classes));
  t.push_back(elementwise("dtd.fc2.act", LayerKind::kActivation, cfg.dtd_classes, 1, 1, Activation::kSoftmax));

  t.push_back(fc_layer("gate", cfg.dtd_embedding, trunk_c));
  t.push_back(elementwise("gate.act", LayerKind::kActivation, trunk_c, 1, 1, Activation::kSigmoid));
  t.push_back(elementwise("gate.mul", LayerKind::kChannelGate, trunk_c, trunk_h, trunk_w));

  const int flat = trunk_c * trunk_h * trunk_w;
  t.push_back(fc_layer("mask.fc1", flat, cfg.mask_hidden));
  t.push_back(elementwise("mask.fc1.act", LayerKind::kActivation, cfg.mask_hidden, 1, 1, Activation::kRelu6));
  t.push_back(fc_layer("mask.fc2", cfg.mask_hidden, cfg.mask_bins));
  t.push_back(elementwise("mask.fc2.act", LayerKind::kActivation, cfg.mask_bins, 1, 1, Activation::kSigmoid));
  return t;
}

// Parameter tensors required by a layer table, in table order.
inline std::vector<TensorSpec> tensor_specs(const std::vector<LayerSpec>& table) {
  std::vector<TensorSpec> specs;
  for (const auto& l : table) {
    switch (l.kind) {
      case LayerKind::kAffine:
        specs.push_back({l.name + ".scale", {1}});
        specs.push_back({l.name + ".offset", {1}});
        break;
      case LayerKind::kConv:
        specs.push_back({l.name + ".weight", {l.out_channels, l.in_channels, l.kernel, l.kernel}});
        specs.push_back({l.name + ".bias", {l.out_channels}});
        break;
      case LayerKind::kDepthwise:
        specs.push_back({l.name + ".weight", {l.out_channels, 1, l.kernel, l.kernel}});
        specs.push_back({l.name + ".bias", {l.out_channels}});
        break;
      case LayerKind::kFullyConnected:
        specs.push_back({l.name + ".weight", {l.out_channels, l.in_channels}});
        specs.push_back({l.name + ".bias", {l.out_channels}});
        break;
      default:
        break;
    }
  }
  return specs;
}

inline std::size_t parameter_count(const std::vector<TensorSpec>& specs) {
  std::size_t n = 0;
  for (const auto& s : specs) n += shape_elements(s.shape);
  return n;
}

// One line per layer:
//   <name> <kind> in=CxHxW out=CxHxW k=<k> s=<stride> p=<pad> act=<activation>
inline std::string canonical_description(const std::vector<LayerSpec>& table) {
  std::ostringstream os;
  for (const auto& l : table) {
    os << l.name << ' ' << layer_kind_name(l.kind) << " in=" << l.in_channels << 'x'
       << l.in_height << 'x' << l.in_width << " out=" << l.out_channels << 'x' << l.out_height
       << 'x' << l.out_width << " k=" << l.kernel << " s=" << l.stride << " p=" << l.padding
       << " act=" << activation_name(l.activation) << '\n';
  }
  return os.str();
}

using Fingerprint = std::array<std::uint8_t, 32>;

// SHA-256 of the canonical layer-table description.
inline Fingerprint architecture_fingerprint(const std::vector<LayerSpec>& table) {
  const std::string text = canonical_description(table);
  Fingerprint digest{};
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != digest.size()) {
    throw Error("SHA-256 computation failed");
  }
  return digest;
}

inline std::string hex(const Fingerprint& fp) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  for (auto b : fp) {
    s += kDigits[b >> 4];
    s += kDigits[b & 15];
  }
  return s;
}

}  // namespace raes::nn
