#pragma once

// Inference primitives for the compact CNN. All arithmetic is float32;
// dense products go through Eigen.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "raes/nn/tensor.hpp"

namespace raes::nn {

enum class Activation { kNone, kRelu6, kSigmoid, kSoftmax };

inline constexpr int conv_output_dim(int in, int kernel, int stride, int padding) {
  return (in + 2 * padding - kernel) / stride + 1;
}

namespace detail {

inline void require(bool ok, std::string_view layer, const std::string& what) {
  if (!ok) throw LayerError(std::string(layer), what);
}

inline void check_conv_args(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
                            int stride, int padding, std::string_view layer) {
  require(input.rank() == 3, layer, "input must be (C, H, W), got " + shape_string(input.shape()));
  require(kernel.rank() == 4 && kernel.dim(2) == kernel.dim(3), layer,
          "kernel must be (C_out, C_in, k, k), got " + shape_string(kernel.shape()));
  require(stride >= 1 && padding >= 0, layer, "invalid stride or padding");
  require(bias.empty() || static_cast<int>(bias.size()) == kernel.dim(0), layer,
          "bias length " + std::to_string(bias.size()) + " does not match " +
              std::to_string(kernel.dim(0)) + " output channels");
  const int k = kernel.dim(2);
  require(input.height() + 2 * padding >= k && input.width() + 2 * padding >= k, layer,
          "kernel larger than padded input");
}

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;

// Zero-padded copy of one plane so the spatial loops need no bounds checks.
inline void pad_plane(const float* in, int h, int w, int padding, std::vector<float>& out) {
  const int pw = w + 2 * padding;
  out.assign(static_cast<std::size_t>(h + 2 * padding) * pw, 0.0f);
  for (int y = 0; y < h; ++y) {
    std::copy(in + static_cast<std::ptrdiff_t>(y) * w, in + static_cast<std::ptrdiff_t>(y + 1) * w,
              out.begin() + static_cast<std::ptrdiff_t>(y + padding) * pw + padding);
  }
}

}  // namespace detail

// Standard cross-correlation with zero padding.
inline Tensor conv2d(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
                     int stride, int padding, std::string_view layer = "conv2d") {
  detail::check_conv_args(input, kernel, bias, stride, padding, layer);
  const int c_out = kernel.dim(0), c_in = kernel.dim(1), k = kernel.dim(2);
  detail::require(input.channels() == c_in, layer,
                  "input has " + std::to_string(input.channels()) + " channels, kernel expects " +
                      std::to_string(c_in));
  const int in_h = input.height(), in_w = input.width();
  const int out_h = conv_output_dim(in_h, k, stride, padding);
  const int out_w = conv_output_dim(in_w, k, stride, padding);
  Tensor out({c_out, out_h, out_w});
  const auto in_plane = static_cast<std::ptrdiff_t>(in_h) * in_w;
  const auto out_plane = static_cast<std::ptrdiff_t>(out_h) * out_w;
  using detail::ConstMatrixMap, detail::MatrixMap, detail::RowMatrix;
  const ConstMatrixMap weights(kernel.data().data(), c_out, static_cast<std::ptrdiff_t>(c_in) * k * k);
  MatrixMap result(out.data().data(), c_out, out_plane);

  if (k == 1 && stride == 1 && padding == 0) {
    result.noalias() = weights * ConstMatrixMap(input.data().data(), c_in, in_plane);
  } else {
    // im2col: row (ci, ky, kx), column (oy, ox).
    RowMatrix cols(static_cast<std::ptrdiff_t>(c_in) * k * k, out_plane);
    std::vector<float> padded;
    const int pw = in_w + 2 * padding;
    for (int ci = 0; ci < c_in; ++ci) {
      detail::pad_plane(input.data().data() + ci * in_plane, in_h, in_w, padding, padded);
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          float* row = cols.data() + ((static_cast<std::ptrdiff_t>(ci) * k + ky) * k + kx) * out_plane;
          for (int oy = 0; oy < out_h; ++oy) {
            const float* src = padded.data() + static_cast<std::ptrdiff_t>(oy * stride + ky) * pw + kx;
            for (int ox = 0; ox < out_w; ++ox) row[oy * out_w + ox] = src[ox * stride];
          }
        }
      }
    }
    result.noalias() = weights * cols;
  }
  if (!bias.empty()) {
    for (int co = 0; co < c_out; ++co) result.row(co).array() += bias[static_cast<std::size_t>(co)];
  }
  return out;
}

// Per-channel spatial convolution; kernel is (C, 1, k, k).
inline Tensor depthwise_conv2d(const Tensor& input, const Tensor& kernel,
                               std::span<const float> bias, int stride, int padding,
                               std::string_view layer = "depthwise_conv2d") {
  detail::check_conv_args(input, kernel, bias, stride, padding, layer);
  const int channels = kernel.dim(0), k = kernel.dim(2);
  detail::require(kernel.dim(1) == 1, layer, "depthwise kernel must have one input channel");
  detail::require(input.channels() == channels, layer,
                  "input has " + std::to_string(input.channels()) + " channels, kernel expects " +
                      std::to_string(channels));
  const int in_h = input.height(), in_w = input.width();
  const int out_h = conv_output_dim(in_h, k, stride, padding);
  const int out_w = conv_output_dim(in_w, k, stride, padding);
  Tensor out({channels, out_h, out_w});
  const auto in_plane = static_cast<std::ptrdiff_t>(in_h) * in_w;
  const auto out_plane = static_cast<std::ptrdiff_t>(out_h) * out_w;
  // Planes are tiny and channels many, so work channel-innermost on a
  // zero-padded (H, W, C) copy.
  const int ph = in_h + 2 * padding, pw = in_w + 2 * padding;
  const auto ch = static_cast<std::ptrdiff_t>(channels);
  std::vector<float> hwc(static_cast<std::size_t>(ph * pw) * channels, 0.0f);
  const float* in = input.data().data();
  for (int y = 0; y < in_h; ++y) {
    for (int x = 0; x < in_w; ++x) {
      float* dst = hwc.data() + ((y + padding) * pw + x + padding) * ch;
      const float* src = in + y * in_w + x;
      for (std::ptrdiff_t c = 0; c < ch; ++c) dst[c] = src[c * in_plane];
    }
  }
  std::vector<float> taps(static_cast<std::size_t>(k * k) * channels);
  for (std::ptrdiff_t c = 0; c < ch; ++c) {
    for (int t = 0; t < k * k; ++t) taps[static_cast<std::size_t>(t * ch + c)] = kernel.data()[static_cast<std::size_t>(c * k * k + t)];
  }
  std::vector<float> acc(static_cast<std::size_t>(channels));
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      if (bias.empty()) {
        std::fill(acc.begin(), acc.end(), 0.0f);
      } else {
        std::copy(bias.begin(), bias.end(), acc.begin());
      }
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const float* src = hwc.data() + ((oy * stride + ky) * pw + ox * stride + kx) * ch;
          const float* wt = taps.data() + (ky * k + kx) * ch;
          for (std::ptrdiff_t c = 0; c < ch; ++c) acc[static_cast<std::size_t>(c)] += wt[c] * src[c];
        }
      }
      float* o = out.data().data() + oy * out_w + ox;
      for (std::ptrdiff_t c = 0; c < ch; ++c) o[c * out_plane] = acc[static_cast<std::size_t>(c)];
    }
  }
  return out;
}

// y = W x + b with W stored (out, in).
inline Tensor fully_connected(std::span<const float> input, const Tensor& weight,
                              std::span<const float> bias,
                              std::string_view layer = "fully_connected") {
  detail::require(weight.rank() == 2, layer, "weight must be (out, in)");
  const int n_out = weight.dim(0), n_in = weight.dim(1);
  detail::require(static_cast<int>(input.size()) == n_in, layer,
                  "input length " + std::to_string(input.size()) + " does not match " +
                      std::to_string(n_in));
  detail::require(bias.empty() || static_cast<int>(bias.size()) == n_out, layer,
                  "bias length does not match output dimension");
  Tensor out({n_out});
  Eigen::Map<Eigen::VectorXf> y(out.data().data(), n_out);
  y.noalias() = detail::ConstMatrixMap(weight.data().data(), n_out, n_in) *
                Eigen::Map<const Eigen::VectorXf>(input.data(), n_in);
  if (!bias.empty()) y += Eigen::Map<const Eigen::VectorXf>(bias.data(), n_out);
  return out;
}

inline float relu6(float x) { return std::min(std::max(x, 0.0f), 6.0f); }
inline float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

inline void activate_inplace(Tensor& t, Activation kind, std::string_view layer = "activation") {
  auto v = t.data();
  switch (kind) {
    case Activation::kNone:
      return;
    case Activation::kRelu6:
      for (float& x : v) x = relu6(x);
      return;
    case Activation::kSigmoid:
      for (float& x : v) x = sigmoid(x);
      return;
    case Activation::kSoftmax: {
      detail::require(t.rank() == 1, layer, "softmax applies to vectors only");
      const float peak = *std::max_element(v.begin(), v.end());
      float total = 0.0f;
      for (float& x : v) {
        x = std::exp(x - peak);
        total += x;
      }
      for (float& x : v) x /= total;
      return;
    }
  }
}

inline Tensor activation(Tensor input, Activation kind, std::string_view layer = "activation") {
  activate_inplace(input, kind, layer);
  return input;
}

struct InvertedResidualParams {
  Tensor expand_weight;     // (C_in * expand, C_in, 1, 1)
  std::vector<float> expand_bias;
  Tensor depthwise_weight;  // (C_in * expand, 1, 3, 3)
  std::vector<float> depthwise_bias;
  Tensor project_weight;    // (C_out, C_in * expand, 1, 1)
  std::vector<float> project_bias;
};

// expand 1x1 (relu6) -> depthwise 3x3 (relu6) -> project 1x1 (linear), with a
// skip connection iff stride == 1 and C_in == C_out.
inline Tensor inverted_residual(const Tensor& input, const InvertedResidualParams& p, int stride,
                                int expand, std::string_view block = "inverted_residual") {
  const std::string name(block);
  detail::require(input.rank() == 3, name, "input must be (C, H, W)");
  const int c_in = input.channels();
  detail::require(p.expand_weight.rank() == 4 && p.expand_weight.dim(0) == c_in * expand &&
                      p.expand_weight.dim(1) == c_in && p.expand_weight.dim(2) == 1,
                  name, "expand weight " + shape_string(p.expand_weight.shape()) +
                            " does not match input channels " + std::to_string(c_in) +
                            " x expand " + std::to_string(expand));
  detail::require(p.depthwise_weight.rank() == 4 && p.depthwise_weight.dim(0) == c_in * expand &&
                      p.depthwise_weight.dim(2) == 3,
                  name, "depthwise weight has the wrong shape");
  detail::require(p.project_weight.rank() == 4 && p.project_weight.dim(1) == c_in * expand &&
                      p.project_weight.dim(2) == 1,
                  name, "project weight has the wrong shape");

  Tensor h = conv2d(input, p.expand_weight, p.expand_bias, 1, 0, name + ".expand");
  activate_inplace(h, Activation::kRelu6);
  h = depthwise_conv2d(h, p.depthwise_weight, p.depthwise_bias, stride, 1, name + ".depthwise");
  activate_inplace(h, Activation::kRelu6);
  Tensor out = conv2d(h, p.project_weight, p.project_bias, 1, 0, name + ".project");
  if (stride == 1 && out.channels() == c_in) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += input[i];
  }
  return out;
}

}  // namespace raes::nn
