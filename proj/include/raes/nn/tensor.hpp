#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "raes/error.hpp"

namespace raes::nn {

// Layer shape or numeric failure; the message always names the layer.
class LayerError : public Error {
 public:
  LayerError(const std::string& layer, const std::string& what)
      : Error(layer + ": " + what), layer_(layer) {}
  const std::string& layer() const { return layer_; }

 private:
  std::string layer_;
};

using Shape = std::vector<int>;

inline std::size_t shape_elements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
}

inline std::string shape_string(const Shape& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

// Dense row-major float tensor. Activations are (C, H, W) or (N,); kernels are
// (C_out, C_in, k, k) and fully connected weights (out, in).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f)
      : shape_(std::move(shape)), data_(shape_elements(shape_), fill) {}
  Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_elements(shape_)) {
      throw InvalidArgument("tensor data length does not match shape " + shape_string(shape_));
    }
  }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return data_.size(); }

  // (C, H, W) accessors; a vector (N,) reads as N x 1 x 1.
  int channels() const { return shape_.empty() ? 0 : shape_[0]; }
  int height() const { return shape_.size() >= 2 ? shape_[1] : 1; }
  int width() const { return shape_.size() >= 3 ? shape_[2] : 1; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  std::vector<float>& values() { return data_; }
  const std::vector<float>& values() const { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  float& at(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * height() + y) * width() + x];
  }
  float at(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * height() + y) * width() + x];
  }

  bool all_finite() const {
    for (float v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  Tensor reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<float> data_;
};

}  // namespace raes::nn
