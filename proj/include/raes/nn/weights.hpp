#pragma once

// RAES weight file (little-endian, no padding):
//
//   "RAES"                          4 bytes
//   format version                  u32 (= 1)
//   architecture fingerprint        32 bytes (SHA-256 of the layer table)
//   tensor count                    u32
//   per tensor:
//     name length                   u16
//     name                          UTF-8
//     dtype                         u8 (0 = f32)
//     ndim                          u8
//     dims                          u32 x ndim
//     data                          f32 x prod(dims)

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "raes/nn/architecture.hpp"
#include "raes/nn/tensor.hpp"

namespace raes::nn {

inline constexpr std::array<char, 4> kWeightMagic = {'R', 'A', 'E', 'S'};
inline constexpr std::uint32_t kWeightFormatVersion = 1;
inline constexpr std::uint8_t kDtypeF32 = 0;

enum class WeightErrc {
  kBadMagic,
  kBadVersion,
  kTruncated,
  kTrailingBytes,
  kUnsupportedDtype,
  kFingerprintMismatch,
  kShapeMismatch,
  kDuplicateTensor,
  kMissingTensor,
  kUnexpectedTensor,
  kNonFinite,
  kIo,
};

inline const char* to_string(WeightErrc code) {
  switch (code) {
    case WeightErrc::kBadMagic: return "bad magic";
    case WeightErrc::kBadVersion: return "unsupported format version";
    case WeightErrc::kTruncated: return "truncated file";
    case WeightErrc::kTrailingBytes: return "trailing bytes after last tensor";
    case WeightErrc::kUnsupportedDtype: return "unsupported dtype";
    case WeightErrc::kFingerprintMismatch: return "architecture fingerprint mismatch";
    case WeightErrc::kShapeMismatch: return "shape mismatch";
    case WeightErrc::kDuplicateTensor: return "duplicate tensor";
    case WeightErrc::kMissingTensor: return "missing tensor";
    case WeightErrc::kUnexpectedTensor: return "unexpected tensor";
    case WeightErrc::kNonFinite: return "non-finite weight";
    case WeightErrc::kIo: return "i/o error";
  }
  return "unknown";
}

class WeightFormatError : public Error {
 public:
  WeightFormatError(WeightErrc code, std::string tensor = {}, const std::string& detail = {})
      : Error(compose(code, tensor, detail)), code_(code), tensor_(std::move(tensor)) {}

  WeightErrc code() const { return code_; }
  const std::string& tensor() const { return tensor_; }

 private:
  static std::string compose(WeightErrc code, const std::string& tensor, const std::string& detail) {
    std::string s = to_string(code);
    if (!tensor.empty()) s += " (tensor '" + tensor + "')";
    if (!detail.empty()) s += ": " + detail;
    return s;
  }

  WeightErrc code_;
  std::string tensor_;
};

// Named, immutable parameter tensors. Insertion order is preserved so that
// serialization is deterministic.
class WeightBundle {
 public:
  WeightBundle() = default;
  explicit WeightBundle(Fingerprint fingerprint, std::uint32_t version = kWeightFormatVersion)
      : version_(version), fingerprint_(fingerprint) {}

  std::uint32_t version() const { return version_; }
  const Fingerprint& fingerprint() const { return fingerprint_; }
  const std::vector<std::string>& names() const { return order_; }
  std::size_t size() const { return order_.size(); }

  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }

  const Tensor& get(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw WeightFormatError(WeightErrc::kMissingTensor, name);
    return it->second;
  }

  Tensor& mutable_tensor(const std::string& name) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw WeightFormatError(WeightErrc::kMissingTensor, name);
    return it->second;
  }

  void add(const std::string& name, Tensor tensor) {
    if (!tensors_.emplace(name, std::move(tensor)).second) {
      throw WeightFormatError(WeightErrc::kDuplicateTensor, name);
    }
    order_.push_back(name);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : tensors_) n += t.size();
    return n;
  }

 private:
  std::uint32_t version_ = kWeightFormatVersion;
  Fingerprint fingerprint_{};
  std::vector<std::string> order_;
  std::map<std::string, Tensor> tensors_;
};

namespace weights_detail {

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void need(std::size_t n, const std::string& tensor = {}) const {
    if (bytes_.size() - pos_ < n) throw WeightFormatError(WeightErrc::kTruncated, tensor);
  }
  template <typename T>
  T read(const std::string& tensor = {}) {
    need(sizeof(T), tensor);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void read_into(void* dst, std::size_t n, const std::string& tensor = {}) {
    need(n, tensor);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
void append(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

}  // namespace weights_detail

// Parses the container format only; no architecture checks.
inline WeightBundle parse_weights(std::span<const std::uint8_t> bytes) {
  weights_detail::Reader r(bytes);
  std::array<char, 4> magic{};
  if (bytes.size() < magic.size()) throw WeightFormatError(WeightErrc::kBadMagic);
  r.read_into(magic.data(), magic.size());
  if (magic != kWeightMagic) throw WeightFormatError(WeightErrc::kBadMagic);
  const auto version = r.read<std::uint32_t>();
  if (version != kWeightFormatVersion) {
    throw WeightFormatError(WeightErrc::kBadVersion, {}, "got " + std::to_string(version));
  }
  Fingerprint fp{};
  r.read_into(fp.data(), fp.size());
  const auto count = r.read<std::uint32_t>();

  WeightBundle bundle(fp, version);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.read<std::uint16_t>();
    std::string name(name_len, '\0');
    r.read_into(name.data(), name_len);
    const auto dtype = r.read<std::uint8_t>(name);
    if (dtype != kDtypeF32) {
      throw WeightFormatError(WeightErrc::kUnsupportedDtype, name, "dtype " + std::to_string(dtype));
    }
    const auto ndim = r.read<std::uint8_t>(name);
    Shape shape(ndim);
    std::size_t elements = 1;
    for (auto& d : shape) {
      const auto dim = r.read<std::uint32_t>(name);
      if (dim > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
        throw WeightFormatError(WeightErrc::kShapeMismatch, name, "dimension too large");
      }
      d = static_cast<int>(dim);
      elements *= dim;
      if (elements > r.remaining()) throw WeightFormatError(WeightErrc::kTruncated, name);
    }
    std::vector<float> data(elements);
    r.read_into(data.data(), elements * sizeof(float), name);
    if (bundle.contains(name)) throw WeightFormatError(WeightErrc::kDuplicateTensor, name);
    bundle.add(name, Tensor(std::move(shape), std::move(data)));
  }
  if (r.remaining() != 0) throw WeightFormatError(WeightErrc::kTrailingBytes);
  return bundle;
}

// Checks a parsed bundle against a layer table: fingerprint, tensor set,
// shapes and finiteness.
inline void validate_weights(const WeightBundle& bundle,
                             const std::vector<LayerSpec>& table = layer_table()) {
  if (bundle.fingerprint() != architecture_fingerprint(table)) {
    throw WeightFormatError(WeightErrc::kFingerprintMismatch, {},
                            "file " + hex(bundle.fingerprint()));
  }
  const auto specs = tensor_specs(table);
  std::set<std::string> expected;
  for (const auto& spec : specs) {
    expected.insert(spec.name);
    if (!bundle.contains(spec.name)) throw WeightFormatError(WeightErrc::kMissingTensor, spec.name);
    const Tensor& t = bundle.get(spec.name);
    if (t.shape() != spec.shape) {
      throw WeightFormatError(WeightErrc::kShapeMismatch, spec.name,
                              "expected " + shape_string(spec.shape) + ", got " +
                                  shape_string(t.shape()));
    }
    if (!t.all_finite()) throw WeightFormatError(WeightErrc::kNonFinite, spec.name);
  }
  for (const auto& name : bundle.names()) {
    if (!expected.count(name)) throw WeightFormatError(WeightErrc::kUnexpectedTensor, name);
  }
}

inline WeightBundle load_weights(std::span<const std::uint8_t> bytes,
                                 const std::vector<LayerSpec>& table = layer_table()) {
  WeightBundle bundle = parse_weights(bytes);
  validate_weights(bundle, table);
  return bundle;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightFormatError(WeightErrc::kIo, {}, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline WeightBundle load_weights_file(const std::filesystem::path& path,
                                      const std::vector<LayerSpec>& table = layer_table()) {
  const auto bytes = read_file_bytes(path);
  return load_weights(bytes, table);
}

inline std::vector<std::uint8_t> serialize_weights(const WeightBundle& bundle) {
  using weights_detail::append;
  std::vector<std::uint8_t> out(kWeightMagic.begin(), kWeightMagic.end());
  append(out, bundle.version());
  out.insert(out.end(), bundle.fingerprint().begin(), bundle.fingerprint().end());
  append(out, static_cast<std::uint32_t>(bundle.size()));
  for (const auto& name : bundle.names()) {
    const Tensor& t = bundle.get(name);
    if (name.size() > 0xffff) throw InvalidArgument("tensor name too long: " + name);
    if (t.rank() > 0xff) throw InvalidArgument("tensor rank too large: " + name);
    append(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    append(out, kDtypeF32);
    append(out, static_cast<std::uint8_t>(t.rank()));
    for (int d : t.shape()) append(out, static_cast<std::uint32_t>(d));
    const auto* p = reinterpret_cast<const std::uint8_t*>(t.data().data());
    out.insert(out.end(), p, p + t.size() * sizeof(float));
  }
  return out;
}

inline void save_weights_file(const std::filesystem::path& path, const WeightBundle& bundle) {
  const auto bytes = serialize_weights(bundle);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WeightFormatError(WeightErrc::kIo, {}, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw WeightFormatError(WeightErrc::kIo, {}, "short write to " + path.string());
}

}  // namespace raes::nn
