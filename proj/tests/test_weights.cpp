#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <limits>

#include "raes/nn/model.hpp"
#include "raes/nn/weights.hpp"
#include "support/oracles.hpp"

using namespace raes;
using namespace raes::nn;

namespace {

// Writes a bundle through the independent byte writer, optionally letting
// the caller tamper with individual tensors on the way.
template <typename Edit>
std::vector<std::uint8_t> write_with(const WeightBundle& b, Edit edit) {
  oracle::RaesWriter w;
  w.magic().u32(1).raw(b.fingerprint().data(), 32).u32(static_cast<std::uint32_t>(b.size()));
  for (const auto& name : b.names()) {
    std::string n = name;
    std::vector<int> dims = b.get(name).shape();
    std::vector<float> data = b.get(name).values();
    std::uint8_t dtype = 0;
    edit(n, dims, data, dtype);
    w.tensor(n, dims, data, dtype);
  }
  return w.bytes();
}

std::vector<std::uint8_t> write_plain(const WeightBundle& b) {
  return write_with(b, [](auto&, auto&, auto&, auto&) {});
}

WeightErrc load_error(std::span<const std::uint8_t> bytes, std::string* tensor = nullptr) {
  try {
    (void)load_weights(bytes);
  } catch (const WeightFormatError& e) {
    if (tensor) *tensor = e.tensor();
    return e.code();
  }
  ADD_FAILURE() << "load succeeded";
  return WeightErrc::kIo;
}

}  // namespace

TEST(Weights, SerializerMatchesIndependentWriter) {
  const auto bundle = make_random_bundle(5);
  EXPECT_EQ(serialize_weights(bundle), write_plain(bundle));
}

TEST(Weights, HeaderLayout) {
  const auto bytes = serialize_weights(make_zero_bundle());
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "RAES");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5] | bytes[6] | bytes[7], 0);
  const auto fp = architecture_fingerprint(layer_table());
  EXPECT_TRUE(std::equal(fp.begin(), fp.end(), bytes.begin() + 8));
  std::uint32_t count;
  std::memcpy(&count, bytes.data() + 40, 4);
  EXPECT_EQ(count, tensor_specs(layer_table()).size());
}

TEST(Weights, RoundTripIsBitExact) {
  const auto bundle = make_random_bundle(6);
  const auto loaded = load_weights(serialize_weights(bundle));
  ASSERT_EQ(loaded.names(), bundle.names());
  for (const auto& name : bundle.names()) {
    const auto& a = bundle.get(name);
    const auto& b = loaded.get(name);
    ASSERT_EQ(a.shape(), b.shape());
    EXPECT_EQ(std::memcmp(a.data().data(), b.data().data(), a.size() * 4), 0) << name;
  }
  EXPECT_EQ(loaded.fingerprint(), bundle.fingerprint());
}

TEST(Weights, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "raes_weights_roundtrip.raes";
  const auto bundle = make_random_bundle(7);
  save_weights_file(path, bundle);
  EXPECT_EQ(read_file_bytes(path), serialize_weights(bundle));
  EXPECT_EQ(load_weights_file(path).get("stem.weight"), bundle.get("stem.weight"));
  std::filesystem::remove(path);
  try {
    (void)load_weights_file(path);
    FAIL();
  } catch (const WeightFormatError& e) {
    EXPECT_EQ(e.code(), WeightErrc::kIo);
  }
}

TEST(Weights, BadMagic) {
  auto bytes = serialize_weights(make_zero_bundle());
  bytes[0] = 'X';
  EXPECT_EQ(load_error(bytes), WeightErrc::kBadMagic);
  EXPECT_EQ(load_error(std::vector<std::uint8_t>{'R', 'A'}), WeightErrc::kBadMagic);
  try {
    (void)load_weights(bytes);
  } catch (const WeightFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("bad magic"), std::string::npos);
  }
}

TEST(Weights, BadVersion) {
  auto bytes = serialize_weights(make_zero_bundle());
  bytes[4] = 2;
  EXPECT_EQ(load_error(bytes), WeightErrc::kBadVersion);
}

TEST(Weights, Truncation) {
  const auto bytes = serialize_weights(make_random_bundle(1));
  for (std::size_t cut : {std::size_t{6}, std::size_t{30}, std::size_t{44}, std::size_t{100}, bytes.size() - 1}) {
    EXPECT_EQ(load_error(std::span(bytes).first(cut)), WeightErrc::kTruncated) << cut;
  }
}

TEST(Weights, TrailingBytes) {
  auto bytes = serialize_weights(make_zero_bundle());
  bytes.push_back(0);
  EXPECT_EQ(load_error(bytes), WeightErrc::kTrailingBytes);
}

TEST(Weights, PermutedDimsAreShapeMismatchNamingTensor) {
  const auto bytes = write_with(make_random_bundle(2), [](auto& name, auto& dims, auto&, auto&) {
    if (name == "mask.fc1.weight") std::swap(dims[0], dims[1]);
  });
  std::string tensor;
  EXPECT_EQ(load_error(bytes, &tensor), WeightErrc::kShapeMismatch);
  EXPECT_EQ(tensor, "mask.fc1.weight");
}

TEST(Weights, UnsupportedDtype) {
  const auto bytes = write_with(make_zero_bundle(), [](auto& name, auto&, auto&, auto& dtype) {
    if (name == "gate.bias") dtype = 1;
  });
  std::string tensor;
  EXPECT_EQ(load_error(bytes, &tensor), WeightErrc::kUnsupportedDtype);
  EXPECT_EQ(tensor, "gate.bias");
}

TEST(Weights, DuplicateTensor) {
  const auto bytes = write_with(make_zero_bundle(), [](auto& name, auto& dims, auto& data, auto&) {
    if (name == "stem.bias") {
      name = "stem.weight";
      dims = {16, 2, 3, 3};
      data.assign(16 * 2 * 9, 0.0f);
    }
  });
  EXPECT_EQ(load_error(bytes), WeightErrc::kDuplicateTensor);
}

TEST(Weights, MissingAndUnexpectedTensors) {
  const auto renamed = write_with(make_zero_bundle(), [](auto& name, auto&, auto&, auto&) {
    if (name == "dtd.fc2.bias") name = "dtd.fc3.bias";
  });
  std::string tensor;
  EXPECT_EQ(load_error(renamed, &tensor), WeightErrc::kMissingTensor);
  EXPECT_EQ(tensor, "dtd.fc2.bias");

  auto extra = make_zero_bundle();
  extra.add("spare.weight", Tensor({2}));
  EXPECT_EQ(load_error(serialize_weights(extra), &tensor), WeightErrc::kUnexpectedTensor);
  EXPECT_EQ(tensor, "spare.weight");
}

TEST(Weights, FingerprintMismatch) {
  auto bytes = serialize_weights(make_zero_bundle());
  bytes[8] ^= 0xff;
  EXPECT_EQ(load_error(bytes), WeightErrc::kFingerprintMismatch);
}

TEST(Weights, NonFiniteValues) {
  const auto bytes = write_with(make_zero_bundle(), [](auto& name, auto&, auto& data, auto&) {
    if (name == "irb2.project.weight") data[3] = std::numeric_limits<float>::infinity();
  });
  std::string tensor;
  EXPECT_EQ(load_error(bytes, &tensor), WeightErrc::kNonFinite);
  EXPECT_EQ(tensor, "irb2.project.weight");
}

TEST(Weights, RandomBundleIsSeedDeterministic) {
  EXPECT_EQ(serialize_weights(make_random_bundle(9)), serialize_weights(make_random_bundle(9)));
  EXPECT_NE(serialize_weights(make_random_bundle(9)), serialize_weights(make_random_bundle(10)));
}
