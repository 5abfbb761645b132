#include <gtest/gtest.h>

#include <random>

#include "raes/labels.hpp"
#include "support/oracles.hpp"

using namespace raes;

namespace {

// Activity pattern on a grid of 64-sample blocks: a window [64l, 64l + 128)
// covers blocks l and l + 1, so it is active iff either block is.
struct Pattern {
  std::vector<bool> s_blocks, y_blocks;
  std::vector<float> s, y;
};

Pattern make_pattern(std::uint64_t seed, std::size_t blocks) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution on(0.45);
  Pattern p;
  p.s_blocks.resize(blocks);
  p.y_blocks.resize(blocks);
  const auto ns = oracle::white_noise(blocks * 64, seed + 1, 0.1);
  const auto ny = oracle::white_noise(blocks * 64, seed + 2, 0.1);
  p.s.assign(blocks * 64, 0.0f);
  p.y.assign(blocks * 64, 0.0f);
  for (std::size_t b = 0; b < blocks; ++b) {
    p.s_blocks[b] = on(rng);
    p.y_blocks[b] = on(rng);
    for (std::size_t n = b * 64; n < (b + 1) * 64; ++n) {
      if (p.s_blocks[b]) p.s[n] = ns[n];
      if (p.y_blocks[b]) p.y[n] = ny[n];
    }
  }
  return p;
}

DtdLabel rule(bool s_active, bool s_quiet, bool y_active, bool y_quiet) {
  if (y_quiet && s_active) return DtdLabel::kNearEndSingle;
  if (s_quiet && y_active) return DtdLabel::kFarEndSingle;
  return DtdLabel::kDoubleTalk;
}

double oracle_max(const std::vector<float>& x, std::size_t start) {
  double m = 0.0;
  for (const auto& c : oracle::frame_dft(x, start)) m = std::max(m, std::abs(c));
  return m;
}

}  // namespace

TEST(DtdLabels, ConstructedPatternsMatchRuleOnEveryFrame) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = make_pattern(seed * 7, 200);
    const auto act = frame_activity(p.s, p.y);
    ASSERT_EQ(act.labels.size(), 199u);
    for (std::size_t l = 0; l < act.labels.size(); ++l) {
      const bool s_on = p.s_blocks[l] || p.s_blocks[l + 1];
      const bool y_on = p.y_blocks[l] || p.y_blocks[l + 1];
      ASSERT_EQ(act.labels[l], rule(s_on, !s_on, y_on, !y_on)) << "seed " << seed << " frame " << l;
      ASSERT_EQ(act.mutual_silence[l], !s_on && !y_on);
    }
  }
}

TEST(DtdLabels, NearThresholdLevelsFollowDirectTransform) {
  // Sinusoids scaled around the 0.001 bin-magnitude threshold.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> level(0.5e-5, 5e-5);
  std::vector<float> s(64 * 120), y(64 * 120);
  for (std::size_t b = 0; b < 120; ++b) {
    const double as = level(rng), ay = level(rng);
    for (std::size_t n = b * 64; n < (b + 1) * 64; ++n) {
      s[n] = static_cast<float>(as * std::sin(0.3 * n));
      y[n] = static_cast<float>(ay * std::sin(1.1 * n + 0.5));
    }
  }
  const auto labels = dtd_labels(oracle::signal(s), oracle::signal(y));
  int counts[3] = {0, 0, 0};
  for (std::size_t l = 0; l < labels.size(); ++l) {
    const double ms = oracle_max(s, l * 64), my = oracle_max(y, l * 64);
    const DtdLabel want = rule(ms > 0.001, ms < 0.001, my > 0.001, my < 0.001);
    ASSERT_EQ(labels[l], want) << l;
    ++counts[static_cast<int>(want)];
  }
  // The level range actually exercises every class.
  EXPECT_GT(counts[0], 0);
  EXPECT_GT(counts[1], 0);
  EXPECT_GT(counts[2], 0);
}

TEST(DtdLabels, SimpleCases) {
  const auto speech = oracle::white_noise(1024, 1, 0.1);
  const std::vector<float> zeros(1024, 0.0f);
  for (auto l : dtd_labels(oracle::signal(speech), oracle::signal(zeros))) EXPECT_EQ(l, DtdLabel::kNearEndSingle);
  for (auto l : dtd_labels(oracle::signal(zeros), oracle::signal(speech))) EXPECT_EQ(l, DtdLabel::kFarEndSingle);
  for (auto l : dtd_labels(oracle::signal(speech), oracle::signal(speech))) EXPECT_EQ(l, DtdLabel::kDoubleTalk);
  const auto silent = frame_activity(zeros, zeros);
  for (std::size_t l = 0; l < silent.labels.size(); ++l) {
    EXPECT_EQ(silent.labels[l], DtdLabel::kDoubleTalk);
    EXPECT_TRUE(silent.mutual_silence[l]);
  }
  EXPECT_THROW(frame_activity(speech, std::span<const float>(zeros).first(1000)), InvalidArgument);
}

TEST(DtdLabels, SampleOwnershipIsCentralHop) {
  const std::vector<DtdLabel> labels{DtdLabel::kNearEndSingle, DtdLabel::kFarEndSingle, DtdLabel::kDoubleTalk};
  const auto mask = label_sample_mask(labels, 300, DtdLabel::kFarEndSingle);
  for (std::size_t n = 0; n < 300; ++n) {
    // Frame 1 owns [96, 160).
    EXPECT_EQ(mask[n], n >= 96 && n < 160) << n;
  }
  const auto first = label_sample_mask(labels, 300, DtdLabel::kNearEndSingle);
  for (std::size_t n = 0; n < 300; ++n) EXPECT_EQ(first[n], n < 96) << n;
  const auto last = label_sample_mask(labels, 300, DtdLabel::kDoubleTalk);
  for (std::size_t n = 0; n < 300; ++n) EXPECT_EQ(last[n], n >= 160) << n;
  EXPECT_TRUE(label_sample_mask({}, 10, DtdLabel::kDoubleTalk) == std::vector<bool>(10, false));
}

TEST(DtdLabels, RunLengthRoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> v(0, 2), len(1, 9);
  std::vector<DtdLabel> labels;
  for (int i = 0; i < 100; ++i) labels.insert(labels.end(), static_cast<std::size_t>(len(rng)), static_cast<DtdLabel>(v(rng)));
  const auto runs = run_length_encode(labels);
  for (std::size_t i = 1; i < runs.size(); ++i) EXPECT_NE(runs[i].first, runs[i - 1].first);
  EXPECT_EQ(run_length_decode(runs), labels);
  const std::vector<std::pair<int, std::size_t>> bad{{3, 1}};
  EXPECT_THROW(run_length_decode(bad), InvalidArgument);
}
