#include <gtest/gtest.h>

#include <random>

#include "galab/error.hpp"
#include "galab/replay_buffer.hpp"

using galab::ReplayBuffer;
using galab::Transition;

namespace {

Transition tr(double v) { return {{v, -v}, {v / 10}, v, {v + 1, 0}, 0.0}; }

}  // namespace

TEST(ReplayBuffer, FifoEviction) {
  ReplayBuffer buf(2, 1, 3);
  for (int i = 0; i < 5; ++i) buf.push(tr(i));
  EXPECT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf.capacity(), 3u);
  EXPECT_EQ(buf.at(0).r, 2.0);
  EXPECT_EQ(buf.at(1).r, 3.0);
  EXPECT_EQ(buf.at(2).r, 4.0);
  EXPECT_EQ(buf.at(2).s2[0], 5.0);
}

TEST(ReplayBuffer, RejectsBadTransitions) {
  ReplayBuffer buf(2, 1, 10);
  auto t = tr(1);
  t.d = 0.5;
  EXPECT_THROW(buf.push(t), galab::Error);
  t = tr(1);
  t.s.push_back(0);
  try {
    buf.push(t);
    FAIL();
  } catch (const galab::Error& e) {
    EXPECT_EQ(e.code(), galab::ErrorCode::ShapeMismatch);
  }
  t = tr(1);
  t.r = std::nan("");
  EXPECT_THROW(buf.push(t), galab::Error);
  EXPECT_EQ(buf.size(), 0u);
}

TEST(ReplayBuffer, SampleIsDeterministicAndShaped) {
  ReplayBuffer buf(2, 1, 100);
  for (int i = 0; i < 50; ++i) buf.push(tr(i));
  std::mt19937_64 r1(5), r2(5);
  const auto a = buf.sample(32, r1), b = buf.sample(32, r2);
  EXPECT_EQ(a.size(), 32);
  EXPECT_EQ(a.s.rows(), 2);
  EXPECT_EQ(a.a.rows(), 1);
  EXPECT_EQ(a.r, b.r);
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    EXPECT_EQ(a.s(0, j), a.r(j));
    EXPECT_EQ(a.s2(0, j), a.r(j) + 1);
  }
}

TEST(ReplayBuffer, SamplingIsUniform) {
  ReplayBuffer buf(2, 1, 10);
  for (int i = 0; i < 13; ++i) buf.push(tr(i));
  std::mt19937_64 rng(6);
  std::vector<int> counts(13, 0);
  constexpr int kDraws = 200000;
  const auto batch = buf.sample(kDraws, rng);
  for (Eigen::Index j = 0; j < batch.size(); ++j) ++counts[static_cast<std::size_t>(batch.r(j))];
  for (int i = 0; i < 3; ++i) EXPECT_EQ(counts[static_cast<std::size_t>(i)], 0);
  // Chi-square with 9 degrees of freedom; 0.999 quantile is 27.9.
  double chi2 = 0;
  const double expected = kDraws / 10.0;
  for (int i = 3; i < 13; ++i) chi2 += (counts[static_cast<std::size_t>(i)] - expected) * (counts[static_cast<std::size_t>(i)] - expected) / expected;
  EXPECT_LT(chi2, 27.9);
}

TEST(ReplayBuffer, EmptySampleThrows) {
  ReplayBuffer buf(1, 1, 4);
  std::mt19937_64 rng(1);
  EXPECT_THROW(buf.sample(1, rng), galab::Error);
}
