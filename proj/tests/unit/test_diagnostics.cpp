#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "galab/diagnostics.hpp"
#include "galab/envs.hpp"
#include "galab/error.hpp"
#include "galab/ga_operator.hpp"
#include "oracles.hpp"

using galab::ActivationSpec;
using galab::NoiseModel;

TEST(MeasureBias, PerfectCriticOnBandit) {
  galab::ContinuousBandit env(0.3);
  const galab::BatchPolicy policy = [](const Eigen::MatrixXd& s) { return Eigen::MatrixXd::Constant(1, s.cols(), 0.55); };
  const galab::BatchCritic critic = [&](const Eigen::MatrixXd&, const Eigen::MatrixXd& a) {
    Eigen::VectorXd q(a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j) q(j) = env.q_star(a(0, j));
    return q;
  };
  const std::vector<std::vector<double>> starts(5, std::vector<double>{1.0});
  const auto b = galab::measure_bias(100, critic, policy, env, starts, 10, 0.99);
  EXPECT_EQ(b.step, 100);
  EXPECT_NEAR(b.bias, 0.0, 1e-15);
  EXPECT_NEAR(b.true_value, -0.0625, 1e-15);
}

TEST(MeasureBias, OverestimatingCriticHasPositiveBias) {
  galab::PointMass1D env;
  const galab::BatchPolicy policy = [](const Eigen::MatrixXd& s) { return Eigen::MatrixXd::Zero(1, s.cols()); };
  const galab::BatchCritic critic = [](const Eigen::MatrixXd& s, const Eigen::MatrixXd&) {
    return Eigen::VectorXd::Constant(s.cols(), 1.0);
  };
  std::vector<std::vector<double>> starts;
  for (std::uint64_t k = 0; k < 4; ++k) starts.push_back(env.reset(k));
  EXPECT_GT(galab::measure_bias(1, critic, policy, env, starts, 1, 0.99).bias, 1.0);
}

TEST(BiasMonitor, Cadence) {
  const galab::BiasMonitor m;
  EXPECT_EQ(m.cadence(), 10000);
  EXPECT_FALSE(m.due(0));
  EXPECT_FALSE(m.due(9999));
  EXPECT_TRUE(m.due(10000));
  const galab::BiasMonitor slow(100000);
  EXPECT_FALSE(slow.due(10000));
  EXPECT_TRUE(slow.due(100000));
  EXPECT_THROW(galab::BiasMonitor(0), galab::Error);
}

TEST(SyntheticBias, NoiselessGivesAnalyticGaps) {
  NoiseModel m;
  m.true_q = {0.1, 0.4, 0.9, 0.2};
  m.eta = 0.0;
  m.trials = 10;
  const auto spec = ActivationSpec::polynomial(0.05, 2, 2);
  const auto r = galab::synthetic_bias_ordering(m, spec, 1);
  EXPECT_EQ(r.bias_max_single, 0.0);
  const double bound = 0.9;
  const double shift = bound + 1;
  const double ga = oracle::uniform_weighted_mean(m.true_q, [&](long double x) {
    return 0.05L * (x + shift) * (x + shift) + 2;
  });
  EXPECT_NEAR(r.bias_ga_single, ga - 0.9, 1e-12);
  EXPECT_NEAR(r.bias_ga_min_pair, ga - 0.9, 1e-12);
  EXPECT_TRUE(r.orderings_ok);
}

TEST(SyntheticBias, ZeroLandscapeMatchesOrderStatistic) {
  NoiseModel m;
  m.true_q.assign(16, 0.0);
  m.eta = 1.0;
  m.trials = 100000;
  const auto r = galab::synthetic_bias_ordering(m, ActivationSpec::constant(1.0), 2);
  const double expected = oracle::expected_max_of_normals(16);
  EXPECT_NEAR(expected, 1.766, 1e-3);
  EXPECT_NEAR(r.bias_max_single, expected, 3 * r.se_max_single);
  EXPECT_NEAR(r.bias_ga_single, 0.0, 3 * r.se_ga_single);
}

TEST(SyntheticBias, UniformLandscapeOrdering) {
  std::mt19937_64 rng(3);
  NoiseModel m;
  m.true_q = oracle::uniform_vector(rng, 16, 0, 1);
  m.eta = 0.5;
  m.trials = 100000;
  const auto r = galab::synthetic_bias_ordering(m, ActivationSpec::polynomial(0.05, 2, 2), 4);
  EXPECT_TRUE(r.orderings_ok);
  EXPECT_GT(r.bias_max_single, r.bias_ga_single);
  EXPECT_GT(r.bias_ga_single, r.bias_ga_min_pair);
}

TEST(SyntheticBias, Deterministic) {
  NoiseModel m;
  m.true_q = {0.0, 0.5, 1.0};
  m.trials = 5000;
  const auto spec = ActivationSpec::tanh(1.0, 1.0);
  const auto a = galab::synthetic_bias_ordering(m, spec, 9), b = galab::synthetic_bias_ordering(m, spec, 9);
  EXPECT_EQ(a.bias_ga_min_pair, b.bias_ga_min_pair);
  EXPECT_EQ(a.bias_max_single, b.bias_max_single);
}

TEST(SyntheticBias, InvalidModel) {
  NoiseModel m;
  EXPECT_THROW(galab::synthetic_bias_ordering(m, ActivationSpec::constant(1), 1), galab::Error);
  m.true_q = {1.0};
  m.eta = -1;
  EXPECT_THROW(galab::synthetic_bias_ordering(m, ActivationSpec::constant(1), 1), galab::Error);
}

TEST(SyntheticBiasProperty, GaNeverExceedsMaxPerDraw) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  const auto spec = galab::with_domain_shift(ActivationSpec::polynomial(0.05, 2, 2), 10);
  for (int t = 0; t < 5000; ++t) {
    std::vector<double> q(16);
    for (auto& x : q) x = std::clamp(0.5 + n(rng), -9.0, 9.0);
    const auto land = galab::QLandscape::uniform(q);
    EXPECT_LE(galab::ga_discrete(land, spec), land.max_q());
  }
}

TEST(SyntheticBiasProperty, ConstantActivationMeanIsUnbiased) {
  NoiseModel m;
  m.true_q = {0.3, 0.3, 0.3, 0.3};
  m.eta = 0.7;
  m.critics = 1;
  for (long trials : {1000L, 100000L}) {
    m.trials = trials;
    const auto r = galab::synthetic_bias_ordering(m, ActivationSpec::constant(1), 6);
    EXPECT_NEAR(r.bias_ga_single, 0.0, 3 * r.se_ga_single);
  }
}
