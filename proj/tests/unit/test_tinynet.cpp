#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "galab/error.hpp"
#include "galab/tinynet.hpp"
#include "oracles.hpp"

using galab::Mlp;
using galab::OutputActivation;

namespace {

double rel_error(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6}); }

Mlp random_net(std::uint64_t seed, OutputActivation out = OutputActivation::Identity) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> width(2, 9), depth(1, 3);
  std::vector<int> sizes{width(rng)};
  const int hidden = depth(rng);
  for (int i = 0; i < hidden; ++i) sizes.push_back(width(rng));
  sizes.push_back(out == OutputActivation::Identity ? 1 + static_cast<int>(seed % 3) : 2);
  if (out == OutputActivation::ScaledTanh) return Mlp(sizes, out, seed, {-1.0, 0.0}, {1.0, 3.0});
  return Mlp(sizes, out, seed);
}

// Scalar objective upstream . net(x) evaluated through the public API.
double objective(const Mlp& net, const Eigen::VectorXd& x, const Eigen::VectorXd& up) {
  return up.dot(net.forward(x));
}

// Pre-activations of every hidden unit; a finite-difference probe is only
// meaningful when none of them changes sign across +-h.
bool relu_pattern_stable(const Mlp& a, const Mlp& b, const Eigen::VectorXd& xa, const Eigen::VectorXd& xb) {
  Eigen::VectorXd ha = xa, hb = xb;
  for (int l = 0; l + 1 < a.num_layers(); ++l) {
    const Eigen::VectorXd za = a.weights()[l] * ha + a.biases()[l];
    const Eigen::VectorXd zb = b.weights()[l] * hb + b.biases()[l];
    for (Eigen::Index i = 0; i < za.size(); ++i) {
      if ((za(i) > 0) != (zb(i) > 0)) return false;
    }
    ha = za.cwiseMax(0.0);
    hb = zb.cwiseMax(0.0);
  }
  return true;
}

}  // namespace

TEST(Mlp, ZeroNetOutputsOutputBias) {
  Mlp net = Mlp::zeros({3, 5, 2}, OutputActivation::Identity);
  net.biases().back() << 0.25, -1.5;
  const auto y = net.forward(Eigen::Vector3d(1, -2, 3));
  EXPECT_EQ(y(0), 0.25);
  EXPECT_EQ(y(1), -1.5);
}

TEST(Mlp, IdentityOneByOne) {
  Mlp net = Mlp::zeros({1, 1}, OutputActivation::Identity);
  net.weights()[0](0, 0) = 1.0;
  EXPECT_EQ(net.forward(Eigen::VectorXd::Constant(1, 2.0))(0), 2.0);
}

TEST(Mlp, SeededForwardIsBitIdentical) {
  const Mlp a({4, 16, 16, 1}, OutputActivation::Identity, 42);
  const Mlp b({4, 16, 16, 1}, OutputActivation::Identity, 42);
  const Mlp c({4, 16, 16, 1}, OutputActivation::Identity, 43);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 7);
  EXPECT_EQ(a.flatten(), b.flatten());
  EXPECT_NE(a.flatten(), c.flatten());
  const Eigen::MatrixXd ya = a.forward_batch(x), yb = b.forward_batch(x);
  for (Eigen::Index j = 0; j < 7; ++j) EXPECT_EQ(ya(0, j), yb(0, j));
}

TEST(Mlp, FanInInitializationRange) {
  const Mlp net({9, 25, 1}, OutputActivation::Identity, 1);
  EXPECT_LE(net.weights()[0].cwiseAbs().maxCoeff(), 1.0 / 3.0);
  EXPECT_LE(net.weights()[1].cwiseAbs().maxCoeff(), 1.0 / 5.0);
}

TEST(Mlp, ShapeMismatchAndNonFinite) {
  const Mlp net({3, 4, 1}, OutputActivation::Identity, 2);
  try {
    net.forward(Eigen::VectorXd::Zero(2));
    FAIL();
  } catch (const galab::Error& e) {
    EXPECT_EQ(e.code(), galab::ErrorCode::ShapeMismatch);
  }
  Mlp big = Mlp::zeros({1, 1}, OutputActivation::Identity);
  big.weights()[0](0, 0) = 1e308;
  try {
    big.forward(Eigen::VectorXd::Constant(1, 1e10));
    FAIL();
  } catch (const galab::Error& e) {
    EXPECT_EQ(e.code(), galab::ErrorCode::NonFiniteActivation);
  }
}

TEST(Mlp, BatchMatchesSingle) {
  const Mlp net({3, 8, 8, 2}, OutputActivation::Identity, 3);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 11);
  const Eigen::MatrixXd y = net.forward_batch(x);
  for (Eigen::Index j = 0; j < 11; ++j) {
    const Eigen::VectorXd yj = net.forward(x.col(j));
    EXPECT_NEAR((y.col(j) - yj).cwiseAbs().maxCoeff(), 0.0, 1e-14);
  }
}

TEST(Mlp, ForwardRepeatedMatchesExpandedInput) {
  const Mlp net({5, 12, 12, 1}, OutputActivation::Identity, 4);
  const Eigen::MatrixXd lead = Eigen::MatrixXd::Random(3, 4);
  const Eigen::MatrixXd trail = Eigen::MatrixXd::Random(2, 4 * 6);
  Eigen::MatrixXd full(5, 24);
  for (int j = 0; j < 4; ++j)
    for (int k = 0; k < 6; ++k) full.col(j * 6 + k) << lead.col(j), trail.col(j * 6 + k);
  const Eigen::MatrixXd a = net.forward_repeated(lead, 6, trail);
  const Eigen::MatrixXd b = net.forward_batch(full);
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Mlp, ActorOutputsInsideBox) {
  const Mlp actor({3, 16, 2}, OutputActivation::ScaledTanh, 5, {-1.0, 0.0}, {1.0, 3.0});
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    const auto x = oracle::uniform_vector(rng, 3, -100, 100);
    const Eigen::VectorXd y = actor.forward(Eigen::Map<const Eigen::VectorXd>(x.data(), 3));
    EXPECT_GE(y(0), -1.0);
    EXPECT_LE(y(0), 1.0);
    EXPECT_GE(y(1), 0.0);
    EXPECT_LE(y(1), 3.0);
  }
}

TEST(Gradients, LinearClosedForm) {
  Mlp net = Mlp::zeros({3, 1}, OutputActivation::Identity);
  net.weights()[0] << 0.5, -2.0, 1.5;
  const Eigen::Vector3d x(1.0, 2.0, -3.0);
  const Eigen::VectorXd up = Eigen::VectorXd::Constant(1, 0.7);
  const auto g = net.grad_params(x, up);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(g.weights[0](0, i), x(i) * 0.7);
  EXPECT_DOUBLE_EQ(g.biases[0](0), 0.7);
  const Eigen::VectorXd gi = net.grad_input(x, up);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(gi(i), net.weights()[0](0, i) * 0.7);
}

TEST(Gradients, ZeroUpstreamAndZeroNet) {
  const Mlp net({3, 6, 2}, OutputActivation::Identity, 6);
  const auto g = net.grad_params(Eigen::Vector3d(1, 2, 3), Eigen::VectorXd::Zero(2));
  for (double v : g.flatten()) EXPECT_EQ(v, 0.0);
  const Mlp zero = Mlp::zeros({3, 6, 2}, OutputActivation::Identity);
  const Eigen::VectorXd gi = zero.grad_input(Eigen::Vector3d(1, 2, 3), Eigen::VectorXd::Ones(2));
  for (Eigen::Index i = 0; i < gi.size(); ++i) EXPECT_EQ(gi(i), 0.0);
}

TEST(Gradients, FiniteDifferenceParamsAndInputs) {
  constexpr double h = 1e-5;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto kind = seed % 2 ? OutputActivation::ScaledTanh : OutputActivation::Identity;
    const Mlp net = random_net(seed, kind);
    std::mt19937_64 rng(seed + 1000);
    const auto xv = oracle::uniform_vector(rng, static_cast<std::size_t>(net.input_dim()), -1, 1);
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(xv.data(), net.input_dim());
    const auto uv = oracle::uniform_vector(rng, static_cast<std::size_t>(net.output_dim()), -1, 1);
    const Eigen::VectorXd up = Eigen::Map<const Eigen::VectorXd>(uv.data(), net.output_dim());

    const auto analytic = net.grad_params(x, up).flatten();
    const auto flat = net.flatten();
    int compared = 0;
    for (std::size_t i = 0; i < flat.size(); ++i) {
      auto fp = flat, fm = flat;
      fp[i] += h;
      fm[i] -= h;
      Mlp np = net, nm = net;
      np.unflatten(fp);
      nm.unflatten(fm);
      if (!relu_pattern_stable(np, nm, x, x)) continue;
      const double numeric = (objective(np, x, up) - objective(nm, x, up)) / (2 * h);
      EXPECT_LE(rel_error(analytic[i], numeric), 1e-4) << "seed " << seed << " param " << i;
      ++compared;
    }
    EXPECT_GT(compared, static_cast<int>(flat.size()) / 2);

    const Eigen::VectorXd gi = net.grad_input(x, up);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      if (!relu_pattern_stable(net, net, xp, xm)) continue;
      const double numeric = (objective(net, xp, up) - objective(net, xm, up)) / (2 * h);
      EXPECT_LE(rel_error(gi(i), numeric), 1e-4) << "seed " << seed << " input " << i;
    }
  }
}

TEST(Gradients, BackwardBatchSumsPerSample) {
  const Mlp net({3, 7, 2}, OutputActivation::ScaledTanh, 7, {-1, -2}, {1, 2});
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 5);
  const Eigen::MatrixXd up = Eigen::MatrixXd::Random(2, 5);
  const auto bw = net.backward_batch(x, up);
  auto sum = net.zero_gradients();
  for (Eigen::Index j = 0; j < 5; ++j) {
    sum += net.grad_params(x.col(j), up.col(j));
    const Eigen::VectorXd gi = net.grad_input(x.col(j), up.col(j));
    EXPECT_LE((bw.input.col(j) - gi).cwiseAbs().maxCoeff(), 1e-13);
  }
  const auto a = bw.params.flatten(), b = sum.flatten();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Mlp net({2, 3, 1}, OutputActivation::Identity, 8);
  const auto before = net.flatten();
  galab::AdamState st(net);
  EXPECT_EQ(st.lr, 1e-3);
  auto g = net.zero_gradients();
  for (int i = 0; i < 5; ++i) galab::adam_step(st, net, g);
  EXPECT_EQ(net.flatten(), before);
  EXPECT_EQ(st.step_count(), 5);
}

TEST(Adam, MomentsDecayUnderZeroGradient) {
  Mlp net({1, 1}, OutputActivation::Identity, 9);
  galab::AdamState st(net);
  auto g = net.zero_gradients();
  g.weights[0](0, 0) = 1.0;
  galab::adam_step(st, net, g);
  const double m1 = st.first_moment().weights[0](0, 0), v1 = st.second_moment().weights[0](0, 0);
  EXPECT_NEAR(m1, 0.1, 1e-15);
  EXPECT_NEAR(v1, 0.001, 1e-15);
  g.set_zero();
  galab::adam_step(st, net, g);
  EXPECT_NEAR(st.first_moment().weights[0](0, 0), 0.9 * m1, 1e-15);
  EXPECT_NEAR(st.second_moment().weights[0](0, 0), 0.999 * v1, 1e-15);
}

TEST(Adam, ConstantGradientStepTendsToLr) {
  Mlp net = Mlp::zeros({1, 1}, OutputActivation::Identity);
  galab::AdamState st(net, 1e-3);
  auto g = net.zero_gradients();
  g.weights[0](0, 0) = 2.5;
  g.biases[0](0) = -0.3;
  double prev_w = 0.0, prev_b = 0.0;
  for (int i = 0; i < 2000; ++i) {
    galab::adam_step(st, net, g);
    const double w = net.weights()[0](0, 0), b = net.biases()[0](0);
    EXPECT_LT(w, prev_w);
    EXPECT_GT(b, prev_b);
    if (i > 100) {
      EXPECT_NEAR(prev_w - w, 1e-3, 1e-5);
      EXPECT_NEAR(b - prev_b, 1e-3, 1e-5);
    }
    prev_w = w;
    prev_b = b;
  }
}

TEST(Adam, ShapeMismatch) {
  Mlp a({2, 3, 1}, OutputActivation::Identity, 1);
  Mlp b({2, 4, 1}, OutputActivation::Identity, 1);
  galab::AdamState st(a);
  EXPECT_THROW(galab::adam_step(st, b, b.zero_gradients()), galab::Error);
}

TEST(SoftUpdate, Examples) {
  Mlp target = Mlp::zeros({1, 1}, OutputActivation::Identity);
  Mlp online = Mlp::zeros({1, 1}, OutputActivation::Identity);
  online.weights()[0](0, 0) = 1.0;
  galab::soft_update(target, online, 0.005);
  EXPECT_DOUBLE_EQ(target.weights()[0](0, 0), 0.005);

  const Mlp a({3, 5, 1}, OutputActivation::Identity, 1);
  Mlp b({3, 5, 1}, OutputActivation::Identity, 2);
  galab::soft_update(b, a, 1.0);
  EXPECT_EQ(b.flatten(), a.flatten());

  Mlp other({3, 6, 1}, OutputActivation::Identity, 2);
  try {
    galab::soft_update(other, a, 0.5);
    FAIL();
  } catch (const galab::Error& e) {
    EXPECT_EQ(e.code(), galab::ErrorCode::ArchitectureMismatch);
  }
}

TEST(SoftUpdate, ConvergesGeometrically) {
  const Mlp online({2, 4, 1}, OutputActivation::Identity, 3);
  Mlp target({2, 4, 1}, OutputActivation::Identity, 4);
  const auto o = online.flatten();
  auto t0 = target.flatten();
  double d0 = 0;
  for (std::size_t i = 0; i < o.size(); ++i) d0 = std::max(d0, std::abs(o[i] - t0[i]));
  for (int k = 1; k <= 500; ++k) {
    galab::soft_update(target, online, 0.01);
    if (k % 100 == 0) {
      const auto t = target.flatten();
      double d = 0;
      for (std::size_t i = 0; i < o.size(); ++i) d = std::max(d, std::abs(o[i] - t[i]));
      EXPECT_NEAR(d, std::pow(0.99, k) * d0, 1e-12);
    }
  }
}

TEST(Serialization, RoundTrip) {
  const Mlp net({3, 5, 2}, OutputActivation::ScaledTanh, 77, {-1, -1}, {1, 1});
  std::stringstream ss;
  galab::save_mlp(net, ss);
  const Mlp back = galab::load_mlp(ss);
  EXPECT_TRUE(back.same_architecture(net));
  EXPECT_EQ(back.flatten(), net.flatten());
  EXPECT_EQ(back.seed(), 77u);
  EXPECT_EQ(back.action_high(), net.action_high());
}

TEST(Serialization, CorruptStreamRejected) {
  std::stringstream ss("not a header\n");
  EXPECT_THROW(galab::load_mlp(ss), galab::Error);
}
