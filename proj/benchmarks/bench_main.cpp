#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "galab/agents.hpp"
#include "galab/envs.hpp"
#include "galab/ga_operator.hpp"
#include "galab/replay_buffer.hpp"
#include "galab/tabular_vi.hpp"
#include "galab/tinynet.hpp"

namespace {

galab::QLandscape random_landscape(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<double> q(static_cast<std::size_t>(n));
  for (auto& x : q) x = u(rng);
  return galab::QLandscape::uniform(std::move(q));
}

void BM_GaDiscrete(benchmark::State& state) {
  const auto land = random_landscape(static_cast<int>(state.range(0)), 1);
  const auto spec = galab::with_domain_shift(galab::ActivationSpec::polynomial(0.05, 2, 2), 5.0);
  for (auto _ : state) benchmark::DoNotOptimize(galab::ga_discrete(land, spec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GaDiscrete)->Arg(16)->Arg(256)->Arg(4096);

void BM_DistanceBound(benchmark::State& state) {
  const auto land = random_landscape(32, 2);
  const auto spec = galab::with_domain_shift(galab::ActivationSpec::polynomial(0.05, 2, 2), 5.0);
  const double beta = *galab::find_feasible_beta(spec, 5.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(galab::theorem1_bound(land, spec, {0.1, beta, 5.0}));
  }
}
BENCHMARK(BM_DistanceBound);

void BM_ValueIterationGa(benchmark::State& state) {
  const auto mdp = galab::TabularMdp::random(8, 4, 0.9, 1.0, 3);
  const auto spec = galab::ActivationSpec::polynomial(0.05, 2, 2);
  for (auto _ : state) benchmark::DoNotOptimize(galab::value_iterate_ga(mdp, spec, 200));
}
BENCHMARK(BM_ValueIterationGa);

void BM_MlpForward(benchmark::State& state) {
  const int h = static_cast<int>(state.range(0));
  const int batch = static_cast<int>(state.range(1));
  galab::Mlp net({4, h, h, 1}, galab::OutputActivation::Identity, 4);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, batch);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward_batch(x));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MlpForward)->Args({64, 100})->Args({64, 5000})->Args({256, 100});

void BM_MlpBackward(benchmark::State& state) {
  const int h = static_cast<int>(state.range(0));
  galab::Mlp net({4, h, h, 1}, galab::OutputActivation::Identity, 5);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 100);
  Eigen::MatrixXd up = Eigen::MatrixXd::Ones(1, 100);
  for (auto _ : state) benchmark::DoNotOptimize(net.backward_batch(x, up));
}
BENCHMARK(BM_MlpBackward)->Arg(64)->Arg(256);

galab::ReplayBuffer filled_buffer(const galab::Env& env, int n, std::uint64_t seed) {
  const auto& es = env.spec();
  galab::ReplayBuffer buf(es.state_dim, es.action_dim, static_cast<std::size_t>(n));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> s(static_cast<std::size_t>(es.state_dim));
  for (int i = 0; i < n; ++i) {
    for (auto& x : s) x = u(rng);
    std::vector<double> a(static_cast<std::size_t>(es.action_dim));
    for (auto& x : a) x = u(rng);
    const auto sim = env.simulate(s, a);
    buf.push({s, a, sim.reward, sim.next_state, 0.0});
  }
  return buf;
}

void BM_Gd3Target(benchmark::State& state) {
  galab::Pendulum env;
  const auto buf = filled_buffer(env, 1000, 6);
  galab::Mlp actor({3, 32, 32, 1}, galab::OutputActivation::ScaledTanh, 7, {-1.0}, {1.0});
  galab::Mlp c1({4, 32, 32, 1}, galab::OutputActivation::Identity, 8);
  galab::Mlp c2({4, 32, 32, 1}, galab::OutputActivation::Identity, 9);
  std::mt19937_64 rng(10);
  const auto batch = buf.sample(100, rng);
  const auto spec = galab::with_domain_shift(galab::ActivationSpec::polynomial(0.05, 2, 2), 1700.0);
  for (auto _ : state) {
    const auto noise = galab::draw_truncated_noise(50, 1, 0.2, 0.5, rng);
    benchmark::DoNotOptimize(galab::gd3_target(c1, c2, actor, batch, spec, noise, {0.99, 1700.0}));
  }
}
BENCHMARK(BM_Gd3Target);

void BM_TrainStep(benchmark::State& state) {
  galab::Pendulum env;
  const auto buf = filled_buffer(env, 2000, 11);
  galab::AgentConfig cfg;
  cfg.algorithm = static_cast<galab::Algorithm>(state.range(0));
  cfg.actor_hidden = {32, 32};
  cfg.critic_hidden = {32, 32};
  cfg.warmup_steps = 1000;
  galab::Agent agent(cfg, env.spec(), 12);
  std::mt19937_64 rng(13);
  for (auto _ : state) benchmark::DoNotOptimize(agent.train_step(buf, rng));
  state.SetLabel(std::string(galab::algorithm_name(cfg.algorithm)));
}
BENCHMARK(BM_TrainStep)->DenseRange(0, 3)->Unit(benchmark::kMicrosecond);

void BM_PendulumStep(benchmark::State& state) {
  galab::Pendulum env;
  env.reset(14);
  const std::vector<double> a{0.3};
  for (auto _ : state) {
    const auto r = env.step(a);
    if (r.done) env.reset(14);
    benchmark::DoNotOptimize(r.reward);
  }
}
BENCHMARK(BM_PendulumStep)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
