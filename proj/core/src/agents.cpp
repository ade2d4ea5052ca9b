#include "galab/agents.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>

#include "galab/error.hpp"

namespace galab {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

MatrixXd clip_box(MatrixXd a, const std::vector<double>& low, const std::vector<double>& high) {
  for (Index r = 0; r < a.rows(); ++r) {
    a.row(r) = a.row(r).cwiseMax(low[r]).cwiseMin(high[r]);
  }
  return a;
}

VectorXd clamp_values(VectorXd v, double bound) {
  return v.cwiseMax(-bound).cwiseMin(bound);
}

VectorXd bootstrap(const Batch& batch, const VectorXd& next_value, double gamma) {
  return batch.r.array() + gamma * (1.0 - batch.d.array()) * next_value.array();
}

}  // namespace

std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::DDPG: return "ddpg";
    case Algorithm::TD3: return "td3";
    case Algorithm::GD2: return "gd2";
    case Algorithm::GD3: return "gd3";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "ddpg") return Algorithm::DDPG;
  if (name == "td3") return Algorithm::TD3;
  if (name == "gd2") return Algorithm::GD2;
  if (name == "gd3") return Algorithm::GD3;
  throw Error(ErrorCode::ConfigError, "unknown algorithm '" + std::string(name) + "'");
}

void AgentConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
  for (int h : actor_hidden) if (h <= 0) fail("actor hidden sizes must be positive");
  for (int h : critic_hidden) if (h <= 0) fail("critic hidden sizes must be positive");
  if (batch_size <= 0) fail("batch_size must be positive");
  if (!(actor_lr >= 0.0) || !(critic_lr >= 0.0)) fail("learning rates must be >= 0");
  if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma must lie in [0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) fail("tau must lie in (0, 1]");
  if (!(exploration_sigma >= 0.0)) fail("exploration_sigma must be >= 0");
  if (!(target_sigma > 0.0)) fail("target_sigma must be positive");
  if (!(target_clip > 0.0)) fail("target_clip must be positive");
  if (policy_interval <= 0) fail("policy_interval must be positive");
  if (noise_count <= 0) fail("noise_count must be positive");
  if (warmup_steps < 0) fail("warmup_steps must be >= 0");
  if (buffer_capacity == 0) fail("buffer_capacity must be positive");
  if (algorithm == Algorithm::GD2 || algorithm == Algorithm::GD3) {
    try {
      galab::validate(activation);
    } catch (const Error& e) {
      fail("activation: " + e.detail());
    }
  }
}

int AgentConfig::effective_policy_interval() const {
  return (algorithm == Algorithm::TD3 || algorithm == Algorithm::GD3) ? policy_interval : 1;
}

int AgentConfig::num_critics() const {
  return (algorithm == Algorithm::TD3 || algorithm == Algorithm::GD3) ? 2 : 1;
}

int AgentConfig::num_actors() const { return algorithm == Algorithm::GD3 ? 2 : 1; }

std::vector<double> select_action(const Mlp& actor, std::span<const double> state, double sigma,
                                  std::mt19937_64& rng) {
  const VectorXd s = Eigen::Map<const VectorXd>(state.data(), static_cast<Index>(state.size()));
  const VectorXd mu = actor.forward(s);
  std::vector<double> a(mu.data(), mu.data() + mu.size());
  if (sigma > 0.0) {
    std::normal_distribution<double> n(0.0, sigma);
    for (std::size_t d = 0; d < a.size(); ++d) {
      a[d] = std::clamp(a[d] + n(rng), actor.action_low()[d], actor.action_high()[d]);
    }
  }
  return a;
}

MatrixXd critic_input(const MatrixXd& states, const MatrixXd& actions) {
  if (states.cols() != actions.cols()) throw Error(ErrorCode::ShapeMismatch, "state/action batch sizes differ");
  MatrixXd x(states.rows() + actions.rows(), states.cols());
  x.topRows(states.rows()) = states;
  x.bottomRows(actions.rows()) = actions;
  return x;
}

VectorXd ddpg_target(const Mlp& critic_target, const Mlp& actor_target, const Batch& batch,
                     const TargetOptions& opt) {
  const MatrixXd a2 = actor_target.forward_batch(batch.s2);
  const VectorXd q = critic_target.forward_batch(critic_input(batch.s2, a2)).row(0).transpose();
  return bootstrap(batch, clamp_values(q, opt.q_clamp), opt.gamma);
}

VectorXd td3_target(const Mlp& critic1_target, const Mlp& critic2_target, const Mlp& actor_target,
                    const Batch& batch, double sigma_bar, double clip, std::mt19937_64& rng,
                    const TargetOptions& opt) {
  MatrixXd a2 = actor_target.forward_batch(batch.s2);
  std::normal_distribution<double> n(0.0, sigma_bar);
  for (Index j = 0; j < a2.cols(); ++j) {
    for (Index d = 0; d < a2.rows(); ++d) a2(d, j) += std::clamp(n(rng), -clip, clip);
  }
  a2 = clip_box(std::move(a2), actor_target.action_low(), actor_target.action_high());
  const MatrixXd x = critic_input(batch.s2, a2);
  const VectorXd q1 = critic1_target.forward_batch(x).row(0).transpose();
  const VectorXd q2 = critic2_target.forward_batch(x).row(0).transpose();
  return bootstrap(batch, clamp_values(q1.cwiseMin(q2), opt.q_clamp), opt.gamma);
}

MatrixXd noisy_target_values(std::span<const Mlp* const> critics, const Mlp& actor_target,
                             const MatrixXd& next_states, const NoiseBlock& noise, double q_clamp) {
  if (critics.empty()) throw Error(ErrorCode::InvalidArgument, "no critics given");
  const Index b = next_states.cols();
  const Index n = noise.count;
  const Index ad = actor_target.output_dim();
  if (noise.dim != ad) throw Error(ErrorCode::ShapeMismatch, "noise dimension differs from action dimension");

  const MatrixXd mu = actor_target.forward_batch(next_states);
  MatrixXd a(ad, b * n);
  for (Index j = 0; j < b; ++j) {
    for (Index k = 0; k < n; ++k) {
      for (Index d = 0; d < ad; ++d) {
        const double v = mu(d, j) + noise.noise[static_cast<std::size_t>(k * ad + d)];
        a(d, j * n + k) = std::clamp(v, actor_target.action_low()[d], actor_target.action_high()[d]);
      }
    }
  }
  MatrixXd q = critics[0]->forward_repeated(next_states, static_cast<int>(n), a);
  for (std::size_t c = 1; c < critics.size(); ++c) {
    q = q.cwiseMin(critics[c]->forward_repeated(next_states, static_cast<int>(n), a));
  }
  q = q.cwiseMax(-q_clamp).cwiseMin(q_clamp);
  return Eigen::Map<const MatrixXd>(q.data(), n, b);
}

VectorXd ga_over_noise(const MatrixXd& values, const NoiseBlock& noise, const ActivationSpec& spec) {
  if (values.rows() != noise.count) throw Error(ErrorCode::ShapeMismatch, "value rows differ from noise count");
  const std::vector<double> mu = noise.inverse_density_weights();
  VectorXd out(values.cols());
  for (Index j = 0; j < values.cols(); ++j) {
    out(j) = ga_weighted(std::span<const double>(values.col(j).data(), static_cast<std::size_t>(values.rows())), mu, spec);
  }
  return out;
}

VectorXd gd2_target(const Mlp& critic_target, const Mlp& actor_target, const Batch& batch,
                    const ActivationSpec& spec, const NoiseBlock& noise, const TargetOptions& opt) {
  const Mlp* critics[] = {&critic_target};
  const MatrixXd v = noisy_target_values(critics, actor_target, batch.s2, noise, opt.q_clamp);
  return bootstrap(batch, ga_over_noise(v, noise, spec), opt.gamma);
}

VectorXd gd3_target(const Mlp& critic1_target, const Mlp& critic2_target, const Mlp& actor_target_i,
                    const Batch& batch, const ActivationSpec& spec, const NoiseBlock& noise,
                    const TargetOptions& opt) {
  const Mlp* critics[] = {&critic1_target, &critic2_target};
  const MatrixXd v = noisy_target_values(critics, actor_target_i, batch.s2, noise, opt.q_clamp);
  return bootstrap(batch, ga_over_noise(v, noise, spec), opt.gamma);
}

// ---------------------------------------------------------------------------

Agent::Agent(AgentConfig config, const EnvSpec& env, std::uint64_t seed)
    : cfg_(std::move(config)), env_(env) {
  cfg_.validate();
  q_bound_ = env_.r_max / (1.0 - cfg_.gamma);
  spec_ = with_domain_shift(cfg_.activation, q_bound_);

  std::mt19937_64 init(seed);
  const auto actor_sizes = layer_sizes(env_.state_dim, cfg_.actor_hidden, env_.action_dim);
  const auto critic_sizes = layer_sizes(env_.state_dim + env_.action_dim, cfg_.critic_hidden, 1);
  for (int i = 0; i < cfg_.num_actors(); ++i) {
    actors_.emplace_back(actor_sizes, OutputActivation::ScaledTanh, init(), env_.action_low, env_.action_high);
    actor_targets_.push_back(actors_.back());
    actor_opt_.emplace_back(actors_.back(), cfg_.actor_lr);
  }
  for (int i = 0; i < cfg_.num_critics(); ++i) {
    critics_.emplace_back(critic_sizes, OutputActivation::Identity, init());
    critic_targets_.push_back(critics_.back());
    critic_opt_.emplace_back(critics_.back(), cfg_.critic_lr);
  }
}

std::vector<double> Agent::act(std::span<const double> state) const {
  const VectorXd s = Eigen::Map<const VectorXd>(state.data(), static_cast<Index>(state.size()));
  const VectorXd a = actors_[0].forward(s);
  return {a.data(), a.data() + a.size()};
}

MatrixXd Agent::act_batch(const MatrixXd& states) const { return actors_[0].forward_batch(states); }

std::vector<double> Agent::explore(std::span<const double> state, std::mt19937_64& rng) const {
  return select_action(actors_[0], state, cfg_.exploration_sigma, rng);
}

double Agent::q_value(std::span<const double> state, std::span<const double> action) const {
  VectorXd x(static_cast<Index>(state.size() + action.size()));
  for (std::size_t i = 0; i < state.size(); ++i) x(static_cast<Index>(i)) = state[i];
  for (std::size_t i = 0; i < action.size(); ++i) x(static_cast<Index>(state.size() + i)) = action[i];
  return critics_[0].forward(x)(0);
}

VectorXd Agent::q_batch(const MatrixXd& states, const MatrixXd& actions) const {
  return critics_[0].forward_batch(critic_input(states, actions)).row(0).transpose();
}

VectorXd Agent::compute_target(int i, const Batch& batch, std::mt19937_64& rng) {
  const TargetOptions opt{cfg_.gamma, q_bound_};
  switch (cfg_.algorithm) {
    case Algorithm::DDPG:
      return ddpg_target(critic_targets_[0], actor_targets_[0], batch, opt);
    case Algorithm::TD3:
      return td3_target(critic_targets_[0], critic_targets_[1], actor_targets_[0], batch,
                        cfg_.target_sigma, cfg_.target_clip, rng, opt);
    case Algorithm::GD2: {
      const NoiseBlock noise = draw_truncated_noise(cfg_.noise_count, env_.action_dim,
                                                    cfg_.target_sigma, cfg_.target_clip, rng);
      return gd2_target(critic_targets_[0], actor_targets_[0], batch, spec_, noise, opt);
    }
    case Algorithm::GD3: {
      const NoiseBlock noise = draw_truncated_noise(cfg_.noise_count, env_.action_dim,
                                                    cfg_.target_sigma, cfg_.target_clip, rng);
      return gd3_target(critic_targets_[0], critic_targets_[1], actor_targets_[i], batch, spec_, noise, opt);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown algorithm");
}

double Agent::update_critic(int i, const Batch& batch, const VectorXd& y, double* mean_q) {
  const MatrixXd x = critic_input(batch.s, batch.a);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  Mlp& net = critics_[i];
  const MatrixXd q = net.forward_batch(x);
  const Eigen::RowVectorXd err = q.row(0) - y.transpose();
  const double loss = err.squaredNorm() * inv_b;
  if (!std::isfinite(loss)) {
    throw Error(ErrorCode::NonFiniteLoss,
                "critic " + std::to_string(i + 1) + " loss is not finite at train step " + std::to_string(steps_ + 1));
  }
  if (mean_q) *mean_q = q.row(0).mean();
  const MatrixXd upstream = 2.0 * inv_b * err;
  const auto back = net.backward_batch(x, upstream);
  adam_step(critic_opt_[i], net, back.params);
  return loss;
}

void Agent::update_actor(int actor_index, int critic_index, const Batch& batch) {
  Mlp& actor = actors_[actor_index];
  const Mlp& critic = critics_[critic_index];
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const MatrixXd a = actor.forward_batch(batch.s);
  const MatrixXd x = critic_input(batch.s, a);
  // Ascent on mean Q is descent on -mean Q.
  const MatrixXd upstream = MatrixXd::Constant(1, x.cols(), -inv_b);
  const auto qback = critic.backward_batch(x, upstream);
  const MatrixXd da = qback.input.bottomRows(a.rows());
  const auto aback = actor.backward_batch(batch.s, da);
  adam_step(actor_opt_[actor_index], actor, aback.params);
}

TrainMetrics Agent::train_step(const ReplayBuffer& buffer, std::mt19937_64& rng) {
  const std::size_t need = std::max<std::size_t>(static_cast<std::size_t>(cfg_.batch_size),
                                                 static_cast<std::size_t>(cfg_.warmup_steps));
  if (buffer.size() < need) {
    throw Error(ErrorCode::InvalidArgument, "replay buffer holds " + std::to_string(buffer.size()) +
                                                " transitions, need " + std::to_string(need));
  }
  if (buffer.state_dim() != env_.state_dim || buffer.action_dim() != env_.action_dim) {
    throw Error(ErrorCode::ShapeMismatch, "replay buffer does not match the environment");
  }
  ++steps_;
  const bool policy_turn = steps_ % cfg_.effective_policy_interval() == 0;
  const auto bsz = static_cast<std::size_t>(cfg_.batch_size);
  TrainMetrics m;
  m.actor_updated = policy_turn;

  if (cfg_.algorithm == Algorithm::GD3) {
    for (int i = 0; i < 2; ++i) {
      const Batch batch = buffer.sample(bsz, rng);
      const VectorXd y = compute_target(i, batch, rng);
      double mq = 0.0;
      m.critic_loss += 0.5 * update_critic(i, batch, y, &mq);
      m.mean_target += 0.5 * y.mean();
      m.mean_q += 0.5 * mq;
      if (policy_turn) {
        update_actor(i, i, batch);
        soft_update(critic_targets_[i], critics_[i], cfg_.tau);
        soft_update(actor_targets_[i], actors_[i], cfg_.tau);
      }
    }
    return m;
  }

  const Batch batch = buffer.sample(bsz, rng);
  const VectorXd y = compute_target(0, batch, rng);
  m.mean_target = y.mean();
  const int nc = cfg_.num_critics();
  for (int i = 0; i < nc; ++i) {
    double mq = 0.0;
    m.critic_loss += update_critic(i, batch, y, &mq) / nc;
    if (i == 0) m.mean_q = mq;
  }
  if (policy_turn) {
    update_actor(0, 0, batch);
    for (int i = 0; i < nc; ++i) soft_update(critic_targets_[i], critics_[i], cfg_.tau);
    soft_update(actor_targets_[0], actors_[0], cfg_.tau);
  }
  return m;
}

void Agent::save_checkpoint(const std::string& dir, const std::string& config_text) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto save_all = [&](const std::vector<Mlp>& nets, const std::string& stem) {
    for (std::size_t i = 0; i < nets.size(); ++i) {
      save_mlp(nets[i], (fs::path(dir) / (stem + std::to_string(i + 1) + ".bin")).string());
    }
  };
  save_all(actors_, "actor");
  save_all(actor_targets_, "actor_target");
  save_all(critics_, "critic");
  save_all(critic_targets_, "critic_target");

  nlohmann::json manifest;
  manifest["format"] = "galab.checkpoint";
  manifest["version"] = 1;
  manifest["algorithm"] = std::string(algorithm_name(cfg_.algorithm));
  manifest["train_steps"] = steps_;
  manifest["actors"] = actors_.size();
  manifest["critics"] = critics_.size();
  manifest["config"] = config_text;
  std::ofstream os(fs::path(dir) / "manifest.json");
  if (!os) throw Error(ErrorCode::IoError, "cannot write manifest in " + dir);
  os << manifest.dump(2) << '\n';
}

void Agent::load_checkpoint(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream is(fs::path(dir) / "manifest.json");
  if (!is) throw Error(ErrorCode::IoError, "cannot read manifest in " + dir);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("bad manifest: ") + e.what());
  }
  if (manifest.value("algorithm", std::string()) != algorithm_name(cfg_.algorithm)) {
    throw Error(ErrorCode::ArchitectureMismatch, "checkpoint algorithm differs from agent");
  }
  auto load_all = [&](std::vector<Mlp>& nets, const std::string& stem) {
    for (std::size_t i = 0; i < nets.size(); ++i) {
      Mlp loaded = load_mlp((fs::path(dir) / (stem + std::to_string(i + 1) + ".bin")).string());
      if (!loaded.same_architecture(nets[i])) {
        throw Error(ErrorCode::ArchitectureMismatch, "checkpoint network " + stem + std::to_string(i + 1) + " differs");
      }
      nets[i] = std::move(loaded);
    }
  };
  load_all(actors_, "actor");
  load_all(actor_targets_, "actor_target");
  load_all(critics_, "critic");
  load_all(critic_targets_, "critic_target");
  steps_ = manifest.value("train_steps", 0L);
}

}  // namespace galab
