#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "galab/activation.hpp"
#include "galab/envs.hpp"
#include "galab/ga_operator.hpp"
#include "galab/replay_buffer.hpp"
#include "galab/tinynet.hpp"

namespace galab {

enum class Algorithm { DDPG, TD3, GD2, GD3 };

std::string_view algorithm_name(Algorithm a);
Algorithm parse_algorithm(std::string_view name);

/// Defaults are the standard continuous-control settings.
struct AgentConfig {
  Algorithm algorithm = Algorithm::TD3;
  ActivationSpec activation = ActivationSpec::polynomial(0.05, 2.0, 2.0);
  std::vector<int> actor_hidden = {400, 300};
  std::vector<int> critic_hidden = {400, 300};
  int batch_size = 100;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  double gamma = 0.99;
  double tau = 5e-3;
  double exploration_sigma = 0.1;
  double target_sigma = 0.2;
  double target_clip = 0.5;
  int policy_interval = 2;  // TD3 and GD3 only
  int noise_count = 50;     // GD2 and GD3 only
  int warmup_steps = 10'000;
  std::size_t buffer_capacity = 1'000'000;

  /// Throws ConfigError on an invalid field.
  void validate() const;
  /// Actor and target updates happen every this many train steps.
  int effective_policy_interval() const;
  int num_critics() const;
  int num_actors() const;
};

/// pi(s) + N(0, sigma^2) per coordinate, clipped to the actor's box.
std::vector<double> select_action(const Mlp& actor, std::span<const double> state, double sigma,
                                  std::mt19937_64& rng);

/// Stacks states and actions into critic inputs (one sample per column).
Eigen::MatrixXd critic_input(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions);

/// Options shared by every target rule. `q_clamp` bounds critic outputs
/// before bootstrapping (the range r_max / (1 - gamma) of every true value).
struct TargetOptions {
  double gamma = 0.99;
  double q_clamp = std::numeric_limits<double>::infinity();
};

/// y = r + gamma (1 - d) Q'(s', pi'(s')).
Eigen::VectorXd ddpg_target(const Mlp& critic_target, const Mlp& actor_target, const Batch& batch,
                            const TargetOptions& opt);

/// Smoothed target action and clipped double-Q minimum.
Eigen::VectorXd td3_target(const Mlp& critic1_target, const Mlp& critic2_target,
                           const Mlp& actor_target, const Batch& batch, double sigma_bar,
                           double clip, std::mt19937_64& rng, const TargetOptions& opt);

/// Critic values (one column per batch element, one row per noise) at
/// a' = clip_box(pi'(s') + eps_n), minimised over the given critics.
Eigen::MatrixXd noisy_target_values(std::span<const Mlp* const> critics, const Mlp& actor_target,
                                    const Eigen::MatrixXd& next_states, const NoiseBlock& noise,
                                    double q_clamp);

/// Per-element importance-sampled GA over the columns of `values`.
Eigen::VectorXd ga_over_noise(const Eigen::MatrixXd& values, const NoiseBlock& noise,
                              const ActivationSpec& spec);

/// y = r + gamma (1 - d) GA over a single target critic.
Eigen::VectorXd gd2_target(const Mlp& critic_target, const Mlp& actor_target, const Batch& batch,
                           const ActivationSpec& spec, const NoiseBlock& noise,
                           const TargetOptions& opt);

/// y_i = r + gamma (1 - d) GA over min(Q1', Q2') around actor i's target.
Eigen::VectorXd gd3_target(const Mlp& critic1_target, const Mlp& critic2_target,
                           const Mlp& actor_target_i, const Batch& batch,
                           const ActivationSpec& spec, const NoiseBlock& noise,
                           const TargetOptions& opt);

struct TrainMetrics {
  double critic_loss = 0.0;  // mean squared error before the step, averaged over critics
  double mean_target = 0.0;
  double mean_q = 0.0;
  bool actor_updated = false;
};

class Agent {
 public:
  Agent(AgentConfig config, const EnvSpec& env, std::uint64_t seed);

  const AgentConfig& config() const noexcept { return cfg_; }
  /// Activation with the domain shift for this environment's Q range.
  const ActivationSpec& effective_activation() const noexcept { return spec_; }
  double q_bound() const noexcept { return q_bound_; }
  long train_steps() const noexcept { return steps_; }

  /// Deterministic evaluation policy (actor 1).
  std::vector<double> act(std::span<const double> state) const;
  Eigen::MatrixXd act_batch(const Eigen::MatrixXd& states) const;
  std::vector<double> explore(std::span<const double> state, std::mt19937_64& rng) const;

  /// Critic 1 at (s, a).
  double q_value(std::span<const double> state, std::span<const double> action) const;
  Eigen::VectorXd q_batch(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) const;

  /// One critic update, plus an actor and target update on policy turns.
  /// Requires buffer.size() >= max(batch_size, warmup_steps).
  TrainMetrics train_step(const ReplayBuffer& buffer, std::mt19937_64& rng);

  const Mlp& actor(int i = 0) const { return actors_.at(i); }
  const Mlp& critic(int i = 0) const { return critics_.at(i); }
  const Mlp& actor_target(int i = 0) const { return actor_targets_.at(i); }
  const Mlp& critic_target(int i = 0) const { return critic_targets_.at(i); }
  Mlp& mutable_critic(int i = 0) { return critics_.at(i); }
  Mlp& mutable_actor(int i = 0) { return actors_.at(i); }

  /// Writes every network plus manifest.json (config echo and step count).
  void save_checkpoint(const std::string& dir, const std::string& config_text) const;
  /// Restores network parameters and the step count saved by save_checkpoint.
  void load_checkpoint(const std::string& dir);

 private:
  double update_critic(int i, const Batch& batch, const Eigen::VectorXd& y, double* mean_q);
  void update_actor(int actor_index, int critic_index, const Batch& batch);
  Eigen::VectorXd compute_target(int i, const Batch& batch, std::mt19937_64& rng);

  AgentConfig cfg_;
  EnvSpec env_;
  ActivationSpec spec_;
  double q_bound_;
  long steps_ = 0;
  std::vector<Mlp> actors_, actor_targets_, critics_, critic_targets_;
  std::vector<AdamState> actor_opt_, critic_opt_;
};

}  // namespace galab
