#include "galab/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "galab/error.hpp"
#include "galab/ga_operator.hpp"

namespace galab {
namespace {

struct Moments {
  long double sum = 0.0L;
  long double sum_sq = 0.0L;
  long n = 0;

  void add(double x) {
    sum += x;
    sum_sq += static_cast<long double>(x) * x;
    ++n;
  }
  double mean() const { return static_cast<double>(sum / n); }
  double std_error() const {
    if (n < 2) return 0.0;
    const long double m = sum / n;
    const long double var = std::max(0.0L, (sum_sq - n * m * m) / (n - 1));
    return static_cast<double>(std::sqrt(var / n));
  }
};

}  // namespace

BiasSample measure_bias(long step, const BatchCritic& critic, const BatchPolicy& policy,
                        const Env& env, std::span<const std::vector<double>> start_states,
                        int n_rollouts, double gamma) {
  if (start_states.empty()) throw Error(ErrorCode::InvalidArgument, "no start states");
  const int sd = env.spec().state_dim;
  Eigen::MatrixXd s(sd, static_cast<Eigen::Index>(start_states.size()));
  for (std::size_t j = 0; j < start_states.size(); ++j) {
    for (int d = 0; d < sd; ++d) s(d, static_cast<Eigen::Index>(j)) = start_states[j][d];
  }
  const Eigen::VectorXd q = critic(s, policy(s));
  BiasSample out;
  out.step = step;
  out.estimate = q.mean();
  out.true_value = true_q_rollout(env, policy, start_states, n_rollouts, gamma);
  out.bias = out.estimate - out.true_value;
  return out;
}

BiasSample measure_bias(long step, const Agent& agent, const Env& env, const ReplayBuffer& buffer,
                        int n_states, int n_rollouts, std::mt19937_64& rng) {
  if (n_states <= 0) throw Error(ErrorCode::InvalidArgument, "n_states must be positive");
  std::vector<std::vector<double>> starts;
  starts.reserve(static_cast<std::size_t>(n_states));
  for (int i = 0; i < n_states; ++i) starts.push_back(buffer.state_at_slot(buffer.sample_slot(rng)));
  const BatchCritic critic = [&](const Eigen::MatrixXd& s, const Eigen::MatrixXd& a) { return agent.q_batch(s, a); };
  const BatchPolicy policy = [&](const Eigen::MatrixXd& s) { return agent.act_batch(s); };
  return measure_bias(step, critic, policy, env, starts, n_rollouts, agent.config().gamma);
}

BiasMonitor::BiasMonitor(long cadence, int n_states, int n_rollouts)
    : cadence_(cadence), n_states_(n_states), n_rollouts_(n_rollouts) {
  if (cadence <= 0) throw Error(ErrorCode::InvalidArgument, "bias cadence must be positive");
  if (n_states <= 0 || n_rollouts <= 0) throw Error(ErrorCode::InvalidArgument, "bias sample sizes must be positive");
}

bool BiasMonitor::maybe_record(long step, const Agent& agent, const Env& env,
                               const ReplayBuffer& buffer, std::mt19937_64& rng) {
  if (!due(step) || buffer.size() == 0) return false;
  trace_.push_back(measure_bias(step, agent, env, buffer, n_states_, n_rollouts_, rng));
  return true;
}

void NoiseModel::validate() const {
  if (true_q.empty()) throw Error(ErrorCode::EmptyLandscape, "noise model has no actions");
  for (double q : true_q) {
    if (!std::isfinite(q)) throw Error(ErrorCode::NonFiniteInput, "true Q is not finite");
  }
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw Error(ErrorCode::InvalidArgument, "eta must be >= 0");
  if (critics != 1 && critics != 2) throw Error(ErrorCode::InvalidArgument, "critics must be 1 or 2");
  if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
}

BiasOrdering synthetic_bias_ordering(const NoiseModel& model, const ActivationSpec& spec,
                                     std::uint64_t seed) {
  model.validate();
  validate(spec);
  const std::size_t n = model.true_q.size();
  double bound = 0.0;
  for (double q : model.true_q) bound = std::max(bound, std::abs(q));
  bound += 8.0 * model.eta;
  const ActivationSpec g = with_domain_shift(spec, bound);
  const double target = *std::max_element(model.true_q.begin(), model.true_q.end());

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  const std::vector<double> mu(n, 1.0);
  std::vector<double> q1(n), qmin(n);
  Moments m_max, m_ga, m_pair, d_single, d_pair;

  for (long t = 0; t < model.trials; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      q1[i] = std::clamp(model.true_q[i] + model.eta * z(rng), -bound, bound);
      qmin[i] = q1[i];
      for (int c = 1; c < model.critics; ++c) {
        qmin[i] = std::min(qmin[i], std::clamp(model.true_q[i] + model.eta * z(rng), -bound, bound));
      }
    }
    const double b_max = *std::max_element(q1.begin(), q1.end()) - target;
    const double b_ga = ga_weighted(q1, mu, g) - target;
    const double b_pair = ga_weighted(qmin, mu, g) - target;
    m_max.add(b_max);
    m_ga.add(b_ga);
    m_pair.add(b_pair);
    d_single.add(b_ga - b_max);
    d_pair.add(b_pair - b_ga);
  }

  BiasOrdering r;
  r.bias_max_single = m_max.mean();
  r.bias_ga_single = m_ga.mean();
  r.bias_ga_min_pair = m_pair.mean();
  r.se_max_single = m_max.std_error();
  r.se_ga_single = m_ga.std_error();
  r.se_ga_min_pair = m_pair.std_error();
  r.se_single_vs_max = d_single.std_error();
  r.se_pair_vs_single = d_pair.std_error();
  r.orderings_ok = d_single.mean() <= 3.0 * r.se_single_vs_max &&
                   d_pair.mean() <= 3.0 * r.se_pair_vs_single;
  return r;
}

}  // namespace galab
