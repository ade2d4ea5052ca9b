#include "galab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <streambuf>
#include <thread>

#include "galab/error.hpp"

namespace galab {
namespace {

namespace fs = std::filesystem;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Independent stream per (seed, purpose).
std::mt19937_64 stream(std::uint64_t seed, std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), purpose};
  return std::mt19937_64(seq);
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {kNaN, kNaN};
  long double s = 0.0L;
  for (double x : v) s += x;
  const long double m = s / v.size();
  long double ss = 0.0L;
  for (double x : v) ss += (x - m) * (x - m);
  return {static_cast<double>(m), static_cast<double>(std::sqrt(ss / v.size()))};
}

}  // namespace

std::pair<double, double> evaluate_policy(const Agent& agent, const Env& env,
                                          const std::vector<std::uint64_t>& reset_seeds) {
  std::vector<double> returns;
  returns.reserve(reset_seeds.size());
  for (std::uint64_t rs : reset_seeds) {
    auto e = env.clone();
    auto s = e->reset(rs);
    long double total = 0.0L;
    for (;;) {
      const StepResult r = e->step(agent.act(s));
      total += r.reward;
      if (r.done) break;
      s = r.next_state;
    }
    returns.push_back(static_cast<double>(total));
  }
  return mean_std(returns);
}

SeedResult train_seed(const ExperimentConfig& config, std::uint64_t seed, std::ostream* log,
                      const std::string& checkpoint_dir) {
  config.validate();
  const AgentConfig& ac = config.agent;
  auto env = make_env(config.env);
  auto probe_env = env->clone();
  const EnvSpec spec = env->spec();

  auto init_rng = stream(seed, 1);
  auto reset_rng = stream(seed, 2);
  auto train_rng = stream(seed, 3);
  auto bias_rng = stream(seed, 4);
  auto eval_rng = stream(seed, 5);
  std::vector<std::uint64_t> eval_seeds(static_cast<std::size_t>(config.eval_episodes));
  for (auto& s : eval_seeds) s = eval_rng();

  Agent agent(ac, spec, init_rng());
  ReplayBuffer buffer(spec.state_dim, spec.action_dim,
                      std::min<std::size_t>(ac.buffer_capacity, static_cast<std::size_t>(std::max<long>(config.total_steps, 1))));
  BiasMonitor monitor(config.bias.cadence, config.bias.n_states, config.bias.n_rollouts);
  const std::size_t learn_after = std::max<std::size_t>(static_cast<std::size_t>(ac.batch_size),
                                                        static_cast<std::size_t>(ac.warmup_steps));

  SeedResult out;
  out.seed = seed;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> s = env->reset(reset_rng());
  long double loss_sum = 0.0L, target_sum = 0.0L;
  long n_updates = 0;
  double last_bias = kNaN;

  for (long t = 1; t <= config.total_steps; ++t) {
    std::vector<double> a(static_cast<std::size_t>(spec.action_dim));
    if (t <= ac.warmup_steps) {
      for (int d = 0; d < spec.action_dim; ++d) {
        a[d] = spec.action_low[d] + (spec.action_high[d] - spec.action_low[d]) * unit(train_rng);
      }
    } else {
      a = agent.explore(s, train_rng);
    }
    const StepResult r = env->step(a);
    buffer.push({s, a, r.reward, r.next_state, (r.done && !r.time_limit) ? 1.0 : 0.0});
    s = r.done ? env->reset(reset_rng()) : r.next_state;

    if (buffer.size() >= learn_after) {
      const TrainMetrics m = agent.train_step(buffer, train_rng);
      loss_sum += m.critic_loss;
      target_sum += m.mean_target;
      ++n_updates;
    }
    if (config.bias.enabled && monitor.maybe_record(t, agent, *probe_env, buffer, bias_rng)) {
      last_bias = monitor.trace().back().bias;
    }
    if (t % config.eval_interval == 0) {
      const auto [mean, sd] = evaluate_policy(agent, *probe_env, eval_seeds);
      TrainingRow row;
      row.step = t;
      row.eval_return_mean = mean;
      row.eval_return_std = sd;
      row.critic_loss = n_updates ? static_cast<double>(loss_sum / n_updates) : kNaN;
      row.mean_target = n_updates ? static_cast<double>(target_sum / n_updates) : kNaN;
      row.bias = last_bias;
      out.rows.push_back(row);
      loss_sum = target_sum = 0.0L;
      n_updates = 0;
      if (log) {
        *log << config.env << '/' << algorithm_name(ac.algorithm) << " seed " << seed << " step " << t
             << " return " << format_number(mean) << " bias " << format_number(last_bias) << '\n';
      }
    }
  }
  out.bias = monitor.trace();
  if (!checkpoint_dir.empty()) agent.save_checkpoint(checkpoint_dir, config.source_text);
  return out;
}

namespace {

// Forwards complete lines to a shared stream under a mutex.
class LineForwarder : public std::streambuf {
 public:
  LineForwarder(std::ostream* out, std::mutex& mu) : out_(out), mu_(mu) {}

 protected:
  int_type overflow(int_type ch) override {
    if (ch == traits_type::eof()) return ch;
    line_.push_back(static_cast<char>(ch));
    if (ch == '\n' && out_) {
      std::lock_guard lock(mu_);
      *out_ << line_ << std::flush;
      line_.clear();
    }
    return ch;
  }

 private:
  std::ostream* out_;
  std::mutex& mu_;
  std::string line_;
};

}  // namespace

std::string unique_output_dir(const std::string& base) {
  if (!fs::exists(base)) return base;
  for (int n = 1;; ++n) {
    const std::string candidate = base + "-" + std::to_string(n);
    if (!fs::exists(candidate)) return candidate;
  }
}

void write_training_csv(const std::string& path, const std::vector<TrainingRow>& rows) {
  CsvWriter w(path, {"step", "eval_return_mean", "eval_return_std", "critic_loss", "mean_target", "bias"});
  for (const auto& r : rows) {
    w.cell(static_cast<double>(r.step)).cell(r.eval_return_mean).cell(r.eval_return_std);
    w.cell(r.critic_loss).cell(r.mean_target).cell(r.bias);
    w.end_row();
  }
  w.close();
}

void write_bias_csv(const std::string& path, const std::vector<BiasSample>& trace) {
  CsvWriter w(path, {"step", "q_estimate", "true_q", "bias"});
  for (const auto& b : trace) {
    w.cell(static_cast<double>(b.step)).cell(b.estimate).cell(b.true_value).cell(b.bias);
    w.end_row();
  }
  w.close();
}

std::vector<CurveSeries> aggregate_curve(const std::string& label, const ExperimentResult& result) {
  std::map<long, std::vector<double>> by_step;
  for (const auto& sr : result.seeds) {
    for (const auto& r : sr.rows) by_step[r.step].push_back(r.eval_return_mean);
  }
  CurveSeries c;
  c.label = label;
  for (const auto& [step, vals] : by_step) {
    const auto [m, sd] = mean_std(vals);
    c.x.push_back(static_cast<double>(step));
    c.mean.push_back(m);
    c.std.push_back(sd);
  }
  return {c};
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  ExperimentResult result;
  result.dir = unique_output_dir(config.out);
  fs::create_directories(result.dir);
  {
    std::ofstream os(fs::path(result.dir) / "config.toml", std::ios::binary);
    if (!os) throw Error(ErrorCode::IoError, "cannot write into " + result.dir);
    os << config.source_text;
  }

  const std::size_t n = config.seeds.size();
  result.seeds.resize(n);
  unsigned jobs = options.jobs ? options.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  std::vector<std::exception_ptr> errors(n);

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        const std::uint64_t seed = config.seeds[i];
        LineForwarder fwd(options.log, log_mutex);
        std::ostream local(&fwd);
        const fs::path dir = fs::path(result.dir) / ("seed_" + std::to_string(seed));
        fs::create_directories(dir);
        SeedResult sr = train_seed(config, seed, options.log ? &local : nullptr,
                                   config.save_checkpoint ? (dir / "checkpoint").string() : std::string());
        write_training_csv((dir / "training.csv").string(), sr.rows);
        write_bias_csv((dir / "bias.csv").string(), sr.bias);
        result.seeds[i] = std::move(sr);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const std::string label = std::string(algorithm_name(config.agent.algorithm)) + " on " + config.env;
  const auto curves = aggregate_curve(label, result);
  {
    std::map<long, std::vector<double>> bias_by_step;
    for (const auto& sr : result.seeds) {
      for (const auto& r : sr.rows) {
        if (std::isfinite(r.bias)) bias_by_step[r.step].push_back(r.bias);
      }
    }
    CsvWriter w((fs::path(result.dir) / "aggregate.csv").string(),
                {"step", "eval_return_mean", "eval_return_std", "bias_mean", "bias_std", "seeds"});
    const CurveSeries& c = curves.front();
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      const long step = static_cast<long>(c.x[i]);
      const auto it = bias_by_step.find(step);
      const auto [bm, bs] = it == bias_by_step.end() ? std::pair{kNaN, kNaN} : mean_std(it->second);
      std::size_t count = 0;
      for (const auto& sr : result.seeds) {
        count += static_cast<std::size_t>(std::count_if(sr.rows.begin(), sr.rows.end(),
                                                        [&](const TrainingRow& r) { return r.step == step; }));
      }
      w.cell(c.x[i]).cell(c.mean[i]).cell(c.std[i]).cell(bm).cell(bs).cell(static_cast<double>(count));
      w.end_row();
    }
    w.close();
  }
  write_learning_curve_svg((fs::path(result.dir) / "learning_curve.svg").string(), label, "environment steps",
                           "evaluation return", curves);

  nlohmann::json summary;
  summary["env"] = config.env;
  summary["algorithm"] = std::string(algorithm_name(config.agent.algorithm));
  summary["total_steps"] = config.total_steps;
  for (const auto& sr : result.seeds) {
    nlohmann::json js;
    js["seed"] = sr.seed;
    js["evaluations"] = sr.rows.size();
    if (!sr.rows.empty()) {
      js["final_return"] = format_number(sr.rows.back().eval_return_mean);
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& r : sr.rows) best = std::max(best, r.eval_return_mean);
      js["best_return"] = format_number(best);
    }
    std::vector<double> b;
    for (const auto& s : sr.bias) b.push_back(s.bias);
    if (!b.empty()) js["mean_bias"] = format_number(mean_std(b).first);
    summary["seeds"].push_back(js);
  }
  std::ofstream os(fs::path(result.dir) / "summary.json", std::ios::binary);
  os << summary.dump(2) << '\n';
  return result;
}

}  // namespace galab
