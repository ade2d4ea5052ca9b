#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "galab/config.hpp"
#include "galab/diagnostics.hpp"
#include "galab/report.hpp"

namespace galab {

/// One evaluation point of a training run. Metrics that have no sample in
/// the window since the previous row are NaN.
struct TrainingRow {
  long step = 0;
  double eval_return_mean = 0.0;
  double eval_return_std = 0.0;
  double critic_loss = 0.0;  // mean over train steps since the previous row
  double mean_target = 0.0;  // mean over train steps since the previous row
  double bias = 0.0;         // latest bias sample at or before `step`
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<TrainingRow> rows;
  std::vector<BiasSample> bias;
};

struct ExperimentResult {
  std::string dir;
  std::vector<SeedResult> seeds;
};

struct RunOptions {
  /// Seeds trained concurrently; 0 picks the hardware concurrency.
  unsigned jobs = 0;
  /// Progress lines go here when set.
  std::ostream* log = nullptr;
};

/// Trains one seed. Identical config and seed give identical output. The
/// final networks are checkpointed into `checkpoint_dir` when it is set.
SeedResult train_seed(const ExperimentConfig& config, std::uint64_t seed, std::ostream* log = nullptr,
                      const std::string& checkpoint_dir = {});

/// Mean and population standard deviation of deterministic-policy episode
/// returns from the given reset seeds.
std::pair<double, double> evaluate_policy(const Agent& agent, const Env& env,
                                          const std::vector<std::uint64_t>& reset_seeds);

/// `base` if it does not exist yet, otherwise the first free `base-N`.
std::string unique_output_dir(const std::string& base);

/// Runs every seed and writes, under a fresh directory derived from
/// config.out:
///   config.toml                  echo of the source config
///   seed_<s>/training.csv        step, eval_return_mean, eval_return_std, critic_loss, mean_target, bias
///   seed_<s>/bias.csv            step, q_estimate, true_q, bias
///   seed_<s>/checkpoint/         when save_checkpoint is set
///   aggregate.csv                step, eval_return_mean, eval_return_std, bias_mean, bias_std, seeds
///   learning_curve.svg           mean +- std across seeds
///   summary.json
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

void write_training_csv(const std::string& path, const std::vector<TrainingRow>& rows);
void write_bias_csv(const std::string& path, const std::vector<BiasSample>& trace);

/// Per-step mean and population std of eval_return_mean across seeds.
std::vector<CurveSeries> aggregate_curve(const std::string& label, const ExperimentResult& result);

}  // namespace galab
