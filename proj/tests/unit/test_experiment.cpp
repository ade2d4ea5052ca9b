#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "galab/config.hpp"
#include "galab/error.hpp"
#include "galab/experiment.hpp"
#include "galab/suites.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("galab_test_" + name);
  fs::remove_all(d);
  return d;
}

galab::ExperimentConfig tiny(const std::string& algorithm, long steps, const fs::path& out) {
  auto c = galab::parse_experiment_config("env = \"pointmass1d\"\nalgorithm = \"" + algorithm + "\"\ntotal_steps = " +
                                          std::to_string(steps) +
                                          "\neval_interval = 200\neval_episodes = 2\nseeds = [0, 1]\n"
                                          "[agent]\nhidden = [8, 8]\nbatch_size = 16\nwarmup_steps = 100\nnoise_count = 8\n"
                                          "[bias]\ncadence = 200\nn_states = 4\nn_rollouts = 1\n");
  c.out = out.string();
  return c;
}

}  // namespace

TEST(Experiment, ZeroStepsGivesHeaderOnlyCsvs) {
  const auto dir = scratch_dir("zero");
  const auto r = galab::run_experiment(tiny("td3", 0, dir), {1, nullptr});
  EXPECT_EQ(r.dir, dir.string());
  EXPECT_EQ(slurp(dir / "seed_0" / "training.csv"), "step,eval_return_mean,eval_return_std,critic_loss,mean_target,bias\n");
  EXPECT_EQ(slurp(dir / "seed_1" / "bias.csv"), "step,q_estimate,true_q,bias\n");
  EXPECT_EQ(slurp(dir / "aggregate.csv"), "step,eval_return_mean,eval_return_std,bias_mean,bias_std,seeds\n");
  EXPECT_TRUE(fs::exists(dir / "learning_curve.svg"));
  EXPECT_TRUE(fs::exists(dir / "summary.json"));
  EXPECT_TRUE(fs::exists(dir / "config.toml"));
  fs::remove_all(dir);
}

TEST(Experiment, RowsAtEvalCadence) {
  const auto dir = scratch_dir("rows");
  const auto r = galab::run_experiment(tiny("gd2", 600, dir), {1, nullptr});
  ASSERT_EQ(r.seeds.size(), 2u);
  const auto& rows = r.seeds[0].rows;
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].step, 200);
  EXPECT_EQ(rows[2].step, 600);
  EXPECT_TRUE(std::isfinite(rows[1].critic_loss));
  EXPECT_TRUE(std::isfinite(rows[1].bias));
  EXPECT_EQ(r.seeds[0].bias.size(), 3u);
  fs::remove_all(dir);
}

TEST(Experiment, SameSeedGivesByteIdenticalCsv) {
  for (const char* alg : {"ddpg", "td3", "gd2", "gd3"}) {
    const auto a = scratch_dir(std::string("det_a_") + alg), b = scratch_dir(std::string("det_b_") + alg);
    galab::run_experiment(tiny(alg, 400, a), {2, nullptr});
    galab::run_experiment(tiny(alg, 400, b), {1, nullptr});
    for (const char* f : {"seed_0/training.csv", "seed_1/training.csv", "seed_0/bias.csv", "aggregate.csv"}) {
      const auto ta = slurp(a / f), tb = slurp(b / f);
      EXPECT_FALSE(ta.empty());
      EXPECT_EQ(ta, tb) << alg << " " << f;
    }
    fs::remove_all(a);
    fs::remove_all(b);
  }
}

TEST(Experiment, NeverOverwrites) {
  const auto dir = scratch_dir("unique");
  const auto r1 = galab::run_experiment(tiny("ddpg", 0, dir), {1, nullptr});
  const auto r2 = galab::run_experiment(tiny("ddpg", 0, dir), {1, nullptr});
  EXPECT_EQ(r1.dir, dir.string());
  EXPECT_EQ(r2.dir, dir.string() + "-1");
  EXPECT_EQ(galab::unique_output_dir(dir.string()), dir.string() + "-2");
  fs::remove_all(dir);
  fs::remove_all(dir.string() + "-1");
}

TEST(Experiment, CheckpointWritten) {
  const auto dir = scratch_dir("ckpt");
  auto c = tiny("gd3", 200, dir);
  c.seeds = {3};
  c.save_checkpoint = true;
  galab::run_experiment(c, {1, nullptr});
  EXPECT_TRUE(fs::exists(dir / "seed_3" / "checkpoint" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "seed_3" / "checkpoint" / "actor2.bin"));
  fs::remove_all(dir);
}

TEST(Suites, UnknownSuite) {
  try {
    galab::run_diagnostics("nope");
    FAIL();
  } catch (const galab::Error& e) {
    EXPECT_EQ(e.code(), galab::ErrorCode::UnknownSuite);
  }
}

TEST(Suites, OperatorRowsAndColumns) {
  const auto dir = scratch_dir("suite_op");
  galab::DiagnosticOptions o;
  o.trials = 60;
  o.out = dir.string();
  const auto rep = galab::run_diagnostics("operator", o);
  EXPECT_TRUE(rep.passed);
  EXPECT_EQ(rep.cases, 60);
  EXPECT_EQ(rep.failures, 0);
  std::ifstream is(fs::path(rep.dir) / "operator.csv");
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "trial,family,alpha,k,beta,bias,epsilon,distance,bound_M,ok");
  int rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    EXPECT_EQ(line.substr(line.rfind(',') + 1), "true");
  }
  EXPECT_EQ(rows, 60);
  EXPECT_TRUE(fs::exists(fs::path(rep.dir) / "summary.json"));
  fs::remove_all(dir);
}

TEST(Suites, SmallRunsPass) {
  const auto dir = scratch_dir("suite_small");
  for (auto [name, trials] : {std::pair{"value-iteration", 3L}, std::pair{"gradcheck", 4L}, std::pair{"bias-ordering", 20000L}}) {
    galab::DiagnosticOptions o;
    o.trials = trials;
    o.out = dir.string();
    const auto rep = galab::run_diagnostics(name, o);
    EXPECT_TRUE(rep.passed) << name << " " << rep.summary_json;
    EXPECT_GT(rep.cases, 0);
  }
  fs::remove_all(dir);
}
