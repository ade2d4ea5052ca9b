#include <gtest/gtest.h>

#include "galab/config.hpp"
#include "galab/error.hpp"

namespace {

std::string error_text(const std::string& text) {
  try {
    galab::parse_experiment_config(text, "exp.toml");
  } catch (const galab::Error& e) {
    EXPECT_EQ(e.code(), galab::ErrorCode::ConfigError);
    return e.what();
  }
  ADD_FAILURE() << "config accepted: " << text;
  return {};
}

}  // namespace

TEST(ConfigText, ScalarsArraysTables) {
  const auto t = galab::parse_config_text(R"(
# comment
name = "a \"q\" b"   # trailing
n = 1_000
x = -2.5e-3
flag = true
list = [1, 2,
        3]
inline = { a = 1, b = "two" }

[section]
k = false
)");
  EXPECT_EQ(std::get<std::string>(t.at("name").data), "a \"q\" b");
  EXPECT_EQ(std::get<double>(t.at("n").data), 1000.0);
  EXPECT_EQ(std::get<double>(t.at("x").data), -2.5e-3);
  EXPECT_TRUE(std::get<bool>(t.at("flag").data));
  EXPECT_EQ(t.at("list").array().size(), 3u);
  EXPECT_EQ(std::get<std::string>(t.at("inline").table().at("b").data), "two");
  EXPECT_FALSE(std::get<bool>(t.at("section").table().at("k").data));
  EXPECT_EQ(t.at("flag").line, 6);
}

TEST(ConfigText, Errors) {
  EXPECT_THROW(galab::parse_config_text("a = 1\na = 2\n"), galab::Error);
  EXPECT_THROW(galab::parse_config_text("a = \"open\n"), galab::Error);
  EXPECT_THROW(galab::parse_config_text("a = [1, 2\n"), galab::Error);
  EXPECT_THROW(galab::parse_config_text("= 3\n"), galab::Error);
  EXPECT_THROW(galab::parse_config_text("a = 1.2.3\n"), galab::Error);
}

TEST(ExperimentConfig, FullExample) {
  const auto c = galab::parse_experiment_config(R"(
env = "pointmass1d"
algorithm = "gd3"
total_steps = 2000
eval_interval = 500
eval_episodes = 3
seeds = [4, 5]
out = "runs/x"
activation = { family = "poly", alpha = 0.05, k = 2, bias = 2.0 }

[agent]
hidden = [32, 16]
batch_size = 64
lr = 3e-4
noise_count = 10
warmup_steps = 100

[bias]
cadence = 250
n_states = 8
n_rollouts = 2
)");
  EXPECT_EQ(c.env, "pointmass1d");
  EXPECT_EQ(c.agent.algorithm, galab::Algorithm::GD3);
  EXPECT_EQ(c.total_steps, 2000);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{4, 5}));
  EXPECT_EQ(c.agent.actor_hidden, (std::vector<int>{32, 16}));
  EXPECT_EQ(c.agent.critic_hidden, (std::vector<int>{32, 16}));
  EXPECT_EQ(c.agent.actor_lr, 3e-4);
  EXPECT_EQ(c.agent.critic_lr, 3e-4);
  EXPECT_EQ(c.agent.activation.family, galab::ActivationFamily::Polynomial);
  EXPECT_EQ(c.agent.activation.alpha, 0.05);
  EXPECT_EQ(c.agent.activation.k, 2.0);
  EXPECT_EQ(c.agent.activation.bias, 2.0);
  EXPECT_EQ(c.bias.cadence, 250);
  EXPECT_FALSE(c.source_text.empty());
}

TEST(ExperimentConfig, Defaults) {
  const auto c = galab::parse_experiment_config("env = \"bandit\"\n");
  EXPECT_EQ(c.eval_interval, 5000);
  EXPECT_EQ(c.eval_episodes, 10);
  EXPECT_EQ(c.seeds.size(), 5u);
  EXPECT_EQ(c.bias.cadence, 10000);
  EXPECT_EQ(c.bias.n_states, 64);
  EXPECT_EQ(c.bias.n_rollouts, 10);
}

TEST(ExperimentConfig, ActivationSection) {
  const auto c = galab::parse_experiment_config("algorithm = \"gd2\"\n[activation]\nfamily = \"tanh\"\nbeta = 0.1\nbias = 2\n");
  EXPECT_EQ(c.agent.activation.family, galab::ActivationFamily::Tanh);
  EXPECT_EQ(c.agent.activation.beta, 0.1);
}

TEST(ExperimentConfig, ErrorsNameLineAndKey) {
  const auto unknown = error_text("env = \"pendulum\"\ntotal_stepz = 5\n");
  EXPECT_NE(unknown.find("exp.toml:2"), std::string::npos) << unknown;
  EXPECT_NE(unknown.find("total_stepz"), std::string::npos) << unknown;

  const auto type = error_text("total_steps = \"many\"\n");
  EXPECT_NE(type.find("exp.toml:1"), std::string::npos) << type;
  EXPECT_NE(type.find("total_steps"), std::string::npos) << type;

  const auto env = error_text("env = \"hopper\"\n");
  EXPECT_NE(env.find("hopper"), std::string::npos) << env;

  const auto alg = error_text("\nalgorithm = \"sac\"\n");
  EXPECT_NE(alg.find("exp.toml:2"), std::string::npos) << alg;

  const auto act = error_text("activation = { family = \"poly\", alpha = -1, k = 2, bias = 1 }\n");
  EXPECT_NE(act.find("activation"), std::string::npos) << act;

  const auto nested = error_text("[agent]\nbatch_size = 10\ngamma = 1.5\n");
  EXPECT_NE(nested.find("gamma"), std::string::npos) << nested;

  error_text("seeds = []\n");
  error_text("eval_interval = 0\n");
  error_text("[agent]\nbatch_size = 1.5\n");
}

TEST(ExperimentConfig, MissingFile) {
  EXPECT_THROW(galab::load_experiment_config("/nonexistent/file.toml"), galab::Error);
}
