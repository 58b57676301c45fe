#include "fairtax/sac.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace fairtax;

namespace {

SacConfig bandit_config(uint64_t seed, int hidden = 32) {
  SacConfig cfg;
  cfg.obs_dim = 1;
  cfg.act_dim = 1;
  cfg.hidden_layers = 2;
  cfg.hidden_width = hidden;
  cfg.batch_size = 64;
  cfg.gamma = 0.0; // single-step episodes
  cfg.warmup_steps = 200;
  cfg.seed = seed;
  return cfg;
}

// one-step environment with known optimum a* = 0.7
double bandit_reward(double a) { return 1.0 - std::abs(a - 0.7); }

Transition bandit_transition(const std::vector<double>& action, double reward) {
  Transition t;
  t.obs = {0.0};
  t.action = action;
  t.reward = reward;
  t.done = true;
  t.next_obs = {0.0};
  t.firm_fairness = {0.5};
  return t;
}

// Runs the synthetic bandit for `updates` gradient steps and returns the
// deterministic action afterwards.
double train_bandit(SoftActorCritic& agent, int updates) {
  FifoReplayBuffer buffer(100000);
  Rng explore(1234);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int done_updates = 0;
  for (int step = 0; done_updates < updates; ++step) {
    std::vector<double> a;
    if (step < agent.config().warmup_steps) {
      a = {u(explore)};
    } else {
      a = agent.act({0.0}, false);
    }
    buffer.add(bandit_transition(a, bandit_reward(a[0])));
    if (step >= agent.config().warmup_steps) {
      if (agent.update(buffer)) ++done_updates;
    }
  }
  return agent.act({0.0}, true)[0];
}

} // namespace

TEST(SacAct, ActionsAlwaysInUnitInterval) {
  SacConfig cfg;
  cfg.obs_dim = 3;
  cfg.act_dim = 6;
  cfg.hidden_width = 16;
  cfg.seed = 5;
  SoftActorCritic agent(cfg);
  for (int i = 0; i < 200; ++i) {
    const auto a = agent.act({0.1, -0.5, 2.0}, false);
    for (double v : a) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(SacAct, DeterministicModeIsRepeatable) {
  SacConfig cfg;
  cfg.obs_dim = 2;
  cfg.act_dim = 3;
  cfg.hidden_width = 16;
  cfg.seed = 6;
  SoftActorCritic agent(cfg);
  const auto a1 = agent.act({0.4, 0.9}, true);
  const auto a2 = agent.act({0.4, 0.9}, true);
  EXPECT_EQ(a1, a2);
}

TEST(SacUpdate, CriticGradientMatchesFiniteDifferences) {
  SoftActorCritic agent(bandit_config(77, 16));
  Rng rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Transition> transitions;
  for (int i = 0; i < 32; ++i) {
    const double a = u(rng);
    transitions.push_back(bandit_transition({a}, bandit_reward(a)));
  }
  const Batch batch = make_batch(transitions);
  const nn::Vec y = agent.compute_targets(batch); // gamma 0: y == rewards
  agent.critic_pass(batch, y);

  const double h = 1e-5;
  int checked = 0;
  for (size_t layer = 0; layer < agent.q1().layers().size(); ++layer) {
    nn::Linear& lin = agent.q1().layers()[layer];
    for (int probe = 0; probe < 4 && checked < 10; ++probe, ++checked) {
      const int r = (3 * probe) % static_cast<int>(lin.weight.rows());
      const int c = (5 * probe + 2) % static_cast<int>(lin.weight.cols());
      const double analytic = lin.grad_weight(r, c);
      const double saved = lin.weight(r, c);
      lin.weight(r, c) = saved + h;
      const double up = agent.critic_loss_value(batch, y);
      lin.weight(r, c) = saved - h;
      const double dn = agent.critic_loss_value(batch, y);
      lin.weight(r, c) = saved;
      const double fd = (up - dn) / (2.0 * h);
      const double tol = std::max(1e-3 * std::abs(fd), 1e-8);
      EXPECT_NEAR(analytic, fd, tol) << "layer " << layer;
    }
  }
  EXPECT_GE(checked, 10);
}

TEST(SacUpdate, ActorGradientMatchesFiniteDifferences) {
  SacConfig cfg = bandit_config(91, 8);
  cfg.obs_dim = 2;
  cfg.act_dim = 3;
  SoftActorCritic agent(cfg);
  Rng rng(55);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Transition> transitions;
  for (int i = 0; i < 16; ++i) {
    Transition t;
    t.obs = {u(rng), u(rng)};
    t.action = {u(rng), u(rng), u(rng)};
    t.reward = u(rng);
    t.done = true;
    t.next_obs = {0.0, 0.0};
    t.firm_fairness = {0.5};
    transitions.push_back(std::move(t));
  }
  const Batch batch = make_batch(transitions);

  const uint64_t noise_seed = 424242;
  agent.reseed(noise_seed);
  agent.actor_loss(batch); // leaves analytic gradients in the actor
  std::vector<double> analytic;
  std::vector<std::pair<size_t, std::pair<int, int>>> probes;
  for (size_t layer = 0; layer < agent.actor().layers().size(); ++layer) {
    nn::Linear& lin = agent.actor().layers()[layer];
    for (int p = 0; p < 4; ++p) {
      const int r = (2 * p + 1) % static_cast<int>(lin.weight.rows());
      const int c = (3 * p) % static_cast<int>(lin.weight.cols());
      probes.push_back({layer, {r, c}});
      analytic.push_back(lin.grad_weight(r, c));
    }
  }
  const double h = 1e-6;
  for (size_t i = 0; i < probes.size(); ++i) {
    nn::Linear& lin = agent.actor().layers()[probes[i].first];
    const int r = probes[i].second.first, c = probes[i].second.second;
    const double saved = lin.weight(r, c);
    lin.weight(r, c) = saved + h;
    agent.reseed(noise_seed);
    const double up = agent.actor_loss(batch);
    lin.weight(r, c) = saved - h;
    agent.reseed(noise_seed);
    const double dn = agent.actor_loss(batch);
    lin.weight(r, c) = saved;
    const double fd = (up - dn) / (2.0 * h);
    EXPECT_NEAR(analytic[i], fd,
                std::max(1e-5 * std::abs(fd), 1e-7))
        << "probe " << i;
  }
}

TEST(SacUpdate, SolvesSyntheticBandit) {
  SoftActorCritic agent(bandit_config(2024));
  const double a = train_bandit(agent, 6000);
  EXPECT_NEAR(a, 0.7, 0.07);
}

TEST(SacUpdate, ZeroLearningRatesFreezePolicy) {
  SacConfig cfg = bandit_config(11);
  cfg.lr_actor = 0.0;
  cfg.lr_critic = 0.0;
  cfg.lr_alpha = 0.0;
  cfg.target_smoothing = 0.0;
  SoftActorCritic agent(cfg);
  const auto before = agent.act({0.0}, true);
  FifoReplayBuffer buffer(1000);
  Rng rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    const double a = u(rng);
    buffer.add(bandit_transition({a}, bandit_reward(a)));
  }
  for (int i = 0; i < 50; ++i) {
    ASSERT_TRUE(agent.update(buffer).has_value());
  }
  EXPECT_EQ(agent.act({0.0}, true), before);
}

TEST(SacUpdate, HotterTemperatureSpreadsActions) {
  SacConfig cold_cfg = bandit_config(31);
  cold_cfg.auto_entropy = false;
  cold_cfg.entropy_temperature = 0.02;
  SacConfig hot_cfg = bandit_config(31);
  hot_cfg.auto_entropy = false;
  hot_cfg.entropy_temperature = 1.0;

  SoftActorCritic cold(cold_cfg), hot(hot_cfg);
  train_bandit(cold, 3000);
  train_bandit(hot, 3000);

  auto spread = [](SoftActorCritic& agent) {
    double sum = 0.0, sq = 0.0;
    const int n = 2000;
    for (int i = 0; i < n; ++i) {
      const double a = agent.act({0.0}, false)[0];
      sum += a;
      sq += a * a;
    }
    const double mean = sum / n;
    return std::sqrt(std::max(sq / n - mean * mean, 0.0));
  };
  EXPECT_GT(spread(hot), 2.0 * spread(cold));
}

TEST(SacUpdate, DeterministicTrainingTrajectory) {
  auto run = [](uint64_t seed) {
    SoftActorCritic agent(bandit_config(seed));
    FifoReplayBuffer buffer(1000);
    Rng rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 300; ++i) {
      const double a = u(rng);
      buffer.add(bandit_transition({a}, bandit_reward(a)));
    }
    std::vector<double> losses;
    for (int i = 0; i < 40; ++i) {
      const auto diag = agent.update(buffer);
      losses.push_back(diag->q1_loss);
      losses.push_back(diag->actor_loss);
    }
    return losses;
  };
  const auto a = run(123);
  const auto b = run(123);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]) << i;
}

TEST(SacUpdate, TrainingFaultOnPoisonedReward) {
  SoftActorCritic agent(bandit_config(13));
  FifoReplayBuffer buffer(1000);
  for (int i = 0; i < 300; ++i) {
    buffer.add(bandit_transition({0.5}, std::numeric_limits<double>::quiet_NaN()));
  }
  EXPECT_THROW(
      {
        for (int i = 0; i < 5; ++i) agent.update(buffer);
      },
      training_fault);
}

TEST(SacCheckpoint, RoundTripReproducesActionsExactly) {
  SoftActorCritic agent(bandit_config(55));
  train_bandit(agent, 500);
  const std::string path =
      (std::filesystem::temp_directory_path() / "sac_ckpt_test.json").string();
  agent.save(path, 0xABCDEF12u);

  SacConfig other = bandit_config(999); // different init
  SoftActorCritic restored(other);
  const uint64_t hash = restored.load(path);
  EXPECT_EQ(hash, 0xABCDEF12u);
  for (double obs : {0.0, 0.3, -1.0}) {
    EXPECT_EQ(agent.act({obs}, true), restored.act({obs}, true));
  }
  std::remove(path.c_str());
}

TEST(SacCheckpoint, RejectsShapeMismatch) {
  SoftActorCritic agent(bandit_config(56));
  const std::string path =
      (std::filesystem::temp_directory_path() / "sac_ckpt_shape.json").string();
  agent.save(path, 1);
  SacConfig bigger = bandit_config(57, 64);
  SoftActorCritic other(bigger);
  EXPECT_THROW(other.load(path), std::runtime_error);
  std::remove(path.c_str());
}
