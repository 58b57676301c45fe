#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "fairtax/config.hpp"
#include "fairtax/csv.hpp"
#include "fairtax/env.hpp"
#include "fairtax/replay.hpp"
#include "fairtax/sac.hpp"

// Training and evaluation drivers behind the CLI: one worker per seed, each
// owning its environment, agent and buffer, with results merged by a single
// aggregator afterwards.

namespace fairtax {

struct TrainLogRow {
  long episode = 0;
  long transitions = 0;
  long updates = 0;
  double q1_loss = 0.0, q2_loss = 0.0, actor_loss = 0.0;
  double alpha = 0.0, entropy = 0.0;
};

struct TrainSeedResult {
  uint64_t seed = 0;
  bool faulted = false;
  std::string fault_message;
  std::string checkpoint_path;
  SeedEvaluation eval;
  std::vector<TrainLogRow> log;
};

struct TrainRunResult {
  uint64_t config_hash = 0;
  std::vector<TrainSeedResult> seeds;
  EvalReport report; // aggregated over the seeds that finished

  bool any_fault() const {
    for (const TrainSeedResult& s : seeds) {
      if (s.faulted) return true;
    }
    return false;
  }
};

inline std::string run_dir(const RunConfig& cfg) {
  return cfg.out_dir + "/" + cfg.run_name();
}

inline std::string checkpoint_path(const RunConfig& cfg, uint64_t seed) {
  return run_dir(cfg) + "/checkpoint_seed" + std::to_string(seed) + ".json";
}

namespace detail {

/// Per-firm fairness that keys the replay bracket: the observed context for
/// the contextual formulations, the realized outcome for the context-free
/// bandit (whose observation is a constant zero vector).
inline std::vector<double> fairness_info(const EpisodeConfig& cfg,
                                         const std::vector<double>& obs,
                                         const StepResult& sr) {
  const size_t F = cfg.firms.size();
  if (cfg.formulation == Formulation::mab) {
    std::vector<double> f;
    f.reserve(F);
    for (const MarketOutcome& o : sr.outcomes) f.push_back(o.fairness);
    return f;
  }
  return {obs.begin(), obs.begin() + static_cast<long>(F)};
}

template <typename Buffer>
void training_loop(const RunConfig& cfg, const EpisodeConfig& env_cfg,
                   SoftActorCritic& agent, Buffer& buffer, uint64_t seed,
                   TrainSeedResult& out) {
  MarketEnv env(env_cfg);
  Rng explore(derive_seed(seed, 0xE0E0));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const long episodes = cfg.effective_train_episodes();
  const int warmup = cfg.effective_warmup();
  const int act_dim = env.action_size();
  long transitions = 0;
  long updates = 0;
  UpdateDiagnostics last{};

  for (long ep = 0; ep < episodes; ++ep) {
    std::vector<double> obs = env.reset(derive_seed(seed, static_cast<uint64_t>(ep)));
    bool done = false;
    while (!done) {
      std::vector<double> av(static_cast<size_t>(act_dim));
      if (transitions < warmup) {
        for (double& v : av) v = u01(explore);
      } else {
        av = agent.act(obs, false);
      }
      const StepResult sr = env.step(PlannerAction::from_vector(av));
      Transition t;
      t.obs = obs;
      t.action = av;
      t.reward = sr.reward;
      t.done = sr.done;
      t.next_obs = sr.next_obs;
      t.firm_fairness = fairness_info(env_cfg, obs, sr);
      buffer.add(std::move(t));
      ++transitions;
      obs = sr.next_obs;
      done = sr.done;

      if (transitions >= warmup && transitions % cfg.update_every == 0) {
        for (int g = 0; g < cfg.gradient_steps; ++g) {
          const auto diag = agent.update(buffer);
          if (diag) {
            last = *diag;
            ++updates;
          }
        }
      }
    }
    out.log.push_back({ep, transitions, updates, last.q1_loss, last.q2_loss,
                       last.actor_loss, last.alpha, last.entropy});
  }
}

} // namespace detail

/// Trains one seed end to end and evaluates the resulting deterministic
/// policy. A training fault (non-finite loss) aborts this seed only.
inline TrainSeedResult train_seed(const RunConfig& cfg, uint64_t seed) {
  TrainSeedResult result;
  result.seed = seed;
  const EpisodeConfig env_cfg = cfg.episode_config();
  SoftActorCritic agent(cfg.sac_config(derive_seed(seed, 0xA11CE)));
  try {
    if (cfg.buffer == BufferKind::fair) {
      FairReplayBuffer buffer(cfg.buffer_capacity, cfg.n_brackets);
      detail::training_loop(cfg, env_cfg, agent, buffer, seed, result);
    } else {
      FifoReplayBuffer buffer(cfg.buffer_capacity);
      detail::training_loop(cfg, env_cfg, agent, buffer, seed, result);
    }
  } catch (const training_fault& fault) {
    result.faulted = true;
    result.fault_message = fault.what();
    return result;
  }

  const Policy policy = [&agent](const std::vector<double>& obs) {
    return agent.act(obs, true);
  };
  result.eval = evaluate_seed(env_cfg, policy, cfg.eval_episodes, seed);

  std::filesystem::create_directories(run_dir(cfg));
  result.checkpoint_path = checkpoint_path(cfg, seed);
  agent.save(result.checkpoint_path, cfg.config_hash());
  return result;
}

inline void write_train_logs(const RunConfig& cfg,
                             const TrainRunResult& result) {
  const std::string hash = hash_hex(result.config_hash);
  for (const TrainSeedResult& sr : result.seeds) {
    CsvWriter log(run_dir(cfg) + "/train_log_seed" + std::to_string(sr.seed) +
                      ".csv",
                  {"config_hash", "seed", "episode", "transitions", "updates",
                   "q1_loss", "q2_loss", "actor_loss", "alpha", "entropy"});
    for (const TrainLogRow& row : sr.log) {
      log.write_row({hash, std::to_string(sr.seed), std::to_string(row.episode),
                     std::to_string(row.transitions),
                     std::to_string(row.updates), csv_num(row.q1_loss),
                     csv_num(row.q2_loss), csv_num(row.actor_loss),
                     csv_num(row.alpha), csv_num(row.entropy)});
    }
  }
}

/// Writes the aggregate-results table, per-seed summaries, learned-schedule
/// export and welfare trajectory for one evaluated run.
inline void write_eval_artifacts(const RunConfig& cfg, const EvalReport& report,
                                 const std::string& dir) {
  const std::string hash = hash_hex(cfg.config_hash());
  const std::string form = to_string(cfg.formulation);

  CsvWriter table(dir + "/report.csv",
                  {"config_hash", "formulation", "variant", "buffer", "firm",
                   "f_mean", "f_stderr", "phi_mean", "phi_stderr", "swf_mean",
                   "swf_stderr"});
  for (size_t j = 0; j < report.firm_mean.size(); ++j) {
    table.write_row({hash, form, to_string(cfg.reward_variant),
                     to_string(cfg.buffer), report.firm_mean[j].id,
                     csv_num(report.firm_mean[j].f),
                     csv_num(report.firm_stderr[j].f),
                     csv_num(report.firm_mean[j].phi),
                     csv_num(report.firm_stderr[j].phi),
                     csv_num(report.firm_mean[j].swf),
                     csv_num(report.firm_stderr[j].swf)});
  }
  table.write_row({hash, form, to_string(cfg.reward_variant),
                   to_string(cfg.buffer), "Avg", csv_num(report.avg_f_mean),
                   "", csv_num(report.avg_phi_mean), "",
                   csv_num(report.avg_swf_mean),
                   csv_num(report.avg_swf_stderr)});

  CsvWriter per_seed(dir + "/per_seed.csv",
                     {"config_hash", "seed", "avg_f", "avg_phi", "avg_swf",
                      "mean_split"});
  for (const SeedEvaluation& se : report.per_seed) {
    per_seed.write_row({hash, std::to_string(se.seed), csv_num(se.avg_f),
                        csv_num(se.avg_phi), csv_num(se.avg_swf),
                        csv_num(se.mean_split)});
  }

  CsvWriter schedule(dir + "/schedule.csv",
                     {"config_hash", "bracket_lo", "bracket_hi", "mean_rate",
                      "std_rate"});
  for (size_t b = 0; b < report.schedule_mean.size(); ++b) {
    const double width = 1.0 / static_cast<double>(cfg.n_brackets);
    schedule.write_row({hash, csv_num(b * width), csv_num((b + 1) * width),
                        csv_num(report.schedule_mean[b]),
                        csv_num(report.schedule_std[b])});
  }

  CsvWriter trajectory(dir + "/trajectory.csv",
                       {"config_hash", "step", "swf_mean"});
  for (size_t t = 0; t < report.trajectory_mean.size(); ++t) {
    trajectory.write_row({hash, std::to_string(t + 1),
                          csv_num(report.trajectory_mean[t])});
  }
}

/// Per-step trace of one deterministic evaluation episode.
inline void write_trace_csv(const RunConfig& cfg, const Policy& policy,
                            uint64_t seed, const std::string& path) {
  const EpisodeConfig env_cfg = cfg.episode_config();
  MarketEnv env(env_cfg);
  std::vector<double> obs = env.reset(derive_seed(seed, 0));
  bool done = false;
  while (!done) {
    const StepResult sr = env.step(PlannerAction::from_vector(policy(obs)));
    obs = sr.next_obs;
    done = sr.done;
  }
  CsvWriter trace(path, {"config_hash", "seed", "step", "firm", "price",
                         "effective_price_g1", "effective_price_g2", "prob_g1",
                         "prob_g2", "purchases_g1", "purchases_g2", "fairness",
                         "phi", "tax_rate", "reward"});
  const std::string hash = hash_hex(cfg.config_hash());
  for (const PeriodRecord& rec : env.trace()) {
    for (size_t j = 0; j < rec.outcomes.size(); ++j) {
      const MarketOutcome& o = rec.outcomes[j];
      trace.write_row(
          {hash, std::to_string(seed), std::to_string(rec.period),
           env_cfg.firms[j].id, csv_num(o.posted_price),
           csv_num(o.effective_price_g1), csv_num(o.effective_price_g2),
           csv_num(o.prob_g1), csv_num(o.prob_g2),
           std::to_string(o.purchases_g1), std::to_string(o.purchases_g2),
           csv_num(o.fairness), csv_num(o.phi), csv_num(o.tax_rate),
           csv_num(rec.reward)});
    }
  }
}

/// Trains every configured seed (seed-parallel) and writes all artifacts.
/// Faulted seeds are recorded and skipped by the aggregate report.
inline TrainRunResult
train_run(const RunConfig& cfg,
          const std::function<void(const TrainSeedResult&)>& on_seed_done = {}) {
  TrainRunResult result;
  result.config_hash = cfg.config_hash();
  result.seeds.resize(cfg.seeds.size());

  const int jobs =
      cfg.jobs > 0
          ? cfg.jobs
          : std::max(1u, std::min<unsigned>(
                             std::thread::hardware_concurrency(),
                             static_cast<unsigned>(cfg.seeds.size())));
  std::atomic<size_t> next{0};
  std::mutex done_mutex;
  auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= cfg.seeds.size()) return;
      result.seeds[i] = train_seed(cfg, cfg.seeds[i]);
      if (on_seed_done) {
        std::lock_guard<std::mutex> lock(done_mutex);
        on_seed_done(result.seeds[i]);
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < jobs; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  std::vector<SeedEvaluation> evals;
  for (const TrainSeedResult& sr : result.seeds) {
    if (!sr.faulted) evals.push_back(sr.eval);
  }
  if (!evals.empty()) {
    result.report =
        aggregate_evaluations(std::move(evals), cfg.firms().size(),
                              cfg.n_brackets, cfg.horizon);
  }

  write_train_logs(cfg, result);
  if (!result.report.per_seed.empty()) {
    write_eval_artifacts(cfg, result.report, run_dir(cfg));
  }
  return result;
}

/// Loads per-seed checkpoints written by train_run and re-evaluates them.
/// Refuses checkpoints whose stored config hash does not match `cfg`.
inline EvalReport eval_run(const RunConfig& cfg, const std::string& dir) {
  const EpisodeConfig env_cfg = cfg.episode_config();
  std::vector<SeedEvaluation> evals;
  for (const uint64_t seed : cfg.seeds) {
    const std::string path =
        dir + "/checkpoint_seed" + std::to_string(seed) + ".json";
    SoftActorCritic agent(cfg.sac_config(0));
    const uint64_t stored = agent.load(path);
    if (stored != cfg.config_hash()) {
      throw std::runtime_error(
          "checkpoint/config mismatch for " + path + ": stored " +
          hash_hex(stored) + ", current " + hash_hex(cfg.config_hash()));
    }
    const Policy policy = [&agent](const std::vector<double>& obs) {
      return agent.act(obs, true);
    };
    evals.push_back(evaluate_seed(env_cfg, policy, cfg.eval_episodes, seed));
    if (cfg.trace_csv) {
      write_trace_csv(cfg, policy, seed,
                      dir + "/trace_seed" + std::to_string(seed) + ".csv");
    }
  }
  return aggregate_evaluations(std::move(evals), cfg.firms().size(),
                               cfg.n_brackets, cfg.horizon);
}

} // namespace fairtax
