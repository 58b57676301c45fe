#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairtax/env.hpp"
#include "fairtax/sac.hpp"

// One RunConfig drives everything: market setup, environment formulation,
// learner hyperparameters and the training/evaluation profile. A config hash
// over the semantically relevant fields stamps every artifact row so results
// can be traced back to the exact setup that produced them.

namespace fairtax {

enum class BufferKind { fair, fifo };

inline std::string to_string(BufferKind b) {
  return b == BufferKind::fair ? "fair" : "fifo";
}

inline Formulation parse_formulation(const std::string& s) {
  if (s == "mab") return Formulation::mab;
  if (s == "cmab") return Formulation::cmab;
  if (s == "rl") return Formulation::rl;
  throw std::invalid_argument("unknown formulation: " + s);
}

inline RewardVariant parse_reward_variant(const std::string& s) {
  if (s == "net") return RewardVariant::net_with_subsidy;
  if (s == "gross") return RewardVariant::gross;
  if (s == "net-nosubsidy") return RewardVariant::net_no_subsidy;
  throw std::invalid_argument("unknown reward variant: " + s);
}

inline BufferKind parse_buffer_kind(const std::string& s) {
  if (s == "fair") return BufferKind::fair;
  if (s == "fifo") return BufferKind::fifo;
  throw std::invalid_argument("unknown buffer kind: " + s);
}

struct RunConfig {
  // market
  double p_max = 10.0;
  int grid_resolution = 2000;
  int population = 100; // per consumer group
  std::string consumers_file; // optional override of the built-in firms

  // environment
  Formulation formulation = Formulation::rl;
  RewardVariant reward_variant = RewardVariant::net_with_subsidy;
  int n_brackets = 5;
  int horizon = 50;
  bool noiseless = false;
  double prob_sigma = 0.05;
  double drift_sigma_major = 0.1;
  double drift_sigma_minor = 0.0125;
  long drift_period = 50000;

  // learner
  BufferKind buffer = BufferKind::fair;
  size_t buffer_capacity = 100000;
  int hidden_layers = 2;
  int hidden_width = 128;
  double learning_rate = 3e-4;
  int batch_size = 128;
  double target_smoothing = 0.005;
  double gamma = 0.99; // bandit formulations run gamma = 0 internally
  bool auto_entropy = true;
  double entropy_temperature = 0.2;
  double target_entropy = 0.0; // 0 = -(action dimension)

  // training profile
  long train_episodes = 0; // 0 picks the per-formulation default
  int warmup_transitions = 0;
  int update_every = 1;   // transitions between update events
  int gradient_steps = 1; // updates per event

  // evaluation / reporting
  int eval_episodes = 5;
  std::vector<uint64_t> seeds = default_seeds();
  std::string out_dir = "out";
  int jobs = 0; // 0 = hardware concurrency
  bool trace_csv = false;

  static std::vector<uint64_t> default_seeds() {
    std::vector<uint64_t> s;
    for (uint64_t i = 1; i <= 20; ++i) s.push_back(i);
    return s;
  }

  long effective_train_episodes() const {
    if (train_episodes > 0) return train_episodes;
    return formulation == Formulation::rl ? 400 : 1500;
  }

  int effective_warmup() const {
    if (warmup_transitions > 0) return warmup_transitions;
    return formulation == Formulation::rl ? 1000 : 200;
  }

  std::vector<FirmSpec> firms() const {
    if (!consumers_file.empty()) {
      std::ifstream in(consumers_file);
      if (!in) {
        throw std::invalid_argument("cannot open consumers file: " +
                                    consumers_file);
      }
      return load_firms(in);
    }
    return default_firms(population);
  }

  EpisodeConfig episode_config() const {
    EpisodeConfig e;
    e.formulation = formulation;
    e.horizon = horizon;
    e.firms = firms();
    e.noise = noiseless
                  ? NoiseConfig::none()
                  : NoiseConfig{prob_sigma, drift_sigma_major,
                                drift_sigma_minor, drift_period};
    e.reward_variant = reward_variant;
    e.gamma = gamma;
    e.grid = PriceGrid{p_max, grid_resolution};
    e.n_brackets = n_brackets;
    return e;
  }

  SacConfig sac_config(uint64_t seed) const {
    SacConfig s;
    s.obs_dim = 2 * static_cast<int>(firms().size());
    s.act_dim = n_brackets + 1;
    s.hidden_layers = hidden_layers;
    s.hidden_width = hidden_width;
    s.lr_actor = s.lr_critic = s.lr_alpha = learning_rate;
    s.batch_size = batch_size;
    s.target_smoothing = target_smoothing;
    s.gamma = formulation == Formulation::rl ? gamma : 0.0;
    s.auto_entropy = auto_entropy;
    s.entropy_temperature = entropy_temperature;
    s.target_entropy = target_entropy;
    s.warmup_steps = effective_warmup();
    s.update_every = update_every;
    s.seed = seed;
    return s;
  }

  /// Canonical serialization of the semantically relevant knobs. Seeds,
  /// output paths and parallelism are excluded: they do not change what a
  /// single run computes.
  std::string canonical_string() const {
    char buf[1024];
    std::snprintf(
        buf, sizeof(buf),
        "pmax=%.17g;res=%d;pop=%d;consumers=%s;form=%s;variant=%s;brackets=%d;"
        "T=%d;noiseless=%d;psig=%.17g;dmaj=%.17g;dmin=%.17g;dper=%ld;"
        "buffer=%s;cap=%zu;layers=%d;width=%d;lr=%.17g;batch=%d;rho=%.17g;"
        "gamma=%.17g;autoalpha=%d;alpha0=%.17g;tent=%.17g;episodes=%ld;warmup=%d;"
        "every=%d;gsteps=%d",
        p_max, grid_resolution, population, consumers_file.c_str(),
        to_string(formulation).c_str(), to_string(reward_variant).c_str(),
        n_brackets, horizon, noiseless ? 1 : 0, prob_sigma, drift_sigma_major,
        drift_sigma_minor, drift_period, to_string(buffer).c_str(),
        buffer_capacity, hidden_layers, hidden_width, learning_rate,
        batch_size, target_smoothing, gamma, auto_entropy ? 1 : 0,
        entropy_temperature, target_entropy, effective_train_episodes(),
        effective_warmup(),
        update_every, gradient_steps);
    return buf;
  }

  uint64_t config_hash() const { return fnv1a(canonical_string()); }

  static uint64_t fnv1a(const std::string& s) {
    uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  }

  std::string run_name() const {
    return to_string(formulation) + "_" + to_string(reward_variant) + "_" +
           to_string(buffer);
  }
};

inline std::string hash_hex(uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

} // namespace fairtax
