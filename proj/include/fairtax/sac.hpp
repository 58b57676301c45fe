#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairtax/nn.hpp"
#include "fairtax/replay.hpp"

// Soft actor-critic for continuous actions in [0, 1]^d: squashed-Gaussian
// policy, twin critics with target networks, and optional automatic tuning
// of the entropy temperature. One instance owns its RNG and is meant to be
// driven from a single thread.

namespace fairtax {

struct SacConfig {
  int obs_dim = 0;
  int act_dim = 0;
  int hidden_layers = 2;
  int hidden_width = 256;
  double lr_actor = 3e-4;
  double lr_critic = 3e-4;
  double lr_alpha = 3e-4;
  int batch_size = 256;
  double target_smoothing = 0.005; // rho of the Polyak update
  double gamma = 0.99;             // 0 in the bandit formulations
  bool auto_entropy = true;
  double entropy_temperature = 0.2; // initial alpha; fixed if !auto_entropy
  double target_entropy = 0.0;      // 0 means "use -act_dim"
  int warmup_steps = 1000;          // env steps before updates start
  int update_every = 1;             // env steps per gradient step
  double log_std_min = -5.0;
  double log_std_max = 2.0;
  uint64_t seed = 0;

  double effective_target_entropy() const {
    return target_entropy != 0.0 ? target_entropy
                                 : -static_cast<double>(act_dim);
  }
};

struct UpdateDiagnostics {
  double q1_loss = 0.0;
  double q2_loss = 0.0;
  double actor_loss = 0.0;
  double alpha = 0.0;
  double entropy = 0.0; // mean of -log pi over the batch
};

/// Raised when an update produces non-finite losses.
struct training_fault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Batch {
  nn::Mat obs, act, next_obs;
  nn::Vec reward, done;

  int size() const { return static_cast<int>(obs.rows()); }
};

inline Batch make_batch(const std::vector<Transition>& transitions) {
  if (transitions.empty()) throw std::invalid_argument("make_batch: empty");
  const int n = static_cast<int>(transitions.size());
  const int od = static_cast<int>(transitions[0].obs.size());
  const int ad = static_cast<int>(transitions[0].action.size());
  Batch b;
  b.obs.resize(n, od);
  b.act.resize(n, ad);
  b.next_obs.resize(n, od);
  b.reward.resize(n);
  b.done.resize(n);
  for (int i = 0; i < n; ++i) {
    const Transition& t = transitions[static_cast<size_t>(i)];
    for (int j = 0; j < od; ++j) b.obs(i, j) = t.obs[static_cast<size_t>(j)];
    for (int j = 0; j < ad; ++j) b.act(i, j) = t.action[static_cast<size_t>(j)];
    for (int j = 0; j < od; ++j)
      b.next_obs(i, j) = t.next_obs[static_cast<size_t>(j)];
    b.reward(i) = t.reward;
    b.done(i) = t.done ? 1.0 : 0.0;
  }
  return b;
}

class SoftActorCritic {
public:
  explicit SoftActorCritic(const SacConfig& cfg)
      : cfg_(cfg), rng_(cfg.seed), actor_(actor_sizes(cfg), rng_),
        q1_(critic_sizes(cfg), rng_), q2_(critic_sizes(cfg), rng_),
        q1_target_(q1_), q2_target_(q2_),
        opt_actor_(actor_, cfg.lr_actor), opt_q1_(q1_, cfg.lr_critic),
        opt_q2_(q2_, cfg.lr_critic), opt_alpha_(cfg.lr_alpha),
        log_alpha_(std::log(std::max(cfg.entropy_temperature, 1e-8))) {
    if (cfg.obs_dim < 1 || cfg.act_dim < 1) {
      throw std::invalid_argument("SacConfig: obs_dim and act_dim required");
    }
  }

  const SacConfig& config() const { return cfg_; }
  double alpha() const { return std::exp(log_alpha_); }

  /// Re-seeds the internal RNG; lets tests and evaluations pin the exact
  /// noise sequence the next sampling pass will draw.
  void reseed(uint64_t seed) { rng_.seed(seed); }

  /// Policy action for one observation. Stochastic mode samples the squashed
  /// Gaussian; deterministic mode returns the squashed mean.
  std::vector<double> act(const std::vector<double>& obs, bool deterministic) {
    nn::Mat s(1, cfg_.obs_dim);
    for (int j = 0; j < cfg_.obs_dim; ++j) s(0, j) = obs[static_cast<size_t>(j)];
    const nn::Mat out = actor_.forward(s);
    std::vector<double> action(static_cast<size_t>(cfg_.act_dim));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int j = 0; j < cfg_.act_dim; ++j) {
      const double mu = out(0, j);
      double z = mu;
      if (!deterministic) {
        const double ls =
            std::clamp(out(0, cfg_.act_dim + j), cfg_.log_std_min, cfg_.log_std_max);
        z += std::exp(ls) * gauss(rng_);
      }
      action[static_cast<size_t>(j)] = 0.5 * (std::tanh(z) + 1.0);
    }
    return action;
  }

  /// One gradient step on both critics and the actor from a buffer sample,
  /// plus target smoothing and (optionally) a temperature step. Returns
  /// nothing when the buffer cannot produce a batch yet.
  template <typename Buffer>
  std::optional<UpdateDiagnostics> update(Buffer& buffer) {
    const auto sampled = buffer.sample(static_cast<size_t>(cfg_.batch_size), rng_);
    if (!sampled) return std::nullopt;
    return update_on(make_batch(*sampled));
  }

  UpdateDiagnostics update_on(const Batch& batch) {
    UpdateDiagnostics diag;
    const nn::Vec y = compute_targets(batch);
    std::tie(diag.q1_loss, diag.q2_loss) = critic_pass(batch, y);
    opt_q1_.step(q1_);
    opt_q2_.step(q2_);

    double mean_logpi = 0.0;
    diag.actor_loss = actor_pass(batch, mean_logpi);
    opt_actor_.step(actor_);

    if (cfg_.auto_entropy) {
      const double grad = -(mean_logpi + cfg_.effective_target_entropy());
      opt_alpha_.step(log_alpha_, grad);
    }

    q1_target_.soft_update_from(q1_, cfg_.target_smoothing);
    q2_target_.soft_update_from(q2_, cfg_.target_smoothing);

    diag.alpha = alpha();
    diag.entropy = -mean_logpi;
    if (!std::isfinite(diag.q1_loss) || !std::isfinite(diag.q2_loss) ||
        !std::isfinite(diag.actor_loss)) {
      throw training_fault("non-finite loss: q1=" + std::to_string(diag.q1_loss) +
                           " q2=" + std::to_string(diag.q2_loss) +
                           " actor=" + std::to_string(diag.actor_loss));
    }
    return diag;
  }

  /// Bellman targets r + gamma (1 - done) (min target Q - alpha log pi).
  /// With gamma == 0 this is just the reward and consumes no randomness.
  nn::Vec compute_targets(const Batch& batch) {
    if (cfg_.gamma == 0.0) return batch.reward;
    SampledAction next = sample_action(batch.next_obs);
    nn::Mat x(batch.size(), cfg_.obs_dim + cfg_.act_dim);
    x << batch.next_obs, next.action;
    const nn::Vec tq1 = q1_target_.forward(x).col(0);
    const nn::Vec tq2 = q2_target_.forward(x).col(0);
    const nn::Vec soft_value =
        tq1.cwiseMin(tq2) - alpha() * next.log_prob;
    return (batch.reward.array() +
            cfg_.gamma * (1.0 - batch.done.array()) * soft_value.array())
        .matrix();
  }

  /// MSE losses of both critics against `y`; leaves the gradients in the
  /// critic networks without applying them.
  std::pair<double, double> critic_pass(const Batch& batch, const nn::Vec& y) {
    nn::Mat x(batch.size(), cfg_.obs_dim + cfg_.act_dim);
    x << batch.obs, batch.act;
    const double inv_n = 1.0 / batch.size();
    const nn::Vec e1 = q1_.forward(x).col(0) - y;
    q1_.backward(nn::Mat(2.0 * inv_n * e1));
    const nn::Vec e2 = q2_.forward(x).col(0) - y;
    q2_.backward(nn::Mat(2.0 * inv_n * e2));
    return {e1.squaredNorm() * inv_n, e2.squaredNorm() * inv_n};
  }

  double critic_loss_value(const Batch& batch, const nn::Vec& y) {
    nn::Mat x(batch.size(), cfg_.obs_dim + cfg_.act_dim);
    x << batch.obs, batch.act;
    const nn::Vec e1 = q1_.forward(x).col(0) - y;
    return e1.squaredNorm() / batch.size();
  }

  /// Actor loss on `batch` with the gradient left in the actor network;
  /// public so the backward pass can be validated against finite
  /// differences (reseed() first to pin the sampled noise).
  double actor_loss(const Batch& batch) {
    double mean_logpi = 0.0;
    return actor_pass(batch, mean_logpi);
  }

  nn::Mlp& actor() { return actor_; }
  nn::Mlp& q1() { return q1_; }
  nn::Mlp& q2() { return q2_; }
  nn::Mlp& q1_target() { return q1_target_; }
  nn::Mlp& q2_target() { return q2_target_; }

  void save(const std::string& path, uint64_t config_hash) const {
    nlohmann::json j;
    j["format_version"] = 1;
    j["config_hash"] = config_hash;
    j["obs_dim"] = cfg_.obs_dim;
    j["act_dim"] = cfg_.act_dim;
    j["hidden_layers"] = cfg_.hidden_layers;
    j["hidden_width"] = cfg_.hidden_width;
    j["log_alpha"] = log_alpha_;
    j["actor"] = net_to_json(actor_);
    j["q1"] = net_to_json(q1_);
    j["q2"] = net_to_json(q2_);
    j["q1_target"] = net_to_json(q1_target_);
    j["q2_target"] = net_to_json(q2_target_);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << j.dump();
  }

  /// Restores weights saved with save(). Returns the stored config hash so
  /// callers can refuse mismatched checkpoints.
  uint64_t load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
    nlohmann::json j;
    in >> j;
    if (j.at("format_version").get<int>() != 1) {
      throw std::runtime_error("unsupported checkpoint version in " + path);
    }
    if (j.at("obs_dim").get<int>() != cfg_.obs_dim ||
        j.at("act_dim").get<int>() != cfg_.act_dim ||
        j.at("hidden_layers").get<int>() != cfg_.hidden_layers ||
        j.at("hidden_width").get<int>() != cfg_.hidden_width) {
      throw std::runtime_error("checkpoint shape mismatch: " + path);
    }
    log_alpha_ = j.at("log_alpha").get<double>();
    net_from_json(j.at("actor"), actor_);
    net_from_json(j.at("q1"), q1_);
    net_from_json(j.at("q2"), q2_);
    net_from_json(j.at("q1_target"), q1_target_);
    net_from_json(j.at("q2_target"), q2_target_);
    return j.at("config_hash").get<uint64_t>();
  }

private:
  struct SampledAction {
    nn::Mat action;   // squashed into [0, 1]
    nn::Vec log_prob; // per sample
    nn::Mat log_std, eps, tanh_z;
    nn::Mat clamp_mask; // 1 where the raw log-std was inside the window
  };

  static std::vector<int> actor_sizes(const SacConfig& cfg) {
    std::vector<int> s{cfg.obs_dim};
    for (int i = 0; i < cfg.hidden_layers; ++i) s.push_back(cfg.hidden_width);
    s.push_back(2 * cfg.act_dim);
    return s;
  }
  static std::vector<int> critic_sizes(const SacConfig& cfg) {
    std::vector<int> s{cfg.obs_dim + cfg.act_dim};
    for (int i = 0; i < cfg.hidden_layers; ++i) s.push_back(cfg.hidden_width);
    s.push_back(1);
    return s;
  }

  /// Reparameterized policy sample for a batch of observations. Leaves the
  /// actor's forward cache primed for a matching backward pass.
  SampledAction sample_action(const nn::Mat& obs) {
    const int n = static_cast<int>(obs.rows());
    const int d = cfg_.act_dim;
    const nn::Mat out = actor_.forward(obs);
    SampledAction s;
    const nn::Mat mu = out.leftCols(d);
    const nn::Mat raw_ls = out.rightCols(d);
    s.clamp_mask = ((raw_ls.array() >= cfg_.log_std_min) &&
                    (raw_ls.array() <= cfg_.log_std_max))
                       .cast<double>()
                       .matrix();
    s.log_std =
        raw_ls.cwiseMax(cfg_.log_std_min).cwiseMin(cfg_.log_std_max);
    s.eps.resize(n, d);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) s.eps(i, j) = gauss(rng_);
    const nn::Mat z =
        mu + s.log_std.array().exp().matrix().cwiseProduct(s.eps);
    s.tanh_z = z.array().tanh().matrix();
    s.action = (0.5 * (s.tanh_z.array() + 1.0)).matrix();
    // log pi with the tanh and affine-to-[0,1] corrections
    const auto one_minus_u2 = 1.0 - s.tanh_z.array().square();
    const nn::Mat per_dim =
        (-0.5 * s.eps.array().square() - s.log_std.array() -
         0.5 * std::log(2.0 * M_PI) - (one_minus_u2 + 1e-6).log() +
         std::log(2.0))
            .matrix();
    s.log_prob = per_dim.rowwise().sum();
    return s;
  }

  /// Actor loss mean(alpha log pi - min Q(s, a~)); leaves the gradient in
  /// the actor network and writes mean log pi for the temperature update.
  double actor_pass(const Batch& batch, double& mean_logpi) {
    const int n = batch.size();
    const int d = cfg_.act_dim;
    const double inv_n = 1.0 / n;
    const SampledAction s = sample_action(batch.obs);

    nn::Mat x(n, cfg_.obs_dim + d);
    x << batch.obs, s.action;
    const nn::Vec v1 = q1_.forward(x).col(0);
    const nn::Vec v2 = q2_.forward(x).col(0);
    const nn::Vec qmin = v1.cwiseMin(v2);

    const double a = alpha();
    mean_logpi = inv_n * s.log_prob.sum();
    const double loss = a * mean_logpi - inv_n * qmin.sum();

    // dL/da~ through whichever critic realizes the minimum, input grads only
    const nn::Vec pick1 = (v1.array() <= v2.array()).cast<double>().matrix();
    const nn::Mat dx1 = q1_.backward(nn::Mat(-inv_n * pick1));
    const nn::Mat dx2 =
        q2_.backward(nn::Mat((-inv_n * (1.0 - pick1.array())).matrix()));
    const nn::Mat dL_da = dx1.rightCols(d) + dx2.rightCols(d);

    // chain through a = (tanh(z) + 1) / 2, z = mu + exp(ls) * eps
    const auto u = s.tanh_z.array();
    const auto one_minus_u2 = 1.0 - u.square();
    const auto sigma_eps = s.log_std.array().exp() * s.eps.array();
    const double a_inv_n = a * inv_n;
    // d(log pi)/dz, shared by the mu and log-std paths
    const auto dlogpi_dz = 2.0 * u * one_minus_u2 / (one_minus_u2 + 1e-6);
    const auto dz = dL_da.array() * 0.5 * one_minus_u2 + a_inv_n * dlogpi_dz;
    const nn::Mat dmu = dz.matrix();
    const nn::Mat dls =
        ((dz * sigma_eps - a_inv_n) * s.clamp_mask.array()).matrix();
    nn::Mat dout(n, 2 * d);
    dout << dmu, dls;
    actor_.backward(dout);
    return loss;
  }

  static nlohmann::json net_to_json(const nn::Mlp& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const nn::Linear& l : net.layers()) {
      nlohmann::json jl;
      jl["rows"] = l.weight.rows();
      jl["cols"] = l.weight.cols();
      std::vector<double> w(l.weight.data(), l.weight.data() + l.weight.size());
      std::vector<double> b(l.bias.data(), l.bias.data() + l.bias.size());
      jl["weight"] = w;
      jl["bias"] = b;
      layers.push_back(std::move(jl));
    }
    return layers;
  }

  static void net_from_json(const nlohmann::json& j, nn::Mlp& net) {
    auto& layers = net.layers();
    if (j.size() != layers.size()) {
      throw std::runtime_error("checkpoint layer count mismatch");
    }
    for (size_t k = 0; k < layers.size(); ++k) {
      const auto& jl = j[k];
      nn::Linear& l = layers[k];
      if (jl.at("rows").get<long>() != l.weight.rows() ||
          jl.at("cols").get<long>() != l.weight.cols()) {
        throw std::runtime_error("checkpoint layer shape mismatch");
      }
      const auto w = jl.at("weight").get<std::vector<double>>();
      const auto b = jl.at("bias").get<std::vector<double>>();
      std::copy(w.begin(), w.end(), l.weight.data());
      std::copy(b.begin(), b.end(), l.bias.data());
    }
  }

  SacConfig cfg_;
  Rng rng_;
  nn::Mlp actor_, q1_, q2_, q1_target_, q2_target_;
  nn::Adam opt_actor_, opt_q1_, opt_q2_;
  nn::ScalarAdam opt_alpha_;
  double log_alpha_;
};

} // namespace fairtax
