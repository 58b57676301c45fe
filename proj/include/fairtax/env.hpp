#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairtax/firm.hpp"
#include "fairtax/market.hpp"
#include "fairtax/planner.hpp"

// The three policy-scenario environments behind one episodic interface.
// A fixed mechanism (multi-armed bandit) holds one action over the whole
// horizon and pays out the settled final-period welfare; the contextual
// bandit does the same but observes the market first; the full RL variant
// re-decides the mechanism every period.

namespace fairtax {

enum class Formulation { mab, cmab, rl };
enum class RewardVariant { net_with_subsidy, gross, net_no_subsidy };

inline std::string to_string(Formulation f) {
  switch (f) {
  case Formulation::mab: return "mab";
  case Formulation::cmab: return "cmab";
  default: return "rl";
  }
}
inline std::string to_string(RewardVariant v) {
  switch (v) {
  case RewardVariant::net_with_subsidy: return "net";
  case RewardVariant::gross: return "gross";
  default: return "net-nosubsidy";
  }
}

struct EpisodeConfig {
  Formulation formulation = Formulation::mab;
  int horizon = 50; // planner-governed periods per episode
  std::vector<FirmSpec> firms = default_firms();
  NoiseConfig noise = NoiseConfig::none();
  RewardVariant reward_variant = RewardVariant::net_with_subsidy;
  double gamma = 0.99;
  PriceGrid grid;
  int n_brackets = 5;
};

struct StepResult {
  std::vector<double> next_obs;
  double reward = 0.0;
  bool done = false;
  std::vector<MarketOutcome> outcomes; // one per firm, from the last period run
};

/// Everything that happened in one market period, for traces and audits.
struct PeriodRecord {
  long period = 0; // 0 is the untaxed warm-up period
  std::vector<MarketOutcome> outcomes;
  double reward = 0.0;
  double tax_collected = 0.0;      // currency, collected this period
  double subsidy_distributed = 0.0; // currency, spent this period
  PlannerAction action;
};

/// splitmix64, used to derive independent per-episode seeds.
inline uint64_t derive_seed(uint64_t base, uint64_t stream) {
  uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class MarketEnv {
public:
  explicit MarketEnv(EpisodeConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.firms.empty()) throw std::invalid_argument("MarketEnv: no firms");
    if (cfg_.horizon < 1) throw std::invalid_argument("MarketEnv: horizon < 1");
    for (const FirmSpec& f : cfg_.firms) {
      pop1_ += f.group1.population;
      pop2_ += f.group2.population;
    }
  }

  const EpisodeConfig& config() const { return cfg_; }
  int observation_size() const {
    return 2 * static_cast<int>(cfg_.firms.size());
  }
  int action_size() const { return cfg_.n_brackets + 1; }

  /// Starts a fresh episode: canonical firm parameters, zero budget, and one
  /// untaxed warm-up period that provides the initial welfare context. The
  /// bandit formulation observes a constant zero vector instead.
  std::vector<double> reset(uint64_t seed) {
    rng_.seed(seed);
    period_ = 0;
    steps_taken_ = 0;
    budget_currency_ = 0.0;
    trace_.clear();
    PlannerAction untaxed;
    untaxed.schedule = TaxSchedule::zero(cfg_.n_brackets);
    untaxed.subsidy_split = 0.5;
    const PeriodRecord warmup = run_period(untaxed);
    ready_ = true;
    return observation_from(warmup);
  }

  StepResult step(const PlannerAction& action) {
    if (!ready_) throw std::logic_error("MarketEnv: step before reset");
    validate(action);
    StepResult result;
    if (cfg_.formulation == Formulation::rl) {
      const PeriodRecord rec = run_period(action);
      ++steps_taken_;
      result.reward = rec.reward;
      result.outcomes = rec.outcomes;
      result.next_obs = observation_from(rec);
      result.done = steps_taken_ >= cfg_.horizon;
    } else {
      if (steps_taken_ > 0) {
        throw std::logic_error("MarketEnv: bandit episode already finished");
      }
      PeriodRecord rec;
      for (int t = 0; t < cfg_.horizon; ++t) {
        rec = run_period(action);
      }
      ++steps_taken_;
      result.reward = rec.reward; // settled outcome at the final period
      result.outcomes = rec.outcomes;
      result.next_obs = observation_from(rec);
      result.done = true;
    }
    if (result.done) ready_ = false;
    return result;
  }

  /// Per-period records of the running episode, warm-up included.
  const std::vector<PeriodRecord>& trace() const { return trace_; }

private:
  void validate(const PlannerAction& action) const {
    if (action.schedule.brackets() != cfg_.n_brackets) {
      throw std::invalid_argument("PlannerAction: expected " +
                                  std::to_string(cfg_.n_brackets) +
                                  " bracket rates, got " +
                                  std::to_string(action.schedule.brackets()));
    }
    for (double r : action.schedule.rates) {
      if (!(r >= 0.0 && r <= 1.0)) {
        throw std::invalid_argument("PlannerAction: tax rate outside [0, 1]");
      }
    }
    if (!(action.subsidy_split >= 0.0 && action.subsidy_split <= 1.0)) {
      throw std::invalid_argument("PlannerAction: subsidy split outside [0, 1]");
    }
  }

  std::vector<double> observation_from(const PeriodRecord& rec) const {
    if (cfg_.formulation == Formulation::mab) {
      return std::vector<double>(static_cast<size_t>(observation_size()), 0.0);
    }
    WelfareContext ctx;
    for (const MarketOutcome& o : rec.outcomes) {
      ctx.fairness.push_back(o.fairness);
      ctx.phi.push_back(o.phi); // pre-tax; the tax applies after observation
    }
    return ctx.flat();
  }

  PeriodRecord run_period(const PlannerAction& action) {
    PeriodRecord rec;
    rec.period = period_;
    rec.action = action;

    // budget collected last period becomes this period's subsidies
    Subsidies subs;
    if (cfg_.reward_variant == RewardVariant::net_with_subsidy &&
        budget_currency_ > 0.0) {
      subs.group1 = action.subsidy_split * budget_currency_ / pop1_;
      subs.group2 = (1.0 - action.subsidy_split) * budget_currency_ / pop2_;
      rec.subsidy_distributed = subs.group1 * pop1_ + subs.group2 * pop2_;
    }

    std::vector<double> taxes;
    taxes.reserve(cfg_.firms.size());
    for (const FirmSpec& canonical : cfg_.firms) {
      FirmSpec firm = canonical;
      firm.group1 = drift_parameters(canonical.group1, period_, cfg_.noise, rng_);
      firm.group2 = drift_parameters(canonical.group2, period_, cfg_.noise, rng_);

      const PricingDecision dec =
          best_response(firm, action.schedule, subs, cfg_.grid);

      MarketOutcome o;
      o.posted_price = dec.price;
      o.effective_price_g1 = std::max(dec.price - subs.group1, 0.0);
      o.effective_price_g2 = std::max(dec.price - subs.group2, 0.0);
      o.prob_g1 = perturb_probability(
          purchase_probability(firm.group1, o.effective_price_g1),
          cfg_.noise.prob_sigma, rng_);
      o.prob_g2 = perturb_probability(
          purchase_probability(firm.group2, o.effective_price_g2),
          cfg_.noise.prob_sigma, rng_);
      o.purchases_g1 = sample_purchases(firm.group1.population, o.prob_g1, rng_);
      o.purchases_g2 = sample_purchases(firm.group2.population, o.prob_g2, rng_);
      o.fairness = fairness(o.prob_g1, o.prob_g2);
      o.phi = dec.price *
              static_cast<double>(o.purchases_g1 + o.purchases_g2) /
              firm.population();
      o.tax_rate = action.schedule.rates[static_cast<size_t>(
          bracket_of(o.fairness, cfg_.n_brackets))];
      o.swf = social_welfare(o.phi * (1.0 - o.tax_rate), o.fairness);
      taxes.push_back(o.tax_rate);
      rec.outcomes.push_back(o);
    }

    rec.reward = (cfg_.reward_variant == RewardVariant::gross)
                     ? sp_reward_gross(rec.outcomes, taxes)
                     : sp_reward(rec.outcomes, taxes);

    std::vector<double> phis;
    std::vector<int> pops;
    for (const MarketOutcome& o : rec.outcomes) phis.push_back(o.phi);
    for (const FirmSpec& f : cfg_.firms) pops.push_back(f.population());
    rec.tax_collected =
        compute_budget_currency(taxes, phis, pops, period_).total;
    // appendix variants collect the tax but never reinject it
    budget_currency_ = (cfg_.reward_variant == RewardVariant::net_with_subsidy)
                           ? rec.tax_collected
                           : 0.0;

    ++period_;
    trace_.push_back(rec);
    return rec;
  }

  EpisodeConfig cfg_;
  Rng rng_;
  long period_ = 0;
  int steps_taken_ = 0;
  double budget_currency_ = 0.0;
  int pop1_ = 0, pop2_ = 0;
  bool ready_ = false;
  std::vector<PeriodRecord> trace_;
};

/// Deterministic policy interface used by evaluation: observation in,
/// action vector in [0,1]^{b+1} out.
using Policy = std::function<std::vector<double>(const std::vector<double>&)>;

struct FirmEvalStats {
  std::string id;
  double f = 0.0;
  double phi = 0.0; // net of tax under the net variants, gross otherwise
  double swf = 0.0; // f * phi
};

struct SeedEvaluation {
  uint64_t seed = 0;
  std::vector<FirmEvalStats> firms;
  double avg_f = 0.0;
  double avg_phi = 0.0;
  double avg_swf = 0.0; // avg_f * avg_phi, the summary-table convention
  double mean_split = 0.0;
  // the learned schedule as a response map: rate the policy assigns to
  // bracket i when the market context sits at bracket i's fairness center
  std::vector<double> schedule_mean;
  // plain time-average of the action's rate components over the rollout
  std::vector<double> visited_rate_mean;
  std::vector<double> swf_trajectory; // per planner-governed period
};

struct EvalReport {
  std::vector<SeedEvaluation> per_seed;
  std::vector<FirmEvalStats> firm_mean;
  std::vector<FirmEvalStats> firm_stderr;
  double avg_swf_mean = 0.0;
  double avg_swf_stderr = 0.0;
  double avg_f_mean = 0.0;
  double avg_phi_mean = 0.0;
  double split_mean = 0.0;
  std::vector<double> schedule_mean;      // response map, mean across seeds
  std::vector<double> schedule_std;       // across seeds
  std::vector<double> visited_rate_mean;  // raw action-component average
  std::vector<double> trajectory_mean;    // across seeds
};

/// Deterministic-policy rollouts for one seed, aggregated the way the
/// summary tables report them: per-firm time means of fairness and
/// (variant-appropriate) profit, per-firm welfare as their product, and the
/// average welfare as the product of the averaged columns.
inline SeedEvaluation evaluate_seed(const EpisodeConfig& cfg,
                                    const Policy& policy,
                                    int episodes_per_seed, uint64_t seed) {
  if (episodes_per_seed < 1) {
    throw std::invalid_argument("evaluate_seed: need at least one episode");
  }
  const size_t F = cfg.firms.size();
  const bool gross = cfg.reward_variant == RewardVariant::gross;

  SeedEvaluation se;
  se.seed = seed;
  se.firms.resize(F);
  for (size_t j = 0; j < F; ++j) se.firms[j].id = cfg.firms[j].id;
  se.schedule_mean.assign(static_cast<size_t>(cfg.n_brackets), 0.0);
  se.visited_rate_mean.assign(static_cast<size_t>(cfg.n_brackets), 0.0);
  se.swf_trajectory.assign(static_cast<size_t>(cfg.horizon), 0.0);
  long action_count = 0;
  long period_count = 0;

  MarketEnv env(cfg);
  for (int ep = 0; ep < episodes_per_seed; ++ep) {
    std::vector<double> obs = env.reset(derive_seed(seed, ep));
    bool done = false;
    while (!done) {
      const std::vector<double> av = policy(obs);
      const PlannerAction action = PlannerAction::from_vector(av);
      for (int b = 0; b < cfg.n_brackets; ++b) {
        se.visited_rate_mean[static_cast<size_t>(b)] +=
            action.schedule.rates[static_cast<size_t>(b)];
      }
      se.mean_split += action.subsidy_split;
      ++action_count;
      const StepResult sr = env.step(action);
      obs = sr.next_obs;
      done = sr.done;
    }
    // fold in the trace, skipping the warm-up period
    const auto& trace = env.trace();
    for (size_t t = 1; t < trace.size(); ++t) {
      const PeriodRecord& rec = trace[t];
      double f_sum = 0.0, phi_sum = 0.0;
      for (size_t j = 0; j < F; ++j) {
        const MarketOutcome& o = rec.outcomes[j];
        const double phi_reported = gross ? o.phi : o.phi * (1.0 - o.tax_rate);
        se.firms[j].f += o.fairness;
        se.firms[j].phi += phi_reported;
        f_sum += o.fairness;
        phi_sum += phi_reported;
      }
      se.swf_trajectory[t - 1] +=
          (f_sum / F) * (phi_sum / F) / episodes_per_seed;
      ++period_count;
    }
  }

  for (size_t j = 0; j < F; ++j) {
    se.firms[j].f /= period_count;
    se.firms[j].phi /= period_count;
    se.firms[j].swf = se.firms[j].f * se.firms[j].phi;
    se.avg_f += se.firms[j].f / F;
    se.avg_phi += se.firms[j].phi / F;
  }
  se.avg_swf = se.avg_f * se.avg_phi;
  se.mean_split /= action_count;
  for (double& r : se.visited_rate_mean) r /= action_count;

  // response-map readout of the learned schedule: what the policy assigns
  // to bracket i when every firm's context fairness sits at the center of
  // bracket i (profit context held at the untaxed optima). The context-free
  // bandit keeps its constant observation, so the readout is its one action.
  std::vector<double> probe(static_cast<size_t>(2 * F), 0.0);
  if (cfg.formulation != Formulation::mab) {
    for (size_t j = 0; j < F; ++j) {
      probe[F + j] = optimize_agnostic(cfg.firms[j], cfg.grid).phi;
    }
  }
  for (int b = 0; b < cfg.n_brackets; ++b) {
    if (cfg.formulation != Formulation::mab) {
      const double center = (b + 0.5) / cfg.n_brackets;
      for (size_t j = 0; j < F; ++j) probe[j] = center;
    }
    const std::vector<double> av = policy(probe);
    se.schedule_mean[static_cast<size_t>(b)] = av[static_cast<size_t>(b)];
  }
  return se;
}

/// Cross-seed aggregation of per-seed evaluations (means and standard
/// errors over seeds).
inline EvalReport aggregate_evaluations(std::vector<SeedEvaluation> per_seed,
                                        size_t F, int n_brackets,
                                        int horizon) {
  if (per_seed.empty()) {
    throw std::invalid_argument("aggregate_evaluations: no seed evaluations");
  }
  EvalReport report;
  report.per_seed = std::move(per_seed);
  const size_t S = report.per_seed.size();
  const size_t B = static_cast<size_t>(n_brackets);
  report.firm_mean.resize(F);
  report.firm_stderr.resize(F);
  report.schedule_mean.assign(B, 0.0);
  report.schedule_std.assign(B, 0.0);
  report.visited_rate_mean.assign(B, 0.0);
  report.trajectory_mean.assign(static_cast<size_t>(horizon), 0.0);
  for (size_t j = 0; j < F; ++j) {
    report.firm_mean[j].id = report.per_seed[0].firms[j].id;
    report.firm_stderr[j].id = report.per_seed[0].firms[j].id;
  }
  for (const SeedEvaluation& se : report.per_seed) {
    for (size_t j = 0; j < F; ++j) {
      report.firm_mean[j].f += se.firms[j].f / S;
      report.firm_mean[j].phi += se.firms[j].phi / S;
      report.firm_mean[j].swf += se.firms[j].swf / S;
    }
    report.avg_swf_mean += se.avg_swf / S;
    report.avg_f_mean += se.avg_f / S;
    report.avg_phi_mean += se.avg_phi / S;
    report.split_mean += se.mean_split / S;
    for (size_t b = 0; b < B; ++b) {
      report.schedule_mean[b] += se.schedule_mean[b] / S;
      report.visited_rate_mean[b] += se.visited_rate_mean[b] / S;
    }
    for (size_t t = 0; t < se.swf_trajectory.size(); ++t) {
      report.trajectory_mean[t] += se.swf_trajectory[t] / S;
    }
  }
  if (S > 1) {
    double var_avg = 0.0;
    std::vector<double> var_f(F, 0.0), var_phi(F, 0.0), var_swf(F, 0.0);
    std::vector<double> var_sched(B, 0.0);
    for (const SeedEvaluation& se : report.per_seed) {
      var_avg += std::pow(se.avg_swf - report.avg_swf_mean, 2);
      for (size_t j = 0; j < F; ++j) {
        var_f[j] += std::pow(se.firms[j].f - report.firm_mean[j].f, 2);
        var_phi[j] += std::pow(se.firms[j].phi - report.firm_mean[j].phi, 2);
        var_swf[j] += std::pow(se.firms[j].swf - report.firm_mean[j].swf, 2);
      }
      for (size_t b = 0; b < B; ++b) {
        var_sched[b] +=
            std::pow(se.schedule_mean[b] - report.schedule_mean[b], 2);
      }
    }
    report.avg_swf_stderr = std::sqrt(var_avg / (S - 1) / S);
    for (size_t j = 0; j < F; ++j) {
      report.firm_stderr[j].f = std::sqrt(var_f[j] / (S - 1) / S);
      report.firm_stderr[j].phi = std::sqrt(var_phi[j] / (S - 1) / S);
      report.firm_stderr[j].swf = std::sqrt(var_swf[j] / (S - 1) / S);
    }
    for (size_t b = 0; b < B; ++b) {
      report.schedule_std[b] = std::sqrt(var_sched[b] / (S - 1));
    }
  }
  return report;
}

/// Deterministic-policy rollouts over several seeds with cross-seed means
/// and standard errors, in the shape of the aggregate results tables.
inline EvalReport evaluate(const EpisodeConfig& cfg, const Policy& policy,
                           int episodes_per_seed,
                           std::span<const uint64_t> seeds) {
  if (seeds.empty()) throw std::invalid_argument("evaluate: no seeds");
  std::vector<SeedEvaluation> per_seed;
  per_seed.reserve(seeds.size());
  for (const uint64_t seed : seeds) {
    per_seed.push_back(evaluate_seed(cfg, policy, episodes_per_seed, seed));
  }
  return aggregate_evaluations(std::move(per_seed), cfg.firms.size(),
                               cfg.n_brackets, cfg.horizon);
}

} // namespace fairtax
