#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fairtax/market.hpp"

// Social-planner mechanism pieces: fairness brackets, tax schedules, budget
// accounting, subsidy-adjusted effective prices and the reward functions.

namespace fairtax {

/// Flat tax rate per fairness bracket. rates[i] applies to firms whose
/// fairness falls in bracket i.
struct TaxSchedule {
  std::vector<double> rates;

  TaxSchedule() = default;
  explicit TaxSchedule(std::vector<double> r) : rates(std::move(r)) {}
  static TaxSchedule zero(int n_brackets) {
    return TaxSchedule(std::vector<double>(static_cast<size_t>(n_brackets), 0.0));
  }
  int brackets() const { return static_cast<int>(rates.size()); }
};

/// One planner decision: a tax schedule plus the share of the collected
/// budget awarded to the underrepresented group (group 1).
struct PlannerAction {
  TaxSchedule schedule;
  double subsidy_split = 0.5; // in [0, 1]

  /// Packs/unpacks the [0,1]^{b+1} action vector used by the learner:
  /// components 0..b-1 are bracket rates, component b is the subsidy split.
  static PlannerAction from_vector(std::span<const double> v) {
    if (v.size() < 2) {
      throw std::invalid_argument("PlannerAction: need at least 2 components");
    }
    PlannerAction a;
    a.schedule.rates.assign(v.begin(), v.end() - 1);
    a.subsidy_split = v.back();
    return a;
  }
  std::vector<double> to_vector() const {
    std::vector<double> v = schedule.rates;
    v.push_back(subsidy_split);
    return v;
  }
};

/// The (fairness, profit) context the contextual bandit and RL planners
/// observe, one entry per firm.
struct WelfareContext {
  std::vector<double> fairness;
  std::vector<double> phi;

  std::vector<double> flat() const {
    std::vector<double> v = fairness;
    v.insert(v.end(), phi.begin(), phi.end());
    return v;
  }
};

/// Tax revenue carried from one period to the next.
struct Budget {
  double total = 0.0; // >= 0
  long period = 0;    // period the revenue was collected in
};

/// Equal-width fairness bracket index: floor(fairness * n), top edge clamped
/// into the last bracket. Brackets are right-open except the top one.
inline int bracket_of(double fairness_score, int n_brackets) {
  if (!(fairness_score >= 0.0 && fairness_score <= 1.0)) {
    throw std::domain_error("bracket_of: fairness outside [0, 1]");
  }
  if (n_brackets < 1) {
    throw std::domain_error("bracket_of: need at least one bracket");
  }
  const int idx = static_cast<int>(std::floor(fairness_score * n_brackets));
  return std::min(idx, n_brackets - 1);
}

/// Total tax revenue in per-capita profit units: sum of tau_j * phi_j.
inline Budget compute_budget(std::span<const double> taxes,
                             std::span<const double> phis, long period = 0) {
  if (taxes.size() != phis.size()) {
    throw std::invalid_argument("compute_budget: vector length mismatch");
  }
  Budget b;
  b.period = period;
  for (size_t j = 0; j < taxes.size(); ++j) {
    b.total += taxes[j] * phis[j];
  }
  return b;
}

/// Same revenue in currency units: per-capita phi scaled by each firm's
/// addressed population. This is the pool that gets redistributed.
inline Budget compute_budget_currency(std::span<const double> taxes,
                                      std::span<const double> phis,
                                      std::span<const int> populations,
                                      long period = 0) {
  if (taxes.size() != phis.size() || taxes.size() != populations.size()) {
    throw std::invalid_argument("compute_budget_currency: length mismatch");
  }
  Budget b;
  b.period = period;
  for (size_t j = 0; j < taxes.size(); ++j) {
    b.total += taxes[j] * phis[j] * populations[j];
  }
  return b;
}

/// Effective prices after spending a currency `budget` as consumption
/// subsidies: `split` of it goes to group 1 (size n1), the rest to group 2
/// (size n2), spread per-capita. Prices floor at zero.
inline std::pair<double, double> effective_prices(double posted, double split,
                                                  const Budget& budget, int n1,
                                                  int n2) {
  if (budget.total < 0.0) {
    throw std::domain_error("effective_prices: negative budget");
  }
  const double p1 = posted - split * budget.total / n1;
  const double p2 = posted - (1.0 - split) * budget.total / n2;
  return {std::max(p1, 0.0), std::max(p2, 0.0)};
}

/// Planner reward: mean over firms of net per-capita profit times fairness.
inline double sp_reward(std::span<const MarketOutcome> outcomes,
                        std::span<const double> taxes) {
  if (outcomes.empty() || outcomes.size() != taxes.size()) {
    throw std::invalid_argument("sp_reward: need one tax per outcome");
  }
  double sum = 0.0;
  for (size_t j = 0; j < outcomes.size(); ++j) {
    sum += outcomes[j].phi * (1.0 - taxes[j]) * outcomes[j].fairness;
  }
  return sum / static_cast<double>(outcomes.size());
}

/// Reward variant that ignores taxation: mean of gross profit times fairness.
inline double sp_reward_gross(std::span<const MarketOutcome> outcomes,
                              std::span<const double> taxes) {
  if (outcomes.empty() || outcomes.size() != taxes.size()) {
    throw std::invalid_argument("sp_reward_gross: need one tax per outcome");
  }
  double sum = 0.0;
  for (const MarketOutcome& o : outcomes) {
    sum += o.phi * o.fairness;
  }
  return sum / static_cast<double>(outcomes.size());
}

/// Discounted return sum_t gamma^{t-1} r_t.
inline double discounted_return(std::span<const double> rewards, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::domain_error("discounted_return: gamma outside [0, 1]");
  }
  double total = 0.0;
  double weight = 1.0;
  for (double r : rewards) {
    total += weight * r;
    weight *= gamma;
  }
  return total;
}

} // namespace fairtax
