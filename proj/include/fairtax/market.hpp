#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

// Consumer-side ground truth: logistic purchase probabilities, Bernoulli
// purchase realization, demand fairness and per-capita welfare, plus the
// stochastic perturbation models used in noisy experiments.

namespace fairtax {

using Rng = std::mt19937_64;

/// One consumer group served by a firm. Purchase probability at price p is
/// sigmoid(b + w * p); w < 0 gives the usual downward-sloping demand.
struct ConsumerGroup {
  double w = 0.0;       // price-sensitivity slope
  double b = 0.0;       // demand intercept
  int population = 100; // group size, >= 1
};

/// Stochastic perturbation settings. All sigmas zero == deterministic market.
struct NoiseConfig {
  double prob_sigma = 0.0;        // per-step noise on purchase probabilities
  double drift_sigma_major = 0.0; // parameter resample at period boundaries
  double drift_sigma_minor = 0.0; // parameter resample in intermediate steps
  long drift_period = 50000;      // steps between major resamples, >= 1

  static NoiseConfig none() { return {}; }
  // Values from the stochastic experiment setup: probability noise 0.05,
  // parameter drift 0.1 every 50k steps and 0.0125 in between.
  static NoiseConfig standard() { return {0.05, 0.1, 0.0125, 50000}; }
};

/// Everything realized in one market period for one firm.
struct MarketOutcome {
  double posted_price = 0.0;
  double effective_price_g1 = 0.0; // post-subsidy price faced by group 1
  double effective_price_g2 = 0.0;
  double prob_g1 = 0.0; // purchase probabilities used for the Bernoulli draws
  double prob_g2 = 0.0;
  int purchases_g1 = 0;
  int purchases_g2 = 0;
  double fairness = 0.0; // 1 - |prob_g1 - prob_g2|
  double phi = 0.0;      // realized per-capita revenue, pre-tax
  double tax_rate = 0.0;
  double swf = 0.0;      // phi * (1 - tax_rate) * fairness
};

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Purchase probability of `group` at `price` (discrete choice model).
/// Strictly inside (0, 1) for any finite price of plausible magnitude.
inline double purchase_probability(const ConsumerGroup& group, double price) {
  if (!std::isfinite(price)) {
    throw std::domain_error("purchase_probability: price must be finite");
  }
  return sigmoid(group.b + group.w * price);
}

/// Gaussian noise around `prob`, clamped back into [0, 1]. sigma == 0 is a
/// no-op and does not consume randomness.
inline double perturb_probability(double prob, double sigma, Rng& rng) {
  if (sigma <= 0.0) {
    return std::clamp(prob, 0.0, 1.0);
  }
  std::normal_distribution<double> noise(prob, sigma);
  return std::clamp(noise(rng), 0.0, 1.0);
}

/// Number of buyers out of `population` Bernoulli trials at probability `prob`.
inline int sample_purchases(int population, double prob, Rng& rng) {
  if (prob <= 0.0) return 0;
  if (prob >= 1.0) return population;
  std::binomial_distribution<int> trials(population, prob);
  return trials(rng);
}

/// Demand fairness: 1 - |gap| between the groups' purchase probabilities.
inline double fairness(double prob_g1, double prob_g2) {
  return 1.0 - std::abs(prob_g1 - prob_g2);
}

/// Social welfare of one firm: net per-capita profit times fairness.
inline double social_welfare(double phi_net, double fairness_score) {
  return phi_net * fairness_score;
}

/// Resample (w, b) around the canonical values in `group`. Major-sigma draws
/// happen every `drift_period` steps, minor-sigma draws in between. The draw
/// is always centered on the canonical parameters, so drift mean-reverts
/// instead of random-walking.
inline ConsumerGroup drift_parameters(const ConsumerGroup& group, long step,
                                      const NoiseConfig& cfg, Rng& rng) {
  if (step < 0) {
    throw std::domain_error("drift_parameters: step must be >= 0");
  }
  const long period = std::max<long>(1, cfg.drift_period);
  const double sigma =
      (step % period == 0) ? cfg.drift_sigma_major : cfg.drift_sigma_minor;
  if (sigma <= 0.0) {
    return group;
  }
  std::normal_distribution<double> noise(0.0, sigma);
  ConsumerGroup drifted = group;
  drifted.w = group.w + noise(rng);
  drifted.b = group.b + noise(rng);
  return drifted;
}

} // namespace fairtax
