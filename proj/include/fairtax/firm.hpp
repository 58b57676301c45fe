#pragma once

#include <cmath>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairtax/market.hpp"
#include "fairtax/planner.hpp"

// Oracle price optimizers for the three firm objectives: plain revenue
// maximization, self-regulating revenue * fairness maximization, and the
// net-profit best response under an incumbent tax-and-subsidy mechanism.
// Firms optimize against expected demand; realized purchases are sampled
// separately by the environment.

namespace fairtax {

/// A firm and the two consumer groups it prices for. Group 1 is the more
/// price-sensitive (underrepresented) group.
struct FirmSpec {
  std::string id;
  ConsumerGroup group1;
  ConsumerGroup group2;

  int population() const { return group1.population + group2.population; }
};

/// Candidate prices: `resolution` equally spaced points spanning (0, p_max].
struct PriceGrid {
  double p_max = 10.0;
  int resolution = 2000;

  double point(int i) const {
    return p_max * static_cast<double>(i + 1) / resolution;
  }
};

/// Per-capita subsidies lowering each group's effective price.
struct Subsidies {
  double group1 = 0.0;
  double group2 = 0.0;
};

/// Result of a firm-side price optimization, evaluated on expected demand.
struct PricingDecision {
  double price = 0.0;
  double fairness = 0.0; // on subsidy-adjusted expected probabilities
  double phi = 0.0;      // expected per-capita revenue at `price`, pre-tax
  double tax_rate = 0.0; // bracket rate the firm anticipates paying
};

namespace detail {

struct DemandPoint {
  double prob1, prob2, phi, fairness;
};

inline DemandPoint demand_at(const FirmSpec& firm, double price,
                             const Subsidies& s) {
  DemandPoint d;
  d.prob1 = purchase_probability(firm.group1, std::max(price - s.group1, 0.0));
  d.prob2 = purchase_probability(firm.group2, std::max(price - s.group2, 0.0));
  const double n1 = firm.group1.population;
  const double n2 = firm.group2.population;
  d.phi = price * (n1 * d.prob1 + n2 * d.prob2) / (n1 + n2);
  d.fairness = fairness(d.prob1, d.prob2);
  return d;
}

} // namespace detail

/// Expected per-capita revenue at `price`. The firm collects the full posted
/// price; subsidies only lower the effective price consumers respond to.
inline double expected_phi(const FirmSpec& firm, double price,
                           const Subsidies& subsidies = {}) {
  if (!(price > 0.0) || !std::isfinite(price)) {
    throw std::domain_error("expected_phi: price must be positive and finite");
  }
  return detail::demand_at(firm, price, subsidies).phi;
}

/// Revenue-maximizing price: exhaustive argmax over the grid, ties broken
/// toward the lower price.
inline PricingDecision optimize_agnostic(const FirmSpec& firm,
                                         const PriceGrid& grid) {
  PricingDecision best;
  double best_obj = -1.0;
  for (int i = 0; i < grid.resolution; ++i) {
    const double p = grid.point(i);
    const detail::DemandPoint d = detail::demand_at(firm, p, {});
    if (d.phi > best_obj) {
      best_obj = d.phi;
      best = {p, d.fairness, d.phi, 0.0};
    }
  }
  return best;
}

/// Welfare-maximizing price for the self-regulating firm: ascends the
/// revenue * fairness objective on the grid, starting from the midpoint of
/// the price range and stopping at the first local optimum. The objective is
/// typically multimodal; the midpoint start selects the solution branch the
/// reference baselines are computed on.
inline PricingDecision optimize_aware(const FirmSpec& firm,
                                      const PriceGrid& grid) {
  std::vector<double> objective(static_cast<size_t>(grid.resolution));
  for (int i = 0; i < grid.resolution; ++i) {
    const detail::DemandPoint d = detail::demand_at(firm, grid.point(i), {});
    objective[static_cast<size_t>(i)] = d.phi * d.fairness;
  }
  int i = grid.resolution / 2 - 1; // grid point at p_max / 2
  while (true) {
    if (i + 1 < grid.resolution && objective[i + 1] > objective[i]) {
      ++i;
    } else if (i - 1 >= 0 && objective[i - 1] > objective[i]) {
      --i;
    } else {
      break;
    }
  }
  const detail::DemandPoint d = detail::demand_at(firm, grid.point(i), {});
  return {grid.point(i), d.fairness, d.phi, 0.0};
}

/// Net-profit best response to an incumbent mechanism: argmax over the grid
/// of expected phi * (1 - tax), where the tax bracket is determined by the
/// fairness of the subsidy-adjusted expected probabilities at each candidate
/// price. Ties break toward the lower price.
inline PricingDecision best_response(const FirmSpec& firm,
                                     const TaxSchedule& schedule,
                                     const Subsidies& subsidies,
                                     const PriceGrid& grid) {
  if (schedule.brackets() < 1) {
    throw std::invalid_argument("best_response: empty tax schedule");
  }
  PricingDecision best;
  double best_obj = -1.0;
  for (int i = 0; i < grid.resolution; ++i) {
    const double p = grid.point(i);
    const detail::DemandPoint d = detail::demand_at(firm, p, subsidies);
    const double tax =
        schedule.rates[static_cast<size_t>(bracket_of(d.fairness, schedule.brackets()))];
    const double obj = d.phi * (1.0 - tax);
    if (obj > best_obj) {
      best_obj = obj;
      best = {p, d.fairness, d.phi, tax};
    }
  }
  return best;
}

/// The four reference firms (A..D) with their canonical demand parameters.
/// Both groups default to 100 consumers.
inline std::vector<FirmSpec> default_firms(int population_per_group = 100) {
  const int n = population_per_group;
  return {
      {"A", {-1.926, 6.4757, n}, {-2.369, 15.7900, n}},
      {"B", {-1.9, 5.4757, n}, {-0.695, 5.2290, n}},
      {"C", {-0.340, 0.9195, n}, {-0.600, 4.4757, n}},
      {"D", {-2.369, 10.2290, n}, {-1.1526, 8.4757, n}},
  };
}

/// Parses the plain-text consumer table: one record per firm-group,
/// whitespace separated: <firm id> <group id 1|2> <w> <b> <population>.
/// Lines starting with '#' and blank lines are skipped.
inline std::vector<FirmSpec> load_firms(std::istream& in) {
  std::vector<FirmSpec> firms;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string firm_id;
    int group_id = 0, population = 0;
    double w = 0.0, b = 0.0;
    if (!(fields >> firm_id >> group_id >> w >> b >> population) ||
        (group_id != 1 && group_id != 2) || population < 1) {
      throw std::invalid_argument("load_firms: bad record at line " +
                                  std::to_string(lineno));
    }
    auto it = std::find_if(firms.begin(), firms.end(),
                           [&](const FirmSpec& f) { return f.id == firm_id; });
    if (it == firms.end()) {
      firms.push_back({firm_id, {0.0, 0.0, 0}, {0.0, 0.0, 0}});
      it = firms.end() - 1;
    }
    ConsumerGroup& g = (group_id == 1) ? it->group1 : it->group2;
    g = {w, b, population};
  }
  for (const FirmSpec& f : firms) {
    if (f.group1.population < 1 || f.group2.population < 1) {
      throw std::invalid_argument("load_firms: firm " + f.id +
                                  " is missing one of its two groups");
    }
  }
  return firms;
}

} // namespace fairtax
