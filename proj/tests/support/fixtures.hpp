#pragma once

// Shared scenario builders for the unit and acceptance tests.

#include <random>
#include <string>
#include <vector>

#include "dsm/dsm.hpp"
#include "support/oracles.hpp"

namespace dsm::testing {

/// Calibrated homogeneous preset: N Type-1 consumers, peak desired 0.95 kWh,
/// peak shiftable 0.4 kWh, one shifter.
inline ScenarioDocument calibration_document(int n) {
  ScenarioDocument doc;
  doc.slots_per_period = 24;
  doc.price_low = 0.1;
  doc.price_high = 0.8;
  doc.shifters = 1;
  doc.discount = 0.995;
  doc.horizon = 5000;
  doc.renewable_availability = 0.8;
  GeneratorSpec g;
  g.types = {{1, n}};
  g.seed = 42;
  g.shiftable_fraction = 0.4;
  g.peak_shiftable = 0.4;
  doc.generator = g;
  return doc;
}

/// The 10% goal variant: shiftable fraction 0.4 of 0.95 kWh, so m = 8 at N = 30.
inline ScenarioDocument par_goal_document(int n, double goal) {
  ScenarioDocument doc = calibration_document(n);
  doc.shifters.reset();
  doc.par_goal = goal;
  doc.generator->peak_shiftable.reset();
  doc.target_rule = TargetRule::Balanced;
  return doc;
}

inline ScenarioGame calibrated(int n) { return build(calibration_document(n)); }

inline ConsumerSpec make_consumer(int id, std::vector<double> desired, std::vector<double> nonshiftable,
                                  std::vector<double> slope, double omega, double cap) {
  ConsumerSpec c;
  c.id = id;
  c.desired = Eigen::Map<const Eigen::VectorXd>(desired.data(), static_cast<Eigen::Index>(desired.size()));
  c.nonshiftable =
      Eigen::Map<const Eigen::VectorXd>(nonshiftable.data(), static_cast<Eigen::Index>(nonshiftable.size()));
  c.slope = Eigen::Map<const Eigen::VectorXd>(slope.data(), static_cast<Eigen::Index>(slope.size()));
  c.total_demand = c.desired.sum();
  c.fixed_discomfort = omega;
  c.discomfort_cap = cap;
  return c;
}

/// Library game for an oracle instance; caps default to a non-binding value.
inline Game game_from(const oracle::Instance& g, double cap = 5.0) {
  Population pop;
  for (int i = 0; i < g.consumers(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    pop.push_back(make_consumer(i, g.desired[k], g.floor[k], g.slope[k], g.omega[k], cap));
  }
  const PricingScheme pricing = make_pricing(pop, g.price_low, g.price_high, g.threshold);
  return make_game(std::move(pop), pricing);
}

inline std::vector<AgentPolicy> all_compliant(int n) {
  return std::vector<AgentPolicy>(static_cast<std::size_t>(n), Compliant{});
}

struct RandomScenario {
  Game game;
  TargetCostVector target;
  double delta = 0.0;
};

/// Small Medium-class scenario with a slack-free threshold and a discount
/// factor drawn just above the index-safe bound.
inline RandomScenario random_scenario(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  for (;;) {
    const int n = std::uniform_int_distribution<int>(3, 20)(rng);
    const int h = std::uniform_int_distribution<int>(3, 8)(rng);
    const int peak = std::uniform_int_distribution<int>(0, h - 1)(rng);
    const int m = std::uniform_int_distribution<int>(1, std::max(1, std::min(3, n / 2)))(rng);
    const double shiftable = uniform(0.2, 0.5);
    const double gap = 0.7;

    Population pop;
    for (int i = 0; i < n; ++i) {
      std::vector<double> desired(static_cast<std::size_t>(h)), floor(static_cast<std::size_t>(h)),
          slope(static_cast<std::size_t>(h));
      for (int s = 0; s < h; ++s) {
        desired[static_cast<std::size_t>(s)] = s == peak ? uniform(1.5, 2.0) : uniform(0.1, 0.4);
        floor[static_cast<std::size_t>(s)] = desired[static_cast<std::size_t>(s)] * uniform(0.3, 0.7);
        slope[static_cast<std::size_t>(s)] = uniform(0.02, 0.2);
      }
      floor[static_cast<std::size_t>(peak)] = desired[static_cast<std::size_t>(peak)] - shiftable;
      const double peak_load = desired[static_cast<std::size_t>(peak)];
      const double omega = gap * peak_load * (1.0 + uniform(0.01, 0.1));
      double cheapest = 1e9;
      for (int s = 0; s < h; ++s)
        if (s != peak) cheapest = std::min(cheapest, slope[static_cast<std::size_t>(s)]);
      const double d = omega + (slope[static_cast<std::size_t>(peak)] + cheapest) * shiftable;
      const double cap = uniform(0.9 * gap * peak_load, 1.5 * d);
      pop.push_back(make_consumer(i, desired, floor, slope, omega, cap));
    }
    try {
      const Pattern total = desired_aggregate(pop);
      const double threshold = total[peak] - m * shiftable;
      const PricingScheme pricing = make_pricing(pop, 0.1, 0.8, threshold);
      if (pricing.shifter_count != m) continue;
      Game game = make_game(std::move(pop), pricing);
      bool medium = true;
      for (const auto& e : game.extremes) medium = medium && e.consumer_class == ConsumerClass::Medium;
      if (!medium) continue;
      TargetCostVector target = solve_target(game.extremes, m);
      const double bound = index_safe_discount(target);
      if (!(bound < 0.98)) continue;
      const double delta = bound + uniform(0.001, 0.02);
      if (delta >= 0.999) continue;
      return {std::move(game), std::move(target), delta};
    } catch (const Error&) {
      continue;
    }
  }
}

}  // namespace dsm::testing
