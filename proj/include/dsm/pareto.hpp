#pragma once

// Extreme costs, the Pareto hyperplane, the target-cost program and the
// discount-factor bounds of the nonstationary mechanism.

#include <span>
#include <string>
#include <vector>

#include "dsm/model.hpp"

namespace dsm {

/// Cheapest way for one consumer to clear its peak-slot shiftable load.
struct ShiftPattern {
  Pattern pattern;
  double discomfort = 0.0;
  // True when the load had to be spread over several receiving slots
  // because the cheapest one lacked threshold headroom.
  bool spread = false;
};

/// Concentrates the peak shiftable load on the cheapest other slot
/// (earliest on ties).
ShiftPattern min_shift_pattern(const ConsumerSpec& consumer, const PricingScheme& pricing);

/// Same, but respects receiving-slot headroom (threshold - desired aggregate)
/// shared among the m shifters; falls back to filling slots in slope order.
ShiftPattern min_shift_pattern(const ConsumerSpec& consumer, const PricingScheme& pricing,
                               const Pattern& desired_aggregate);

struct ExtremeCosts {
  double base_cost = 0.0;   // p_Lo * A
  double shift_cost = 0.0;  // p_Lo * A + d(shift_pattern)
  double ne_cost = 0.0;     // cost at the one-shot equilibrium
  double cap_cost = 0.0;    // min(base + D_max, ne)
  Pattern shift_pattern;
  bool spread = false;
  ConsumerClass consumer_class = ConsumerClass::Medium;

  double shift_discomfort() const { return shift_cost - base_cost; }

  /// Unclipped normalized cap (cap - base) / (shift - base).
  double index_cap() const { return (cap_cost - base_cost) / shift_discomfort(); }

  /// Upper bound of the consumer's index: min(1, index_cap), and 0 for
  /// High consumers, who are never asked to shift.
  double index_bound() const;
};

ExtremeCosts extreme_costs(const ConsumerSpec& consumer, const PricingScheme& pricing,
                           const Population& population);

std::vector<ExtremeCosts> population_extremes(const Population& population,
                                              const PricingScheme& pricing);

enum class Membership { OnBoundary, InteriorViolation, Infeasible };

const char* to_string(Membership m);

/// Where a cost vector sits relative to the hyperplane sum_i g_i = m.
Membership pareto_membership(const Eigen::VectorXd& costs, std::span<const ExtremeCosts> extremes,
                             int shifter_count);

/// Normalized index (C - base) / (shift - base) of each consumer.
Eigen::VectorXd cost_to_index(const Eigen::VectorXd& costs, std::span<const ExtremeCosts> extremes);
Eigen::VectorXd index_to_cost(const Eigen::VectorXd& indices, std::span<const ExtremeCosts> extremes);

struct TargetCostVector {
  Eigen::VectorXd costs;    // C*
  Eigen::VectorXd indices;  // g, sums to shifter_count
  Eigen::VectorXd bounds;   // box upper bound min(1, cap) per consumer
  int shifter_count = 0;

  double total() const { return costs.sum(); }
};

/// How mass is placed among consumers with equal shift discomfort. Both
/// rules reach the same optimal total.
enum class TargetRule {
  Greedy,    // saturate in id order; yields an extreme point
  Balanced,  // water-fill equally inside each tie group
};

const char* to_string(TargetRule rule);
TargetRule parse_target_rule(const std::string& name);

/// Minimizes the total cost over the capped hyperplane. The program has one
/// equality and box bounds, so consumers are filled in order of increasing
/// shift discomfort (lowest id on ties).
TargetCostVector solve_target(std::span<const ExtremeCosts> extremes, int shifter_count,
                              TargetRule rule = TargetRule::Greedy);

/// Uniform-cap bound 1 - 1/(N - m + 1).
double min_discount(int consumers, int shifters);

/// 1 - (m - sum of the m-1 largest caps)/(N - m + 1); `caps` need not be sorted.
double exact_min_discount(std::span<const double> caps, int consumers, int shifters);

/// A discount factor above which the "m largest indices" rule provably keeps
/// every index inside its box: the cap-aware bound, raised so that an
/// unselected index (at most m/(m+1)) never outgrows its own cap.
double index_safe_discount(const TargetCostVector& target);

}  // namespace dsm
