#pragma once

// Stage-game primitives: consumption patterns, critical-peak prices,
// discomfort, per-period cost and consumer classification.
//
// Slots are 0-based throughout the library. Energy is in kWh, money in $.

#include <Eigen/Core>

#include <vector>

#include "dsm/errors.hpp"

namespace dsm {

/// Per-slot loads of one consumer over one period.
using Pattern = Eigen::VectorXd;

/// Joint consumption: one row per consumer, one column per slot.
using Profile = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Two patterns closer than this in every slot are the same pattern.
inline constexpr double kPatternTolerance = 1e-9;

struct ConsumerSpec {
  int id = 0;
  double total_demand = 0.0;  // daily kWh
  Pattern desired;            // preferred pattern, sums to total_demand
  Pattern nonshiftable;       // per-slot floor
  Pattern slope;              // $/kWh of displacement per slot
  double fixed_discomfort = 0.0;
  double discomfort_cap = 0.0;

  Eigen::Index slots() const { return desired.size(); }

  /// Throws ValidationError naming the first violated invariant.
  void validate() const;
};

using Population = std::vector<ConsumerSpec>;

struct PricingScheme {
  double price_low = 0.0;
  double price_high = 0.0;
  double threshold = 0.0;
  Eigen::Index peak_slot = 0;
  int shifter_count = 1;
  double peak_shiftable = 0.0;
  double peak_load = 0.0;  // aggregate desired load at peak_slot
};

enum class ConsumerClass { Low, Medium, High };

const char* to_string(ConsumerClass c);

/// Critical-peak price for one slot. Loads within 1e-9 (relative) of the threshold
/// count as at the threshold so that exact shift arithmetic is not defeated
/// by rounding.
double price_at_slot(double total_load, const PricingScheme& pricing);

template <typename Derived>
Pattern slot_prices(const Eigen::MatrixBase<Derived>& aggregate, const PricingScheme& pricing) {
  Pattern prices(aggregate.size());
  for (Eigen::Index h = 0; h < aggregate.size(); ++h)
    prices[h] = price_at_slot(aggregate(h), pricing);
  return prices;
}

/// Column sums of a profile.
template <typename Derived>
Pattern aggregate_load(const Eigen::MatrixBase<Derived>& profile) {
  return profile.colwise().sum().transpose();
}

/// Desired patterns stacked as a profile.
Profile desired_profile(const Population& population);

Pattern desired_aggregate(const Population& population);

/// Slot of largest aggregate desired load; lowest index on ties.
Eigen::Index peak_slot(const Population& population);

/// Smallest m with m * peak_shiftable >= peak_load - threshold.
int required_shifters(const Population& population, double threshold, double peak_shiftable);

/// Builds and validates the pricing scheme: prices ordered, the threshold
/// separates the peak slot from every other slot, peak shiftable load uniform.
PricingScheme make_pricing(const Population& population, double price_low, double price_high,
                           double threshold);

/// Fixed jump plus slope-weighted displacement. Zero exactly when the pattern equals the desired one.
template <typename Derived>
double discomfort(const Eigen::MatrixBase<Derived>& pattern, const ConsumerSpec& consumer) {
  eigen_assert(pattern.size() == consumer.desired.size());
  const Pattern gap = (pattern.derived().reshaped() - consumer.desired).cwiseAbs();
  if (gap.maxCoeff() <= kPatternTolerance) return 0.0;
  return consumer.fixed_discomfort + consumer.slope.dot(gap);
}

/// Billing of one consumer's pattern at given slot prices.
template <typename Derived>
double billing(const Eigen::MatrixBase<Derived>& pattern, const Pattern& prices) {
  return pattern.derived().reshaped().dot(prices);
}

/// Billing plus discomfort for one consumer of the profile.
double stage_cost(const Profile& profile, const PricingScheme& pricing, const Population& population,
                  Eigen::Index consumer);

/// Billing plus discomfort for every consumer at once.
Eigen::VectorXd stage_costs(const Profile& profile, const PricingScheme& pricing,
                            const Population& population);

/// Low / Medium / High discomfort class. When both tests fail the consumer is High.
ConsumerClass classify(const ConsumerSpec& consumer, const PricingScheme& pricing);

}  // namespace dsm
