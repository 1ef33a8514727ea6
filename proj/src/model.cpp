#include "dsm/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dsm/pareto.hpp"

namespace dsm {

namespace {

constexpr double kDemandTolerance = 1e-9;
constexpr double kShiftableTolerance = 1e-6;

std::string consumer_field(const ConsumerSpec& c, const char* name) {
  return "consumer[" + std::to_string(c.id) + "]." + name;
}

}  // namespace

void ConsumerSpec::validate() const {
  const Eigen::Index h = desired.size();
  if (h == 0) throw ValidationError(consumer_field(*this, "desired"), "empty pattern");
  if (nonshiftable.size() != h)
    throw ValidationError(consumer_field(*this, "nonshiftable"), "length differs from desired");
  if (slope.size() != h) throw ValidationError(consumer_field(*this, "slope"), "length differs from desired");
  if ((desired.array() < 0.0).any())
    throw ValidationError(consumer_field(*this, "desired"), "negative load");
  if ((nonshiftable.array() < 0.0).any())
    throw ValidationError(consumer_field(*this, "nonshiftable"), "negative load");
  if ((desired.array() < nonshiftable.array() - kPatternTolerance).any())
    throw ValidationError(consumer_field(*this, "nonshiftable"), "exceeds desired load");
  if (std::abs(desired.sum() - total_demand) > kDemandTolerance * std::max(1.0, total_demand))
    throw ValidationError(consumer_field(*this, "total_demand"), "differs from the sum of desired loads");
  if ((slope.array() < 0.0).any()) throw ValidationError(consumer_field(*this, "slope"), "negative");
  if (fixed_discomfort < 0.0) throw ValidationError(consumer_field(*this, "fixed_discomfort"), "negative");
  if (discomfort_cap < 0.0) throw ValidationError(consumer_field(*this, "discomfort_cap"), "negative");
}

const char* to_string(ConsumerClass c) {
  switch (c) {
    case ConsumerClass::Low: return "low";
    case ConsumerClass::Medium: return "medium";
    case ConsumerClass::High: return "high";
  }
  return "?";
}

double price_at_slot(double total_load, const PricingScheme& pricing) {
  const double slack = 1e-9 * std::max(1.0, std::abs(pricing.threshold));
  return total_load <= pricing.threshold + slack ? pricing.price_low : pricing.price_high;
}

Profile desired_profile(const Population& population) {
  if (population.empty()) return Profile();
  Profile profile(static_cast<Eigen::Index>(population.size()), population.front().slots());
  for (std::size_t i = 0; i < population.size(); ++i)
    profile.row(static_cast<Eigen::Index>(i)) = population[i].desired.transpose();
  return profile;
}

Pattern desired_aggregate(const Population& population) {
  if (population.empty()) throw ValidationError("population", "empty");
  Pattern total = Pattern::Zero(population.front().slots());
  for (const auto& c : population) {
    if (c.slots() != total.size())
      throw ValidationError(consumer_field(c, "desired"), "slot count differs across consumers");
    total += c.desired;
  }
  return total;
}

Eigen::Index peak_slot(const Population& population) {
  const Pattern total = desired_aggregate(population);
  Eigen::Index best = 0;
  for (Eigen::Index h = 1; h < total.size(); ++h)
    if (total[h] > total[best]) best = h;
  return best;
}

int required_shifters(const Population& population, double threshold, double peak_shiftable) {
  const Pattern total = desired_aggregate(population);
  const Eigen::Index peak = peak_slot(population);
  if (!(peak_shiftable > 0.0))
    throw InfeasibleThreshold("peak-slot shiftable load must be positive");

  double lo = peak_shiftable, hi = peak_shiftable;
  for (const auto& c : population) {
    const double s = c.desired[peak] - c.nonshiftable[peak];
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  if (hi - lo > kShiftableTolerance)
    throw NonUniformShiftable("peak-slot shiftable loads range over [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "] kWh");

  const double excess = total[peak] - threshold;
  if (!(excess > 0.0))
    throw InfeasibleThreshold("threshold is not below the peak load; no shifting is needed");
  const double ratio = excess / peak_shiftable;
  const double nearest = std::round(ratio);
  const double m = std::abs(ratio - nearest) <= 1e-9 ? nearest : std::ceil(ratio);
  if (m > static_cast<double>(population.size()))
    throw InfeasibleThreshold("threshold needs " + std::to_string(static_cast<long>(m)) +
                              " shifters but only " + std::to_string(population.size()) +
                              " consumers exist");
  return static_cast<int>(m);
}

PricingScheme make_pricing(const Population& population, double price_low, double price_high,
                           double threshold) {
  if (!(price_high > price_low)) throw ValidationError("prices", "high price must exceed low price");
  if (price_low < 0.0) throw ValidationError("prices.low", "negative");
  for (const auto& c : population) c.validate();

  PricingScheme pricing;
  pricing.price_low = price_low;
  pricing.price_high = price_high;
  pricing.threshold = threshold;

  const Pattern total = desired_aggregate(population);
  pricing.peak_slot = peak_slot(population);
  pricing.peak_load = total[pricing.peak_slot];

  // Only the peak slot exceeds the threshold under desired loads.
  if (!(pricing.peak_load > threshold))
    throw InfeasibleThreshold("threshold " + std::to_string(threshold) + " is not below the peak load " +
                              std::to_string(pricing.peak_load));
  for (Eigen::Index h = 0; h < total.size(); ++h) {
    if (h != pricing.peak_slot && total[h] > threshold)
      throw InfeasibleThreshold("slot " + std::to_string(h) + " also exceeds the threshold (load " +
                                std::to_string(total[h]) + ")");
  }

  const auto& first = population.front();
  pricing.peak_shiftable = first.desired[pricing.peak_slot] - first.nonshiftable[pricing.peak_slot];
  pricing.shifter_count = required_shifters(population, threshold, pricing.peak_shiftable);
  return pricing;
}

double stage_cost(const Profile& profile, const PricingScheme& pricing, const Population& population,
                  Eigen::Index consumer) {
  const Pattern prices = slot_prices(aggregate_load(profile), pricing);
  const auto row = profile.row(consumer);
  const auto& spec = population[static_cast<std::size_t>(consumer)];
  return billing(row, prices) + discomfort(row, spec);
}

Eigen::VectorXd stage_costs(const Profile& profile, const PricingScheme& pricing,
                            const Population& population) {
  const Pattern prices = slot_prices(aggregate_load(profile), pricing);
  Eigen::VectorXd costs(profile.rows());
  for (Eigen::Index i = 0; i < profile.rows(); ++i) {
    const auto row = profile.row(i);
    costs[i] = billing(row, prices) + discomfort(row, population[static_cast<std::size_t>(i)]);
  }
  return costs;
}

ConsumerClass classify(const ConsumerSpec& consumer, const PricingScheme& pricing) {
  const double gap = pricing.price_high - pricing.price_low;
  const double shift_discomfort = min_shift_pattern(consumer, pricing).discomfort;
  const bool tolerable = gap * pricing.peak_load / pricing.shifter_count > shift_discomfort;
  const bool cares = consumer.fixed_discomfort > gap * consumer.desired[pricing.peak_slot];
  if (!tolerable) return ConsumerClass::High;
  if (!cares) return ConsumerClass::Low;
  return ConsumerClass::Medium;
}

}  // namespace dsm
