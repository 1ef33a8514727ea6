#include "dsm/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace dsm {

namespace {

constexpr double kHyperplaneTolerance = 1e-9;

// Off-peak slots ordered by slope, earliest first among equals.
std::vector<Eigen::Index> receiving_order(const ConsumerSpec& consumer, Eigen::Index peak) {
  std::vector<Eigen::Index> slots;
  for (Eigen::Index h = 0; h < consumer.slots(); ++h)
    if (h != peak) slots.push_back(h);
  std::stable_sort(slots.begin(), slots.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return consumer.slope[a] < consumer.slope[b]; });
  return slots;
}

}  // namespace

ShiftPattern min_shift_pattern(const ConsumerSpec& consumer, const PricingScheme& pricing) {
  const Eigen::Index peak = pricing.peak_slot;
  const double shiftable = consumer.desired[peak] - consumer.nonshiftable[peak];
  ShiftPattern out{consumer.desired, 0.0, false};
  if (shiftable <= kPatternTolerance) return out;

  const auto order = receiving_order(consumer, peak);
  if (order.empty()) throw InfeasibleThreshold("a single-slot period has nowhere to shift to");
  out.pattern[peak] = consumer.nonshiftable[peak];
  out.pattern[order.front()] += shiftable;
  out.discomfort = discomfort(out.pattern, consumer);
  return out;
}

ShiftPattern min_shift_pattern(const ConsumerSpec& consumer, const PricingScheme& pricing,
                               const Pattern& desired_aggregate) {
  const Eigen::Index peak = pricing.peak_slot;
  const double shiftable = consumer.desired[peak] - consumer.nonshiftable[peak];
  ShiftPattern out{consumer.desired, 0.0, false};
  if (shiftable <= kPatternTolerance) return out;

  const auto order = receiving_order(consumer, peak);
  if (order.empty()) throw InfeasibleThreshold("a single-slot period has nowhere to shift to");

  // Up to m shifters may land on the same slot in one period.
  const double shifters = static_cast<double>(std::max(1, pricing.shifter_count));
  auto headroom = [&](Eigen::Index h) {
    return std::max(0.0, (pricing.threshold - desired_aggregate[h]) / shifters);
  };

  out.pattern[peak] = consumer.nonshiftable[peak];
  double remaining = shiftable;
  for (const Eigen::Index h : order) {
    const double room = headroom(h);
    const double put = std::min(room, remaining);
    if (put <= 0.0) continue;
    out.pattern[h] += put;
    remaining -= put;
    if (h != order.front()) out.spread = true;
    if (remaining <= kPatternTolerance) break;
  }
  if (remaining > kPatternTolerance)
    throw InfeasibleThreshold("consumer " + std::to_string(consumer.id) +
                              " cannot place its peak load off-peak without breaching the threshold");
  // Sub-tolerance remainder goes to the cheapest slot to conserve demand.
  if (remaining > 0.0) out.pattern[order.front()] += remaining;
  out.discomfort = discomfort(out.pattern, consumer);
  return out;
}

double ExtremeCosts::index_bound() const {
  if (consumer_class == ConsumerClass::High) return 0.0;
  return std::clamp(index_cap(), 0.0, 1.0);
}

ExtremeCosts extreme_costs(const ConsumerSpec& consumer, const PricingScheme& pricing,
                           const Population& population) {
  const ShiftPattern shift = min_shift_pattern(consumer, pricing, desired_aggregate(population));
  ExtremeCosts e;
  e.base_cost = pricing.price_low * consumer.total_demand;
  e.shift_cost = e.base_cost + shift.discomfort;
  e.ne_cost = e.base_cost + (pricing.price_high - pricing.price_low) * consumer.desired[pricing.peak_slot];
  e.cap_cost = std::min(e.base_cost + consumer.discomfort_cap, e.ne_cost);
  e.shift_pattern = shift.pattern;
  e.spread = shift.spread;
  e.consumer_class = classify(consumer, pricing);

  if (!(e.shift_discomfort() > 0.0))
    throw InfeasibleCap("consumer " + std::to_string(consumer.id) +
                        " has zero shift discomfort; its index cannot be normalized");
  if (e.index_cap() < 0.0)
    throw InfeasibleCap("consumer " + std::to_string(consumer.id) + " has a cap below its base cost");
  return e;
}

std::vector<ExtremeCosts> population_extremes(const Population& population, const PricingScheme& pricing) {
  std::vector<ExtremeCosts> out;
  out.reserve(population.size());
  for (const auto& c : population) out.push_back(extreme_costs(c, pricing, population));
  return out;
}

const char* to_string(Membership m) {
  switch (m) {
    case Membership::OnBoundary: return "on_boundary";
    case Membership::InteriorViolation: return "interior_violation";
    case Membership::Infeasible: return "infeasible";
  }
  return "?";
}

Eigen::VectorXd cost_to_index(const Eigen::VectorXd& costs, std::span<const ExtremeCosts> extremes) {
  Eigen::VectorXd g(costs.size());
  for (Eigen::Index i = 0; i < costs.size(); ++i) {
    const auto& e = extremes[static_cast<std::size_t>(i)];
    g[i] = (costs[i] - e.base_cost) / e.shift_discomfort();
  }
  return g;
}

Eigen::VectorXd index_to_cost(const Eigen::VectorXd& indices, std::span<const ExtremeCosts> extremes) {
  Eigen::VectorXd c(indices.size());
  for (Eigen::Index i = 0; i < indices.size(); ++i) {
    const auto& e = extremes[static_cast<std::size_t>(i)];
    c[i] = e.base_cost + indices[i] * e.shift_discomfort();
  }
  return c;
}

Membership pareto_membership(const Eigen::VectorXd& costs, std::span<const ExtremeCosts> extremes,
                             int shifter_count) {
  for (Eigen::Index i = 0; i < costs.size(); ++i)
    if (costs[i] < extremes[static_cast<std::size_t>(i)].base_cost - kHyperplaneTolerance)
      return Membership::Infeasible;
  const double level = cost_to_index(costs, extremes).sum();
  if (std::abs(level - shifter_count) <= kHyperplaneTolerance) return Membership::OnBoundary;
  // Below the hyperplane no action profile reaches.
  return level > shifter_count ? Membership::InteriorViolation : Membership::Infeasible;
}

const char* to_string(TargetRule rule) {
  return rule == TargetRule::Greedy ? "greedy" : "balanced";
}

TargetRule parse_target_rule(const std::string& name) {
  if (name == "greedy") return TargetRule::Greedy;
  if (name == "balanced") return TargetRule::Balanced;
  throw ValidationError("/target_rule", "expected greedy or balanced, got '" + name + "'");
}

namespace {

// Places `mass` on `group` so that every member gets min(bound, level).
void water_fill(const std::vector<Eigen::Index>& group, const Eigen::VectorXd& bounds, double mass,
                Eigen::VectorXd& indices) {
  std::vector<Eigen::Index> by_bound = group;
  std::stable_sort(by_bound.begin(), by_bound.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return bounds[a] < bounds[b]; });
  double remaining = mass;
  std::size_t left = by_bound.size();
  for (const Eigen::Index i : by_bound) {
    const double level = remaining / static_cast<double>(left);
    const double take = std::min(bounds[i], level);
    indices[i] = take;
    remaining -= take;
    --left;
  }
}

}  // namespace

TargetCostVector solve_target(std::span<const ExtremeCosts> extremes, int shifter_count, TargetRule rule) {
  const auto n = static_cast<Eigen::Index>(extremes.size());
  TargetCostVector t;
  t.shifter_count = shifter_count;
  t.bounds.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) t.bounds[i] = extremes[static_cast<std::size_t>(i)].index_bound();

  if (t.bounds.sum() < shifter_count - kHyperplaneTolerance)
    throw Infeasible("index caps sum to " + std::to_string(t.bounds.sum()) + " < m = " +
                     std::to_string(shifter_count) +
                     "; raise discomfort caps or relax the peak reduction goal");

  auto d = [&](Eigen::Index i) { return extremes[static_cast<std::size_t>(i)].shift_discomfort(); };
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return d(a) < d(b); });

  t.indices = Eigen::VectorXd::Zero(n);
  double remaining = shifter_count;
  for (std::size_t k = 0; k < order.size() && remaining > 0.0;) {
    // Consumers k..end share one discomfort value (a single one under Greedy).
    std::size_t end = k + 1;
    if (rule == TargetRule::Balanced)
      while (end < order.size() && d(order[end]) == d(order[k])) ++end;
    std::vector<Eigen::Index> group(order.begin() + static_cast<std::ptrdiff_t>(k),
                                    order.begin() + static_cast<std::ptrdiff_t>(end));
    double room = 0.0;
    for (const Eigen::Index i : group) room += t.bounds[i];
    const double mass = std::min(room, remaining);
    water_fill(group, t.bounds, mass, t.indices);
    remaining -= mass;
    k = end;
  }
  t.costs = index_to_cost(t.indices, extremes);
  return t;
}

double min_discount(int consumers, int shifters) {
  return 1.0 - 1.0 / static_cast<double>(consumers - shifters + 1);
}

double exact_min_discount(std::span<const double> caps, int consumers, int shifters) {
  std::vector<double> sorted(caps.begin(), caps.end());
  for (double& c : sorted) c = std::min(c, 1.0);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double top = 0.0;
  for (int i = 0; i + 1 < shifters && i < static_cast<int>(sorted.size()); ++i) top += sorted[static_cast<std::size_t>(i)];
  return 1.0 - (shifters - top) / static_cast<double>(consumers - shifters + 1);
}

double index_safe_discount(const TargetCostVector& target) {
  const int n = static_cast<int>(target.indices.size());
  const int m = target.shifter_count;
  const std::vector<double> caps(target.bounds.data(), target.bounds.data() + target.bounds.size());
  double bound = exact_min_discount(caps, n, m);

  double smallest = 1.0;
  for (Eigen::Index i = 0; i < target.indices.size(); ++i)
    if (target.indices[i] > 0.0) smallest = std::min(smallest, target.bounds[i]);
  if (m < n) bound = std::max(bound, m / ((m + 1.0) * smallest));
  return bound;
}

}  // namespace dsm
