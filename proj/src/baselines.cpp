#include "dsm/baselines.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace dsm {

namespace {

BaselineResult settle(std::string name, const Game& game, Profile profiles) {
  BaselineResult r;
  r.name = std::move(name);
  r.stage_costs = stage_costs(profiles, game.pricing, game.population);
  r.total_cost = r.stage_costs.sum();
  r.par = par(profiles);
  r.profiles = std::move(profiles);
  return r;
}

Eigen::Index cheapest_other_slot(const ConsumerSpec& c, Eigen::Index peak) {
  Eigen::Index best = -1;
  for (Eigen::Index h = 0; h < c.slots(); ++h)
    if (h != peak && (best < 0 || c.slope[h] < c.slope[best])) best = h;
  return best;
}

}  // namespace

BaselineResult og_dsm(const Game& game) {
  return settle("OG-DSM", game, desired_profile(game.population));
}

BaselineResult jo_dsm(const Game& game) {
  std::vector<int> order(static_cast<std::size_t>(game.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return game.extremes[static_cast<std::size_t>(a)].shift_discomfort() <
           game.extremes[static_cast<std::size_t>(b)].shift_discomfort();
  });

  Profile shifted = desired_profile(game.population);
  for (int k = 0; k < game.shifters() && k < game.size(); ++k) {
    const int i = order[static_cast<std::size_t>(k)];
    shifted.row(i) = game.extremes[static_cast<std::size_t>(i)].shift_pattern.transpose();
  }
  BaselineResult best = settle("JO-DSM", game, std::move(shifted));
  BaselineResult idle = settle("JO-DSM", game, desired_profile(game.population));
  return idle.total_cost < best.total_cost ? idle : best;
}

BaselineResult sc_dsm(const Game& game, double renewable) {
  const auto& p = game.pricing;
  const double weight = 1.0 - renewable;
  Profile profiles = desired_profile(game.population);
  Pattern fixed = Pattern::Constant(profiles.cols(), p.price_low);
  fixed[p.peak_slot] = p.price_high;

  Eigen::VectorXd costs(game.size());
  for (int i = 0; i < game.size(); ++i) {
    const auto& c = game.population[static_cast<std::size_t>(i)];
    const auto& shift = game.extremes[static_cast<std::size_t>(i)].shift_pattern;
    const double stay = billing(c.desired, fixed);
    const double move = billing(shift, fixed) + weight * discomfort(shift, c);
    if (move < stay) {
      profiles.row(i) = shift.transpose();
      costs[i] = move;
    } else {
      costs[i] = stay;
    }
  }

  BaselineResult r;
  r.name = "SC-DSM";
  r.stage_costs = costs;
  r.total_cost = costs.sum();
  r.par = par(profiles);
  r.profiles = std::move(profiles);
  return r;
}

BaselineResult billing_min(const Game& game) {
  const auto& p = game.pricing;
  const double share = std::max(0.0, (p.peak_load - p.threshold) / game.size());
  Profile profiles = desired_profile(game.population);
  if (share > 0.0) {
    for (int i = 0; i < game.size(); ++i) {
      const auto& c = game.population[static_cast<std::size_t>(i)];
      const double shiftable = c.desired[p.peak_slot] - c.nonshiftable[p.peak_slot];
      if (share > shiftable + kPatternTolerance) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "equal share %.6g kWh exceeds consumer %d's shiftable %.6g kWh", share,
                      c.id, shiftable);
        throw InsufficientShiftable(buf);
      }
      const Eigen::Index to = cheapest_other_slot(c, p.peak_slot);
      if (to < 0) throw InsufficientShiftable("a single-slot period has nowhere to shift to");
      profiles(i, p.peak_slot) -= share;
      profiles(i, to) += share;
    }
  }
  return settle("BILLING-MIN", game, std::move(profiles));
}

}  // namespace dsm
