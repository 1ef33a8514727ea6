#include "dsm/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <string>

namespace dsm {

namespace {

constexpr double kBoundSlack = 1e-7;
constexpr double kFractions[] = {0.25, 0.5, 0.75, 1.0};

// Cost of `pattern` for `consumer` when the rest of the aggregate is `others`.
double cost_against(const Game& game, int consumer, const Pattern& pattern, const Pattern& others) {
  const Pattern prices = slot_prices(others + pattern, game.pricing);
  return billing(pattern, prices) + discomfort(pattern, game.population[static_cast<std::size_t>(consumer)]);
}

bool same_pattern(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  return (a - b).cwiseAbs().maxCoeff() <= kPatternTolerance;
}

Eigen::VectorXd step_indices(const GameState& state, std::span<const int> active_set, double delta,
                             const Eigen::VectorXd& bounds, int shifters, bool check) {
  if (delta == 0.0) return state.indices;
  Eigen::VectorXd next = state.indices;
  for (const int i : active_set) next[i] -= 1.0 - delta;
  next /= delta;

  // Proportional re-projection onto the hyperplane; keeps zeros at zero and
  // stops 1/delta amplification of rounding error.
  const double total = next.sum();
  if (total > 0.0) next *= shifters / total;

  if (check) {
    for (Eigen::Index i = 0; i < next.size(); ++i) {
      if (next[i] < -kBoundSlack || next[i] > bounds[i] + kBoundSlack) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "index of consumer %ld left [0, %.9g] at period %ld: %.9g",
                      static_cast<long>(i), bounds[i], state.period, next[i]);
        throw IndexOutOfBounds(buf, state.period, static_cast<int>(i), next[i]);
      }
    }
  }
  return next;
}

// Continuation value from period t+1 on, had the consumer conformed.
double continuation(const ExtremeCosts& e, double next_index) {
  return e.base_cost + next_index * e.shift_discomfort();
}

}  // namespace

Game make_game(Population population, const PricingScheme& pricing) {
  Game game;
  game.extremes = population_extremes(population, pricing);
  game.population = std::move(population);
  game.pricing = pricing;
  return game;
}

GameState init_state(const TargetCostVector& target) {
  GameState state;
  state.indices = target.indices;
  state.last_selected.assign(static_cast<std::size_t>(target.indices.size()), -1);
  return state;
}

std::vector<int> select_active_set(const GameState& state, int shifters) {
  std::vector<int> order(static_cast<std::size_t>(state.indices.size()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (state.indices[a] != state.indices[b]) return state.indices[a] > state.indices[b];
    const long la = state.last_selected[static_cast<std::size_t>(a)];
    const long lb = state.last_selected[static_cast<std::size_t>(b)];
    if (la != lb) return la < lb;
    return a < b;
  });
  order.resize(static_cast<std::size_t>(std::min<Eigen::Index>(shifters, state.indices.size())));
  std::sort(order.begin(), order.end());
  return order;
}

Profile recommend(const GameState& state, std::span<const int> active_set, const Game& game) {
  Profile profile = desired_profile(game.population);
  if (state.punished) return profile;
  for (const int i : active_set)
    profile.row(i) = game.extremes[static_cast<std::size_t>(i)].shift_pattern.transpose();
  return profile;
}

Settlement settle_period(const Profile& actions, const PricingScheme& pricing, bool cooperative) {
  Settlement s;
  s.aggregate = aggregate_load(actions);
  s.prices = slot_prices(s.aggregate, pricing);
  s.deviated = cooperative && s.prices[pricing.peak_slot] == pricing.price_high;
  return s;
}

Eigen::VectorXd update_indices(const GameState& state, std::span<const int> active_set, double delta,
                               const Eigen::VectorXd& bounds, int shifters) {
  return step_indices(state, active_set, delta, bounds, shifters, true);
}

std::vector<Pattern> candidate_actions(const Game& game, int consumer) {
  const auto& c = game.population[static_cast<std::size_t>(consumer)];
  const Eigen::Index peak = game.pricing.peak_slot;
  const double shiftable = c.desired[peak] - c.nonshiftable[peak];

  std::vector<Pattern> out{c.desired, game.extremes[static_cast<std::size_t>(consumer)].shift_pattern};
  if (shiftable <= kPatternTolerance) return out;
  for (Eigen::Index h = 0; h < c.slots(); ++h) {
    if (h == peak) continue;
    for (const double f : kFractions) {
      Pattern a = c.desired;
      a[peak] -= f * shiftable;
      a[h] += f * shiftable;
      out.push_back(std::move(a));
    }
  }
  return out;
}

Pattern best_response(const Game& game, const Profile& profile, int consumer) {
  const Pattern others = aggregate_load(profile) - profile.row(consumer).transpose();
  const auto candidates = candidate_actions(game, consumer);
  std::size_t best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const double cost = cost_against(game, consumer, candidates[k], others);
    // Earlier candidates win near-ties, so the desired pattern is preferred.
    if (cost < best_cost - 1e-12) {
      best_cost = cost;
      best = k;
    }
  }
  return candidates[best];
}

int best_response_dynamics(const Game& game, Profile& profile, int max_rounds) {
  for (int round = 0; round < max_rounds; ++round) {
    bool moved = false;
    for (int i = 0; i < game.size(); ++i) {
      const Pattern br = best_response(game, profile, i);
      if (!same_pattern(br, profile.row(i).transpose())) {
        profile.row(i) = br.transpose();
        moved = true;
      }
    }
    if (!moved) return round;
  }
  return -1;
}

SimulationTrace resume(const Game& game, const TargetCostVector& target, GameState state,
                       std::span<const AgentPolicy> policies, long horizon, double delta,
                       const RunOptions& options) {
  const int n = game.size();
  const int m = game.shifters();
  SimulationTrace trace;
  trace.horizon = horizon;
  trace.discount = delta;
  trace.records.reserve(static_cast<std::size_t>(std::max(0L, horizon)));

  for (long t = 0; t < horizon; ++t) {
    PeriodRecord rec;
    rec.period = state.period;
    rec.punished = state.punished;
    rec.indices = state.indices;
    if (!state.punished) rec.active_set = select_active_set(state, m);

    const Profile recs = recommend(state, rec.active_set, game);
    Profile acts = recs;
    for (int i = 0; i < n && i < static_cast<int>(policies.size()); ++i) {
      const auto& policy = policies[static_cast<std::size_t>(i)];
      if (const auto* d = std::get_if<OneShotDeviator>(&policy)) {
        if (d->consumer == i && d->period == state.period)
          acts.row(i) = game.population[static_cast<std::size_t>(i)].desired.transpose();
      } else if (std::holds_alternative<MyopicBestResponse>(policy)) {
        acts.row(i) = best_response(game, recs, i).transpose();
      }
    }

    const Settlement s = settle_period(acts, game.pricing, !state.punished);
    rec.aggregate = s.aggregate;
    rec.prices = s.prices;
    rec.deviated = s.deviated;
    rec.off_recommendation = (acts - recs).cwiseAbs().maxCoeff() > kPatternTolerance;
    rec.stage_costs.resize(n);
    rec.discomforts.resize(n);
    for (int i = 0; i < n; ++i) {
      const auto row = acts.row(i);
      rec.discomforts[i] = discomfort(row, game.population[static_cast<std::size_t>(i)]);
      rec.stage_costs[i] = billing(row, s.prices) + rec.discomforts[i];
    }
    if (options.keep_patterns) {
      rec.recommendations = recs;
      rec.actions = acts;
    }

    if (!state.punished) {
      if (s.deviated) {
        state.punished = true;
      } else {
        for (const int i : rec.active_set) state.last_selected[static_cast<std::size_t>(i)] = state.period;
        state.indices = step_indices(state, rec.active_set, delta, target.bounds, m, options.check_bounds);
      }
    }
    ++state.period;
    trace.records.push_back(std::move(rec));
  }
  trace.final_state = std::move(state);
  return trace;
}

SimulationTrace run(const Game& game, const TargetCostVector& target, std::span<const AgentPolicy> policies,
                    long horizon, double delta, const RunOptions& options) {
  return resume(game, target, init_state(target), policies, horizon, delta, options);
}

DiscountedValue discounted_cost(const SimulationTrace& trace, int consumer, double delta) {
  DiscountedValue v;
  double weight = 1.0 - delta;
  double largest = 0.0;
  for (const auto& rec : trace.records) {
    v.cost += weight * rec.stage_costs[consumer];
    v.discomfort += weight * rec.discomforts[consumer];
    largest = std::max(largest, rec.stage_costs[consumer]);
    weight *= delta;
  }
  if (delta == 0.0 && !trace.records.empty()) {
    v.cost = trace.records.front().stage_costs[consumer];
    v.discomfort = trace.records.front().discomforts[consumer];
  }
  v.tail = std::pow(delta, static_cast<double>(trace.records.size())) * largest;
  return v;
}

IcReport audit_ic_report(const Game& game, const TargetCostVector& target, double delta,
                         const AuditOptions& options) {
  const int n = game.size();
  const int m = game.shifters();
  IcReport report;
  report.min_gap = std::numeric_limits<double>::infinity();
  auto add = [&](const IcEntry& e) {
    report.min_gap = std::min(report.min_gap, e.gap);
    report.entries.push_back(e);
  };

  // Whole game: follow gives C*, the best deviation earns the equilibrium
  // cost forever.
  for (int i = 0; i < n; ++i) {
    const auto& e = game.extremes[static_cast<std::size_t>(i)];
    add({i, -1, target.costs[i], e.ne_cost, e.ne_cost - target.costs[i], false});
  }

  const std::vector<std::vector<Pattern>> candidates = [&] {
    std::vector<std::vector<Pattern>> all;
    for (int i = 0; i < n; ++i) all.push_back(candidate_actions(game, i));
    return all;
  }();

  double largest_stage = 0.0;
  for (const auto& e : game.extremes) largest_stage = std::max({largest_stage, e.ne_cost, e.shift_cost});
  const long k = options.simulation_periods;
  report.tail_bound = std::pow(delta, static_cast<double>(k)) * largest_stage;

  GameState state = init_state(target);
  for (long tau = 0; tau < options.window; ++tau) {
    const std::vector<int> active = select_active_set(state, m);
    const Profile recs = recommend(state, active, game);
    const Pattern total = aggregate_load(recs);
    const Eigen::VectorXd next = update_indices(state, active, delta, target.bounds, m);

    for (int i = 0; i < n; ++i) {
      const auto& e = game.extremes[static_cast<std::size_t>(i)];
      const Pattern own = recs.row(i).transpose();
      const Pattern others = total - own;
      const double follow =
          (1.0 - delta) * cost_against(game, i, own, others) + delta * continuation(e, next[i]);

      double best = std::numeric_limits<double>::infinity();
      double desired_value = follow;
      for (const Pattern& a : candidates[static_cast<std::size_t>(i)]) {
        if (same_pattern(a, own)) continue;
        const Pattern load = others + a;
        const Pattern prices = slot_prices(load, game.pricing);
        const bool caught = prices[game.pricing.peak_slot] == game.pricing.price_high;
        const double stage = billing(a, prices) + discomfort(a, game.population[static_cast<std::size_t>(i)]);
        const double value = (1.0 - delta) * stage + delta * (caught ? e.ne_cost : continuation(e, next[i]));
        best = std::min(best, value);
        if (same_pattern(a, game.population[static_cast<std::size_t>(i)].desired)) desired_value = value;
      }
      if (std::isfinite(best)) add({i, tau, follow, best, best - follow, false});

      // Simulated cross-check for consumers whose deviation is to stop shifting.
      if (std::find(active.begin(), active.end(), i) == active.end() || k <= 0) continue;
      const std::vector<AgentPolicy> compliant(static_cast<std::size_t>(n), Compliant{});
      std::vector<AgentPolicy> deviating = compliant;
      deviating[static_cast<std::size_t>(i)] = OneShotDeviator{i, state.period};
      const RunOptions loose{false, false};
      auto simulated = [&](const std::vector<AgentPolicy>& policies) {
        const SimulationTrace tr = resume(game, target, state, policies, k, delta, loose);
        const double rest = tr.final_state.punished ? e.ne_cost : continuation(e, tr.final_state.indices[i]);
        return discounted_cost(tr, i, delta).cost + std::pow(delta, static_cast<double>(k)) * rest;
      };
      const double sim_follow = simulated(compliant);
      const double sim_deviate = simulated(deviating);
      report.max_simulation_error = std::max(
          {report.max_simulation_error, std::abs(sim_follow - follow), std::abs(sim_deviate - desired_value)});
      add({i, tau, sim_follow, sim_deviate, sim_deviate - sim_follow, true});
    }

    for (const int i : active) state.last_selected[static_cast<std::size_t>(i)] = state.period;
    state.indices = next;
    ++state.period;
  }

  report.ok = report.min_gap >= -options.tolerance;
  return report;
}

IcReport audit_ic(const Game& game, const TargetCostVector& target, double delta, const AuditOptions& options) {
  IcReport report = audit_ic_report(game, target, delta, options);
  if (!report.ok) {
    for (const auto& e : report.entries) {
      if (e.gap < -options.tolerance) {
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "consumer %d gains %.9g by deviating at period %ld (follow %.9g, deviate %.9g)",
                      e.consumer, -e.gap, e.period, e.follow_cost, e.best_deviation_cost);
        throw NotIC(buf);
      }
    }
  }
  return report;
}

}  // namespace dsm
