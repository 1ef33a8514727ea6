#pragma once

// The repeated game under the nonstationary mechanism: index dynamics,
// recommendations, price settlement, grim-trigger punishment, pluggable
// consumer agents and discounted-cost evaluation.

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "dsm/pareto.hpp"

namespace dsm {

/// Everything that stays fixed across periods.
struct Game {
  Population population;
  PricingScheme pricing;
  std::vector<ExtremeCosts> extremes;

  int size() const { return static_cast<int>(population.size()); }
  int shifters() const { return pricing.shifter_count; }
};

Game make_game(Population population, const PricingScheme& pricing);

struct GameState {
  long period = 0;
  Eigen::VectorXd indices;
  bool punished = false;
  // Period of each consumer's most recent selection, -1 if never.
  std::vector<long> last_selected;
};

GameState init_state(const TargetCostVector& target);

struct Compliant {};

/// Plays the desired pattern in one period and follows recommendations
/// otherwise. After a detected deviation the recommendation is the desired
/// pattern, so this is also the stage equilibrium action.
struct OneShotDeviator {
  int consumer = 0;
  long period = 0;
};

/// Best response to the others' recommended actions of the same period.
struct MyopicBestResponse {};

using AgentPolicy = std::variant<Compliant, OneShotDeviator, MyopicBestResponse>;

struct PeriodRecord {
  long period = 0;
  std::vector<int> active_set;     // empty while punished
  Eigen::VectorXd indices;         // g(t) before the update
  Pattern aggregate;               // realized load per slot
  Pattern prices;
  Eigen::VectorXd stage_costs;
  Eigen::VectorXd discomforts;
  bool punished = false;           // punishment phase at the start of the period
  bool deviated = false;           // peak exceeded the threshold in a cooperative period
  bool off_recommendation = false; // someone left the recommendation (detected or not)
  std::optional<Profile> recommendations;
  std::optional<Profile> actions;
};

struct SimulationTrace {
  std::vector<PeriodRecord> records;
  long horizon = 0;
  double discount = 0.0;
  GameState final_state;
};

struct RunOptions {
  bool keep_patterns = false;
  // Refuse to continue once an index leaves its box.
  bool check_bounds = true;
};

/// The m largest indices; ties go to the least recently selected, then the
/// lowest id. Returned in ascending id order.
std::vector<int> select_active_set(const GameState& state, int shifters);

/// Shift patterns for the active set, desired patterns for the rest; desired
/// patterns for everyone while punished.
Profile recommend(const GameState& state, std::span<const int> active_set, const Game& game);

struct Settlement {
  Pattern aggregate;
  Pattern prices;
  bool deviated = false;
};

Settlement settle_period(const Profile& actions, const PricingScheme& pricing, bool cooperative);

/// g(t+1) = (g(t) - (1 - delta) 1_I) / delta, re-projected onto sum g = m.
/// `delta` = 0 freezes the indices. Throws IndexOutOfBounds if an entry
/// leaves [0, bound] by more than 1e-7.
Eigen::VectorXd update_indices(const GameState& state, std::span<const int> active_set, double delta,
                               const Eigen::VectorXd& bounds, int shifters);

/// Desired pattern, the minimum-discomfort shift, and fractions of the peak
/// shiftable load moved to each other slot.
std::vector<Pattern> candidate_actions(const Game& game, int consumer);

/// Cheapest candidate for `consumer` with the other rows of `profile` fixed.
Pattern best_response(const Game& game, const Profile& profile, int consumer);

/// Round-robin best responses until no consumer moves. Returns the number of
/// full rounds taken, or -1 if `max_rounds` pass without a fixed point.
int best_response_dynamics(const Game& game, Profile& profile, int max_rounds);

SimulationTrace run(const Game& game, const TargetCostVector& target, std::span<const AgentPolicy> policies,
                    long horizon, double delta, const RunOptions& options = {});

/// Continues from `state` for `horizon` further periods.
SimulationTrace resume(const Game& game, const TargetCostVector& target, GameState state,
                       std::span<const AgentPolicy> policies, long horizon, double delta,
                       const RunOptions& options = {});

struct DiscountedValue {
  double cost = 0.0;        // (1 - delta) sum delta^t c_t over the trace
  double discomfort = 0.0;  // same with discomfort terms only
  double tail = 0.0;        // delta^T times the largest stage cost seen
};

DiscountedValue discounted_cost(const SimulationTrace& trace, int consumer, double delta);

struct IcEntry {
  int consumer = 0;
  long period = -1;  // -1 for the analytic whole-game check
  double follow_cost = 0.0;
  double best_deviation_cost = 0.0;
  double gap = 0.0;
  bool simulated = false;
};

struct IcReport {
  std::vector<IcEntry> entries;
  double min_gap = 0.0;
  // Largest disagreement between analytic and simulated deviation values.
  double max_simulation_error = 0.0;
  double tail_bound = 0.0;
  bool ok = true;
};

struct AuditOptions {
  long window = 200;
  long simulation_periods = 64;
  double tolerance = 1e-7;
};

/// One-shot deviation audit over the analytic whole-game values, every
/// cooperative period of the window, and simulated deviators for
/// cross-checking. Throws NotIC if any gap is below -tolerance.
IcReport audit_ic(const Game& game, const TargetCostVector& target, double delta,
                  const AuditOptions& options = {});

/// Same audit without throwing.
IcReport audit_ic_report(const Game& game, const TargetCostVector& target, double delta,
                         const AuditOptions& options = {});

}  // namespace dsm
