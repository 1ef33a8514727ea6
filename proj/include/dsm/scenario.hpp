#pragma once

// Scenario documents (JSON), the synthetic three-type population generator
// and the glue that turns a document into a game and a target.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsm/engine.hpp"

namespace dsm {

struct TypeCount {
  int type = 1;  // 1, 2 or 3
  int count = 0;
};

struct GeneratorSpec {
  std::vector<TypeCount> types;
  std::uint64_t seed = 0;
  double shiftable_fraction = 0.4;
  // Uniform peak-slot shiftable load; defaults to the fraction times the
  // smallest peak-slot desired load in the mix.
  std::optional<double> peak_shiftable;

  int count() const;
};

struct ScenarioDocument {
  int slots_per_period = 24;
  double price_low = 0.1;
  double price_high = 0.8;
  // Exactly one of these sets the threshold.
  std::optional<double> par_goal;   // l_th = (1 - goal) * peak load
  std::optional<double> threshold;  // kWh
  std::optional<int> shifters;      // l_th = peak load - m * peak shiftable
  double discount = 0.995;
  long horizon = 5000;
  double renewable_availability = 0.8;
  TargetRule target_rule = TargetRule::Greedy;
  // Exactly one population source.
  std::optional<GeneratorSpec> generator;
  Population consumers;
  // Parsed and round-tripped; not used by the scheduler.
  std::map<int, std::vector<int>> blocked_days;
};

/// Throws ValidationError naming the first violated invariant.
void validate(const ScenarioDocument& doc);

nlohmann::json to_json(const ScenarioDocument& doc);

/// Throws ValidationError for schema violations.
ScenarioDocument scenario_from_json(const nlohmann::json& j);

/// Throws ParseError if the file is missing or not JSON.
ScenarioDocument load_scenario(const std::string& path);

void save_scenario(const ScenarioDocument& doc, const std::string& path);

/// FNV-1a 64 of the canonical serialization, as 16 hex digits.
std::string fingerprint(const ScenarioDocument& doc);

/// Three consumer types on a 24-hour shape, aggregated to `slots` slots
/// (24 must be a multiple of `slots`). Type order is shuffled by the seed.
Population generate_population(const GeneratorSpec& spec, int slots);

Population materialize_population(const ScenarioDocument& doc);

double derive_threshold(const ScenarioDocument& doc, const Population& population);

struct ScenarioGame {
  Game game;
  TargetCostVector target;
  std::string fingerprint;
};

/// Population, pricing, extremes and the target vector in one step.
ScenarioGame build(const ScenarioDocument& doc);

}  // namespace dsm
