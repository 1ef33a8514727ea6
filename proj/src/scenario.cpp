#include "dsm/scenario.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace dsm {

using nlohmann::json;

namespace {

struct TypeRow {
  double k_early;  // hours 1-14
  double k_late;   // hours 15-24
  double fixed_discomfort;
  double discomfort_cap;
  std::array<double, 24> shape;
};

// Hourly desired loads sum to the daily totals 10, 8 and 11 kWh; all three
// peak at hour 19.
constexpr std::array<TypeRow, 3> kTypes{{
    {0.2, 0.1, 0.7, 0.71,
     {0.20, 0.20, 0.20, 0.20, 0.20, 0.20, 0.45, 0.55, 0.45, 0.35, 0.35, 0.35,
      0.35, 0.35, 0.40, 0.45, 0.55, 0.75, 0.95, 0.80, 0.60, 0.45, 0.30, 0.35}},
    {0.1, 0.05, 1.5, 0.91,
     {0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.40, 0.50, 0.40, 0.30, 0.30, 0.30,
      0.30, 0.30, 0.30, 0.35, 0.45, 0.60, 0.80, 0.65, 0.50, 0.35, 0.25, 0.20}},
    {0.15, 0.1, 1.2, 0.95,
     {0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.50, 0.60, 0.50, 0.40, 0.40, 0.40,
      0.40, 0.40, 0.45, 0.50, 0.60, 0.80, 1.10, 0.85, 0.65, 0.50, 0.25, 0.20}},
}};

constexpr int kEarlyHours = 14;

const std::set<std::string> kTopKeys{"slots_per_period", "prices", "par_goal", "threshold", "shifters",
                                     "discount", "horizon", "renewable_availability", "target_rule",
                                     "population"};

const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(path + "/" + key, "missing");
  return j.at(key);
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ValidationError(path, "expected a number");
  return j.get<double>();
}

long integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ValidationError(path, "expected an integer");
  return j.get<long>();
}

Pattern vector_field(const json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError(path, "expected an array of numbers");
  Pattern v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t h = 0; h < j.size(); ++h) v[static_cast<Eigen::Index>(h)] = number(j[h], path + "/" + std::to_string(h));
  return v;
}

json vector_json(const Pattern& v) {
  json a = json::array();
  for (Eigen::Index h = 0; h < v.size(); ++h) a.push_back(v[h]);
  return a;
}

GeneratorSpec parse_generator(const json& j, const std::string& path) {
  GeneratorSpec g;
  const json& types = require(j, "types", path);
  if (!types.is_array() || types.empty()) throw ValidationError(path + "/types", "expected a nonempty array");
  for (std::size_t k = 0; k < types.size(); ++k) {
    const std::string p = path + "/types/" + std::to_string(k);
    TypeCount tc;
    tc.type = static_cast<int>(integer(require(types[k], "type", p), p + "/type"));
    tc.count = static_cast<int>(integer(require(types[k], "count", p), p + "/count"));
    g.types.push_back(tc);
  }
  const json& seed = require(j, "seed", path);
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long>() >= 0))
    throw ValidationError(path + "/seed", "expected a nonnegative integer");
  g.seed = seed.get<std::uint64_t>();
  if (j.contains("shiftable_fraction"))
    g.shiftable_fraction = number(j["shiftable_fraction"], path + "/shiftable_fraction");
  if (j.contains("peak_shiftable")) g.peak_shiftable = number(j["peak_shiftable"], path + "/peak_shiftable");
  return g;
}

ConsumerSpec parse_consumer(const json& j, const std::string& path, std::map<int, std::vector<int>>& blocked) {
  ConsumerSpec c;
  c.id = static_cast<int>(integer(require(j, "id", path), path + "/id"));
  c.desired = vector_field(require(j, "desired", path), path + "/desired");
  c.total_demand = j.contains("total_demand") ? number(j["total_demand"], path + "/total_demand") : c.desired.sum();
  c.nonshiftable = vector_field(require(j, "nonshiftable", path), path + "/nonshiftable");
  c.slope = vector_field(require(j, "slope", path), path + "/slope");
  c.fixed_discomfort = number(require(j, "fixed_discomfort", path), path + "/fixed_discomfort");
  c.discomfort_cap = number(require(j, "discomfort_cap", path), path + "/discomfort_cap");
  if (j.contains("blocked_days")) {
    const json& days = j["blocked_days"];
    if (!days.is_array()) throw ValidationError(path + "/blocked_days", "expected an array of integers");
    auto& out = blocked[c.id];
    for (std::size_t k = 0; k < days.size(); ++k)
      out.push_back(static_cast<int>(integer(days[k], path + "/blocked_days/" + std::to_string(k))));
  }
  return c;
}

}  // namespace

int GeneratorSpec::count() const {
  int n = 0;
  for (const auto& t : types) n += t.count;
  return n;
}

void validate(const ScenarioDocument& doc) {
  if (doc.slots_per_period < 1) throw ValidationError("/slots_per_period", "must be positive");
  if (doc.price_low < 0.0) throw ValidationError("/prices/low", "negative");
  if (!(doc.price_high > doc.price_low)) throw ValidationError("/prices/high", "must exceed prices/low");
  const int sources = int(doc.par_goal.has_value()) + int(doc.threshold.has_value()) + int(doc.shifters.has_value());
  if (sources != 1) throw ValidationError("/par_goal", "exactly one of par_goal, threshold, shifters is required");
  if (doc.par_goal && !(*doc.par_goal > 0.0 && *doc.par_goal < 1.0))
    throw ValidationError("/par_goal", "must lie in (0, 1)");
  if (doc.threshold && !(*doc.threshold > 0.0)) throw ValidationError("/threshold", "must be positive");
  if (doc.shifters && *doc.shifters < 1) throw ValidationError("/shifters", "must be at least 1");
  if (!(doc.discount >= 0.0 && doc.discount < 1.0)) throw ValidationError("/discount", "must lie in [0, 1)");
  if (doc.horizon < 1) throw ValidationError("/horizon", "must be at least 1");
  if (!(doc.renewable_availability >= 0.0 && doc.renewable_availability <= 1.0))
    throw ValidationError("/renewable_availability", "must lie in [0, 1]");

  if (doc.generator.has_value() == !doc.consumers.empty())
    throw ValidationError("/population", "exactly one of generator, consumers is required");
  if (doc.generator) {
    const auto& g = *doc.generator;
    for (std::size_t k = 0; k < g.types.size(); ++k) {
      const std::string p = "/population/generator/types/" + std::to_string(k);
      if (g.types[k].type < 1 || g.types[k].type > 3) throw ValidationError(p + "/type", "must be 1, 2 or 3");
      if (g.types[k].count < 0) throw ValidationError(p + "/count", "negative");
    }
    if (g.count() < 1) throw ValidationError("/population/generator/types", "no consumers");
    if (!(g.shiftable_fraction > 0.0 && g.shiftable_fraction <= 1.0))
      throw ValidationError("/population/generator/shiftable_fraction", "must lie in (0, 1]");
    if (g.peak_shiftable && !(*g.peak_shiftable > 0.0))
      throw ValidationError("/population/generator/peak_shiftable", "must be positive");
    if (24 % doc.slots_per_period != 0)
      throw ValidationError("/slots_per_period", "generated populations need a divisor of 24");
  } else {
    std::set<int> ids;
    for (std::size_t k = 0; k < doc.consumers.size(); ++k) {
      const auto& c = doc.consumers[k];
      const std::string p = "/population/consumers/" + std::to_string(k);
      if (!ids.insert(c.id).second) throw ValidationError(p + "/id", "duplicate id");
      if (c.slots() != doc.slots_per_period) throw ValidationError(p + "/desired", "length differs from slots_per_period");
      try {
        c.validate();
      } catch (const ValidationError& e) {
        throw ValidationError(p, e.what());
      }
    }
  }
}

json to_json(const ScenarioDocument& doc) {
  json j;
  j["slots_per_period"] = doc.slots_per_period;
  j["prices"] = {{"low", doc.price_low}, {"high", doc.price_high}};
  if (doc.par_goal) j["par_goal"] = *doc.par_goal;
  if (doc.threshold) j["threshold"] = *doc.threshold;
  if (doc.shifters) j["shifters"] = *doc.shifters;
  j["discount"] = doc.discount;
  j["horizon"] = doc.horizon;
  j["renewable_availability"] = doc.renewable_availability;
  j["target_rule"] = to_string(doc.target_rule);
  if (doc.generator) {
    json g;
    json types = json::array();
    for (const auto& t : doc.generator->types) types.push_back({{"type", t.type}, {"count", t.count}});
    g["types"] = types;
    g["seed"] = doc.generator->seed;
    g["shiftable_fraction"] = doc.generator->shiftable_fraction;
    if (doc.generator->peak_shiftable) g["peak_shiftable"] = *doc.generator->peak_shiftable;
    j["population"] = {{"generator", g}};
  } else {
    json list = json::array();
    for (const auto& c : doc.consumers) {
      json cj = {{"id", c.id},
                 {"total_demand", c.total_demand},
                 {"desired", vector_json(c.desired)},
                 {"nonshiftable", vector_json(c.nonshiftable)},
                 {"slope", vector_json(c.slope)},
                 {"fixed_discomfort", c.fixed_discomfort},
                 {"discomfort_cap", c.discomfort_cap}};
      if (const auto it = doc.blocked_days.find(c.id); it != doc.blocked_days.end()) cj["blocked_days"] = it->second;
      list.push_back(cj);
    }
    j["population"] = {{"consumers", list}};
  }
  return j;
}

ScenarioDocument scenario_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("", "scenario must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!kTopKeys.count(key)) throw ValidationError("/" + key, "unknown field");

  ScenarioDocument doc;
  if (j.contains("slots_per_period"))
    doc.slots_per_period = static_cast<int>(integer(j["slots_per_period"], "/slots_per_period"));
  if (j.contains("prices")) {
    const json& p = j["prices"];
    doc.price_low = number(require(p, "low", "/prices"), "/prices/low");
    doc.price_high = number(require(p, "high", "/prices"), "/prices/high");
  }
  if (j.contains("par_goal")) doc.par_goal = number(j["par_goal"], "/par_goal");
  if (j.contains("threshold")) doc.threshold = number(j["threshold"], "/threshold");
  if (j.contains("shifters")) doc.shifters = static_cast<int>(integer(j["shifters"], "/shifters"));
  if (j.contains("discount")) doc.discount = number(j["discount"], "/discount");
  if (j.contains("horizon")) doc.horizon = integer(j["horizon"], "/horizon");
  if (j.contains("renewable_availability"))
    doc.renewable_availability = number(j["renewable_availability"], "/renewable_availability");
  if (j.contains("target_rule")) {
    if (!j["target_rule"].is_string()) throw ValidationError("/target_rule", "expected a string");
    doc.target_rule = parse_target_rule(j["target_rule"].get<std::string>());
  }

  const json& pop = require(j, "population", "");
  const bool has_gen = pop.is_object() && pop.contains("generator");
  const bool has_list = pop.is_object() && pop.contains("consumers");
  if (has_gen == has_list) throw ValidationError("/population", "exactly one of generator, consumers is required");
  if (has_gen) {
    doc.generator = parse_generator(pop["generator"], "/population/generator");
  } else {
    const json& list = pop["consumers"];
    if (!list.is_array() || list.empty())
      throw ValidationError("/population/consumers", "expected a nonempty array");
    for (std::size_t k = 0; k < list.size(); ++k)
      doc.consumers.push_back(parse_consumer(list[k], "/population/consumers/" + std::to_string(k), doc.blocked_days));
  }
  validate(doc);
  return doc;
}

ScenarioDocument load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return scenario_from_json(j);
}

void save_scenario(const ScenarioDocument& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << to_json(doc).dump(2) << '\n';
}

std::string fingerprint(const ScenarioDocument& doc) {
  const std::string text = to_json(doc).dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

Population generate_population(const GeneratorSpec& spec, int slots) {
  if (slots < 1 || 24 % slots != 0) throw ValidationError("/slots_per_period", "generated populations need a divisor of 24");
  std::vector<int> kinds;
  for (const auto& t : spec.types) kinds.insert(kinds.end(), static_cast<std::size_t>(std::max(0, t.count)), t.type);
  std::mt19937_64 rng(spec.seed);
  std::shuffle(kinds.begin(), kinds.end(), rng);

  const int group = 24 / slots;
  Population pop;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    const TypeRow& row = kTypes[static_cast<std::size_t>(kinds[i] - 1)];
    ConsumerSpec c;
    c.id = static_cast<int>(i);
    c.desired = Pattern::Zero(slots);
    c.slope = Pattern::Zero(slots);
    for (int hour = 0; hour < 24; ++hour) {
      c.desired[hour / group] += row.shape[static_cast<std::size_t>(hour)];
      c.slope[hour / group] += (hour < kEarlyHours ? row.k_early : row.k_late) / group;
    }
    c.nonshiftable = (1.0 - spec.shiftable_fraction) * c.desired;
    c.total_demand = c.desired.sum();
    c.fixed_discomfort = row.fixed_discomfort;
    c.discomfort_cap = row.discomfort_cap;
    pop.push_back(std::move(c));
  }
  if (pop.empty()) return pop;

  // The peak-slot shiftable load must be the same for everyone.
  const Eigen::Index peak = peak_slot(pop);
  double smallest = pop.front().desired[peak];
  for (const auto& c : pop) smallest = std::min(smallest, c.desired[peak]);
  const double shiftable = spec.peak_shiftable.value_or(spec.shiftable_fraction * smallest);
  if (shiftable > smallest)
    throw ValidationError("/population/generator/peak_shiftable", "exceeds the smallest peak-slot desired load");
  for (auto& c : pop) c.nonshiftable[peak] = c.desired[peak] - shiftable;
  return pop;
}

Population materialize_population(const ScenarioDocument& doc) {
  if (doc.generator) return generate_population(*doc.generator, doc.slots_per_period);
  return doc.consumers;
}

double derive_threshold(const ScenarioDocument& doc, const Population& population) {
  const Pattern total = desired_aggregate(population);
  const Eigen::Index peak = peak_slot(population);
  if (doc.threshold) return *doc.threshold;
  if (doc.par_goal) return (1.0 - *doc.par_goal) * total[peak];
  const auto& first = population.front();
  return total[peak] - *doc.shifters * (first.desired[peak] - first.nonshiftable[peak]);
}

ScenarioGame build(const ScenarioDocument& doc) {
  validate(doc);
  Population pop = materialize_population(doc);
  const PricingScheme pricing = make_pricing(pop, doc.price_low, doc.price_high, derive_threshold(doc, pop));
  ScenarioGame out;
  out.game = make_game(std::move(pop), pricing);
  out.target = solve_target(out.game.extremes, pricing.shifter_count, doc.target_rule);
  out.fingerprint = fingerprint(doc);
  return out;
}

}  // namespace dsm
