#include "dsm/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include <CLI11.hpp>

namespace dsm {

namespace fs = std::filesystem;

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

void write_extremes_csv(std::ostream& os, const Game& game, const std::string& fingerprint) {
  os << "fingerprint,consumer,class,base_cost,shift_cost,ne_cost,cap_cost,index_cap,index_bound,spread\n";
  for (int i = 0; i < game.size(); ++i) {
    const auto& e = game.extremes[static_cast<std::size_t>(i)];
    os << fingerprint << ',' << game.population[static_cast<std::size_t>(i)].id << ','
       << to_string(e.consumer_class) << ',' << format_number(e.base_cost) << ',' << format_number(e.shift_cost)
       << ',' << format_number(e.ne_cost) << ',' << format_number(e.cap_cost) << ','
       << format_number(e.index_cap()) << ',' << format_number(e.index_bound()) << ',' << (e.spread ? 1 : 0)
       << '\n';
  }
}

void write_target_csv(std::ostream& os, const TargetCostVector& target, const std::string& fingerprint) {
  os << "fingerprint,consumer,target_cost,index,bound\n";
  for (Eigen::Index i = 0; i < target.costs.size(); ++i)
    os << fingerprint << ',' << i << ',' << format_number(target.costs[i]) << ','
       << format_number(target.indices[i]) << ',' << format_number(target.bounds[i]) << '\n';
}

void write_comparison_csv(std::ostream& os, const ComparisonTable& table) {
  os << "fingerprint,mechanism,total_cost,par,simulated_total,tail\n";
  for (const auto& r : table.rows)
    os << table.fingerprint << ',' << r.name << ',' << format_number(r.total_cost) << ',' << format_number(r.par)
       << ',' << format_number(r.simulated_total) << ',' << format_number(r.tail) << '\n';
}

void write_ic_csv(std::ostream& os, const IcReport& report, const std::string& fingerprint) {
  os << "fingerprint,consumer,period,simulated,follow_cost,best_deviation_cost,gap\n";
  for (const auto& e : report.entries)
    os << fingerprint << ',' << e.consumer << ',' << e.period << ',' << (e.simulated ? 1 : 0) << ','
       << format_number(e.follow_cost) << ',' << format_number(e.best_deviation_cost) << ','
       << format_number(e.gap) << '\n';
}

void write_consumer_summary_csv(std::ostream& os, const SimulationTrace& trace, const TargetCostVector& target,
                                const Eigen::VectorXd& caps, const std::string& fingerprint) {
  const ConvergenceDiag diag = convergence_diag(trace, target, trace.discount);
  const auto fair = fairness_report(trace, trace.discount, caps);
  os << "fingerprint,consumer,discounted_cost,discounted_discomfort,discomfort_cap,target_cost,"
        "empirical_index,target_index,tail\n";
  for (Eigen::Index i = 0; i < target.costs.size(); ++i) {
    const DiscountedValue v = discounted_cost(trace, static_cast<int>(i), trace.discount);
    os << fingerprint << ',' << i << ',' << format_number(v.cost) << ',' << format_number(v.discomfort) << ','
       << format_number(fair[static_cast<std::size_t>(i)].cap) << ',' << format_number(target.costs[i]) << ','
       << format_number(diag.empirical[i]) << ',' << format_number(target.indices[i]) << ','
       << format_number(v.tail) << '\n';
  }
}

void write_trace_jsonl(std::ostream& os, const SimulationTrace& trace, const std::string& fingerprint) {
  nlohmann::json header = {{"kind", "header"},       {"fingerprint", fingerprint},
                           {"horizon", trace.horizon}, {"discount", trace.discount},
                           {"consumers", trace.records.empty() ? 0 : trace.records.front().stage_costs.size()}};
  os << header.dump() << '\n';
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  for (const auto& r : trace.records) {
    nlohmann::json j = {{"period", r.period},
                        {"punished", r.punished},
                        {"deviated", r.deviated},
                        {"off_recommendation", r.off_recommendation},
                        {"active", r.active_set},
                        {"prices", vec(r.prices)},
                        {"aggregate", vec(r.aggregate)},
                        {"stage_costs", vec(r.stage_costs)}};
    os << j.dump() << '\n';
  }
}

namespace {

struct Common {
  std::string scenario;
  long horizon = 0;
  double delta = 0.0;
  std::uint64_t seed = 0;
  std::string out;
  CLI::Option* horizon_opt = nullptr;
  CLI::Option* delta_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--scenario", c.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  c.horizon_opt = cmd->add_option("--horizon", c.horizon, "Periods to simulate")->check(CLI::PositiveNumber);
  c.delta_opt = cmd->add_option("--delta", c.delta, "Discount factor")->check(CLI::Range(0.0, 1.0));
  c.seed_opt = cmd->add_option("--seed", c.seed, "Population generator seed");
  c.out_opt = cmd->add_option("--out", c.out, "Output directory (default $DSM_OUT_DIR or .)");
}

ScenarioDocument load_with_overrides(const Common& c, std::ostream& err) {
  ScenarioDocument doc = load_scenario(c.scenario);
  if (c.horizon_opt->count()) {
    err << "note: --horizon overrides scenario horizon " << doc.horizon << " -> " << c.horizon << '\n';
    doc.horizon = c.horizon;
  }
  if (c.delta_opt->count()) {
    if (!(c.delta < 1.0)) throw ValidationError("--delta", "must be below 1");
    err << "note: --delta overrides scenario discount " << format_number(doc.discount) << " -> "
        << format_number(c.delta) << '\n';
    doc.discount = c.delta;
  }
  if (c.seed_opt->count()) {
    if (doc.generator) {
      err << "note: --seed overrides generator seed " << doc.generator->seed << " -> " << c.seed << '\n';
      doc.generator->seed = c.seed;
    } else {
      err << "note: --seed ignored for an explicit population\n";
    }
  }
  validate(doc);
  return doc;
}

void warn_spread(const Game& game, std::ostream& err) {
  for (int i = 0; i < game.size(); ++i)
    if (game.extremes[static_cast<std::size_t>(i)].spread)
      err << "warning: consumer " << game.population[static_cast<std::size_t>(i)].id
          << " spreads its shifted load; the cheapest slot lacks threshold headroom\n";
}

fs::path output_dir(const Common& c) {
  fs::path dir = ".";
  if (c.out_opt->count())
    dir = c.out;
  else if (const char* env = std::getenv("DSM_OUT_DIR"); env && *env)
    dir = env;
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  return os;
}

std::vector<Mechanism> parse_mechanisms(const std::vector<std::string>& names) {
  if (names.empty()) return {std::begin(kAllMechanisms), std::end(kAllMechanisms)};
  std::vector<Mechanism> out;
  for (const auto& n : names) out.push_back(parse_mechanism(n));
  return out;
}

CompareOptions compare_options(const ScenarioDocument& doc) {
  return {doc.discount, doc.horizon, doc.renewable_availability};
}

void print_table(std::ostream& out, const ComparisonTable& table) {
  out << "scenario " << table.fingerprint << '\n';
  for (const auto& r : table.rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "  %-12s total %10.4f  par %6.3f  simulated %10.4f (tail %.2g)\n",
                  r.name.c_str(), r.total_cost, r.par, r.simulated_total, r.tail);
    out << buf;
  }
}

// Applies one sweep point to a copy of the document.
ScenarioDocument sweep_point(ScenarioDocument doc, const std::string& param, const std::string& value) {
  auto need_generator = [&] {
    if (!doc.generator) throw ValidationError("--param", param + " sweeps need a generated population");
  };
  if (param == "count") {
    need_generator();
    const int target = std::stoi(value);
    auto& types = doc.generator->types;
    const int before = doc.generator->count();
    int placed = 0;
    for (std::size_t k = 0; k < types.size(); ++k) {
      if (k + 1 == types.size()) {
        types[k].count = target - placed;
      } else {
        types[k].count = static_cast<int>(std::lround(static_cast<double>(target) * types[k].count / before));
        placed += types[k].count;
      }
    }
  } else if (param == "shiftable_fraction") {
    need_generator();
    doc.generator->shiftable_fraction = std::stod(value);
    doc.generator->peak_shiftable.reset();
  } else if (param == "slots") {
    doc.slots_per_period = std::stoi(value);
  } else if (param == "par_goal") {
    doc.par_goal = std::stod(value);
    doc.threshold.reset();
    doc.shifters.reset();
  } else {
    throw ValidationError("--param", "unknown sweep parameter '" + param + "'");
  }
  validate(doc);
  return doc;
}

int cmd_simulate(const Common& c, long deviator, long at, std::ostream& out, std::ostream& err) {
  const ScenarioDocument doc = load_with_overrides(c, err);
  const ScenarioGame sg = build(doc);
  warn_spread(sg.game, err);
  std::vector<AgentPolicy> policies(static_cast<std::size_t>(sg.game.size()), Compliant{});
  if (deviator >= 0) {
    if (deviator >= sg.game.size()) throw ValidationError("--deviator", "no such consumer");
    policies[static_cast<std::size_t>(deviator)] = OneShotDeviator{static_cast<int>(deviator), at};
  }
  const SimulationTrace trace = run(sg.game, sg.target, policies, doc.horizon, doc.discount);

  const fs::path dir = output_dir(c);
  {
    auto os = open_out(dir / "trace.jsonl");
    write_trace_jsonl(os, trace, sg.fingerprint);
  }
  Eigen::VectorXd caps(sg.game.size());
  for (int i = 0; i < sg.game.size(); ++i) caps[i] = sg.game.population[static_cast<std::size_t>(i)].discomfort_cap;
  {
    auto os = open_out(dir / "consumers.csv");
    write_consumer_summary_csv(os, trace, sg.target, caps, sg.fingerprint);
  }

  double total = 0.0;
  for (int i = 0; i < sg.game.size(); ++i) total += discounted_cost(trace, i, doc.discount).cost;
  long punished_from = -1;
  for (const auto& r : trace.records)
    if (r.punished) {
      punished_from = r.period;
      break;
    }
  out << "scenario " << sg.fingerprint << ": " << trace.records.size() << " periods, discounted total "
      << format_number(total) << " (target " << format_number(sg.target.total()) << ")";
  if (punished_from >= 0) out << ", punishment from period " << punished_from;
  out << "\nwrote " << (dir / "trace.jsonl").string() << " and " << (dir / "consumers.csv").string() << '\n';
  return 0;
}

int cmd_pareto(const Common& c, std::ostream& out, std::ostream& err) {
  const ScenarioDocument doc = load_with_overrides(c, err);
  Population pop = materialize_population(doc);
  const PricingScheme pricing = make_pricing(pop, doc.price_low, doc.price_high, derive_threshold(doc, pop));
  const Game game = make_game(std::move(pop), pricing);
  warn_spread(game, err);
  const std::string fp = fingerprint(doc);

  const fs::path dir = output_dir(c);
  {
    auto os = open_out(dir / "extremes.csv");
    write_extremes_csv(os, game, fp);
  }
  double room = 0.0;
  for (const auto& e : game.extremes) room += e.index_bound();
  out << "scenario " << fp << ": N = " << game.size() << ", m = " << game.shifters() << ", peak slot "
      << pricing.peak_slot << ", threshold " << format_number(pricing.threshold) << " kWh\n"
      << "Pareto boundary: sum_i (C_i - base_i)/(shift_i - base_i) = " << game.shifters()
      << " with C_i >= base_i\n"
      << "feasible box: 0 <= g_i <= min(1, cap index); capacity sum " << format_number(room)
      << (room + 1e-9 >= game.shifters() ? " (feasible)" : " (infeasible)") << '\n'
      << "wrote " << (dir / "extremes.csv").string() << '\n';
  return 0;
}

int cmd_solve_target(const Common& c, std::ostream& out, std::ostream& err) {
  const ScenarioDocument doc = load_with_overrides(c, err);
  const ScenarioGame sg = build(doc);
  warn_spread(sg.game, err);
  const fs::path dir = output_dir(c);
  {
    auto os = open_out(dir / "target.csv");
    write_target_csv(os, sg.target, sg.fingerprint);
  }
  const std::vector<double> caps(sg.target.bounds.data(), sg.target.bounds.data() + sg.target.bounds.size());
  const int n = sg.game.size(), m = sg.game.shifters();
  out << "scenario " << sg.fingerprint << ": total target cost " << format_number(sg.target.total()) << '\n'
      << "discount bounds: uniform " << format_number(min_discount(n, m)) << ", cap-aware "
      << format_number(exact_min_discount(caps, n, m)) << ", index-safe "
      << format_number(index_safe_discount(sg.target)) << " (scenario uses " << format_number(doc.discount)
      << ")\n"
      << "wrote " << (dir / "target.csv").string() << '\n';
  return 0;
}

int cmd_compare(const Common& c, const std::vector<std::string>& mechanisms, std::ostream& out,
                std::ostream& err) {
  const ScenarioDocument doc = load_with_overrides(c, err);
  const ScenarioGame sg = build(doc);
  warn_spread(sg.game, err);
  const auto mechs = parse_mechanisms(mechanisms);
  const ComparisonTable table = compare(sg.game, sg.target, mechs, compare_options(doc), sg.fingerprint);
  const fs::path dir = output_dir(c);
  {
    auto os = open_out(dir / "compare.csv");
    write_comparison_csv(os, table);
  }
  print_table(out, table);
  out << "wrote " << (dir / "compare.csv").string() << '\n';
  return 0;
}

int cmd_audit(const Common& c, long window, std::ostream& out, std::ostream& err) {
  const ScenarioDocument doc = load_with_overrides(c, err);
  const ScenarioGame sg = build(doc);
  warn_spread(sg.game, err);
  AuditOptions opts;
  opts.window = std::min(window, doc.horizon);
  const IcReport report = audit_ic_report(sg.game, sg.target, doc.discount, opts);
  const fs::path dir = output_dir(c);
  {
    auto os = open_out(dir / "ic_report.csv");
    write_ic_csv(os, report, sg.fingerprint);
  }
  out << "scenario " << sg.fingerprint << ": " << report.entries.size() << " checks, min gap "
      << format_number(report.min_gap) << ", simulation error " << format_number(report.max_simulation_error)
      << " (tail bound " << format_number(report.tail_bound) << ")\n"
      << "wrote " << (dir / "ic_report.csv").string() << '\n';
  if (!report.ok) {
    err << "error: not incentive compatible; some consumer profits from a one-shot deviation\n";
    return 3;
  }
  return 0;
}

int cmd_sweep(const Common& c, const std::string& param, const std::vector<std::string>& values,
              const std::vector<std::string>& mechanisms, unsigned threads, std::ostream& out, std::ostream& err) {
  const ScenarioDocument base = load_with_overrides(c, err);
  const auto mechs = parse_mechanisms(mechanisms);
  const fs::path dir = output_dir(c);

  std::vector<ComparisonTable> tables(values.size());
  std::vector<std::string> failures(values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < values.size(); k = next++) {
      try {
        const ScenarioDocument doc = sweep_point(base, param, values[k]);
        const ScenarioGame sg = build(doc);
        tables[k] = compare(sg.game, sg.target, mechs, compare_options(doc), sg.fingerprint);
        auto os = open_out(dir / ("compare_" + param + "_" + values[k] + ".csv"));
        write_comparison_csv(os, tables[k]);
      } catch (const std::exception& e) {
        failures[k] = e.what();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, values.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  bool failed = false;
  for (std::size_t k = 0; k < values.size(); ++k)
    if (!failures[k].empty()) {
      err << "error: " << param << " = " << values[k] << ": " << failures[k] << '\n';
      failed = true;
    }
  if (failed) return 1;

  auto os = open_out(dir / ("sweep_" + param + ".csv"));
  os << "param,value,fingerprint,mechanism,total_cost,par\n";
  for (std::size_t k = 0; k < values.size(); ++k) {
    out << param << " = " << values[k] << '\n';
    print_table(out, tables[k]);
    for (const auto& r : tables[k].rows)
      os << param << ',' << values[k] << ',' << tables[k].fingerprint << ',' << r.name << ','
         << format_number(r.total_cost) << ',' << format_number(r.par) << '\n';
  }
  out << "wrote " << (dir / ("sweep_" + param + ".csv")).string() << '\n';
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Repeated energy-scheduling game: targets, simulation, audits and baselines", "dsm"};
  app.require_subcommand(1);

  Common simulate_c, pareto_c, target_c, compare_c, audit_c, sweep_c;
  long deviator = -1, deviate_at = 0, window = 200;
  std::vector<std::string> compare_mechs, sweep_mechs, sweep_values;
  std::string sweep_param;
  unsigned threads = 0;

  auto* simulate = app.add_subcommand("simulate", "Run the mechanism and write the period trace");
  add_common(simulate, simulate_c);
  simulate->add_option("--deviator", deviator, "Consumer that deviates once");
  simulate->add_option("--at", deviate_at, "Period of the deviation");

  auto* pareto = app.add_subcommand("pareto", "Extreme costs and the Pareto boundary");
  add_common(pareto, pareto_c);

  auto* target = app.add_subcommand("solve-target", "Target cost vector and discount bounds");
  add_common(target, target_c);

  auto* cmp = app.add_subcommand("compare", "Compare the mechanism with the baselines");
  add_common(cmp, compare_c);
  cmp->add_option("--mechanisms", compare_mechs, "Subset of N-DSM, OG-DSM, JO-DSM, SC-DSM, BILLING-MIN");

  auto* audit = app.add_subcommand("audit-ic", "One-shot deviation audit");
  add_common(audit, audit_c);
  audit->add_option("--window", window, "Cooperative periods to audit")->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep", "Compare over a parameter grid");
  add_common(sweep, sweep_c);
  sweep->add_option("--param", sweep_param, "count | shiftable_fraction | slots | par_goal")
      ->required()
      ->check(CLI::IsMember({"count", "shiftable_fraction", "slots", "par_goal"}));
  sweep->add_option("--values", sweep_values, "Parameter values")->required()->expected(1, -1);
  sweep->add_option("--mechanisms", sweep_mechs, "Subset of mechanisms");
  sweep->add_option("--threads", threads, "Worker threads (0 = hardware)");

  const CLI::Validator known_mechanism(
      [](std::string& name) {
        try {
          parse_mechanism(name);
          return std::string();
        } catch (const Error& e) {
          return std::string(e.what());
        }
      },
      "MECHANISM");
  cmp->get_option("--mechanisms")->check(known_mechanism);
  sweep->get_option("--mechanisms")->check(known_mechanism);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(simulate_c, deviator, deviate_at, out, err);
    if (pareto->parsed()) return cmd_pareto(pareto_c, out, err);
    if (target->parsed()) return cmd_solve_target(target_c, out, err);
    if (cmp->parsed()) return cmd_compare(compare_c, compare_mechs, out, err);
    if (audit->parsed()) return cmd_audit(audit_c, window, out, err);
    if (sweep->parsed()) return cmd_sweep(sweep_c, sweep_param, sweep_values, sweep_mechs, threads, out, err);
  } catch (const Infeasible& e) {
    err << "error: infeasible target: " << e.what() << '\n';
    return 1;
  } catch (const NotIC& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace dsm
