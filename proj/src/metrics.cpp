#include "dsm/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace dsm {

const char* to_string(Mechanism m) {
  switch (m) {
    case Mechanism::NDsm: return "N-DSM";
    case Mechanism::OgDsm: return "OG-DSM";
    case Mechanism::JoDsm: return "JO-DSM";
    case Mechanism::ScDsm: return "SC-DSM";
    case Mechanism::BillingMin: return "BILLING-MIN";
  }
  return "?";
}

Mechanism parse_mechanism(const std::string& name) {
  std::string up;
  for (const char ch : name) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  std::replace(up.begin(), up.end(), '_', '-');
  for (const Mechanism m : kAllMechanisms)
    if (up == to_string(m)) return m;
  throw ValidationError("mechanisms", "unknown mechanism '" + name + "'");
}

const MechanismRow* ComparisonTable::find(const std::string& name) const {
  for (const auto& r : rows)
    if (r.name == name) return &r;
  return nullptr;
}

namespace {

MechanismRow from_baseline(const BaselineResult& b) {
  MechanismRow row;
  row.name = b.name;
  row.total_cost = b.total_cost;
  row.par = b.par;
  row.per_consumer_costs = b.stage_costs;
  row.simulated_total = b.total_cost;
  return row;
}

MechanismRow ndsm_row(const Game& game, const TargetCostVector& target, const CompareOptions& options) {
  const std::vector<AgentPolicy> policies(static_cast<std::size_t>(game.size()), Compliant{});
  const SimulationTrace trace = run(game, target, policies, options.horizon, options.discount);

  MechanismRow row;
  row.name = to_string(Mechanism::NDsm);
  row.total_cost = target.total();
  row.per_consumer_costs = target.costs;
  for (int i = 0; i < game.size(); ++i) {
    const DiscountedValue v = discounted_cost(trace, i, options.discount);
    row.simulated_total += v.cost;
    row.tail += v.tail;
  }
  // Worst day of the run.
  for (const auto& rec : trace.records) row.par = std::max(row.par, par(rec.aggregate));
  return row;
}

}  // namespace

ComparisonTable compare(const Game& game, const TargetCostVector& target, std::span<const Mechanism> mechanisms,
                        const CompareOptions& options, std::string fingerprint) {
  ComparisonTable table;
  table.fingerprint = std::move(fingerprint);
  for (const Mechanism m : mechanisms) {
    switch (m) {
      case Mechanism::NDsm: table.rows.push_back(ndsm_row(game, target, options)); break;
      case Mechanism::OgDsm: table.rows.push_back(from_baseline(og_dsm(game))); break;
      case Mechanism::JoDsm: table.rows.push_back(from_baseline(jo_dsm(game))); break;
      case Mechanism::ScDsm: table.rows.push_back(from_baseline(sc_dsm(game, options.renewable))); break;
      case Mechanism::BillingMin: table.rows.push_back(from_baseline(billing_min(game))); break;
    }
  }
  return table;
}

std::vector<FairnessEntry> fairness_report(const SimulationTrace& trace, double delta,
                                           const Eigen::VectorXd& caps) {
  std::vector<FairnessEntry> out;
  for (Eigen::Index i = 0; i < caps.size(); ++i) {
    const DiscountedValue v = discounted_cost(trace, static_cast<int>(i), delta);
    double largest = 0.0;
    for (const auto& rec : trace.records) largest = std::max(largest, rec.discomforts[i]);
    FairnessEntry e;
    e.consumer = static_cast<int>(i);
    e.discounted_discomfort = v.discomfort;
    e.cap = caps[i];
    e.tail = std::pow(delta, static_cast<double>(trace.records.size())) * largest;
    // Binding caps are met with equality up to rounding.
    e.ok = e.discounted_discomfort <= e.cap + e.tail + 1e-9 * std::max(1.0, e.cap);
    out.push_back(e);
  }
  return out;
}

ConvergenceDiag convergence_diag(const SimulationTrace& trace, const TargetCostVector& target, double delta) {
  ConvergenceDiag d;
  d.empirical = Eigen::VectorXd::Zero(target.indices.size());
  double weight = delta == 0.0 ? 1.0 : 1.0 - delta;
  for (const auto& rec : trace.records) {
    for (const int i : rec.active_set) d.empirical[i] += weight;
    weight *= delta;
    if (weight == 0.0) break;
  }
  d.gap = (d.empirical - target.indices).cwiseAbs().maxCoeff();
  d.bound = std::pow(delta, static_cast<double>(trace.records.size()));
  return d;
}

double hyperplane_drift(const SimulationTrace& trace, int shifters) {
  double worst = 0.0;
  for (const auto& rec : trace.records)
    if (!rec.punished) worst = std::max(worst, std::abs(rec.indices.sum() - shifters));
  if (!trace.final_state.punished && trace.final_state.indices.size() > 0)
    worst = std::max(worst, std::abs(trace.final_state.indices.sum() - shifters));
  return worst;
}

}  // namespace dsm
