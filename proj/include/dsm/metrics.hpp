#pragma once

// Comparison tables, fairness against discomfort caps and convergence of
// the realized shifting frequencies.

#include <span>
#include <string>
#include <vector>

#include "dsm/baselines.hpp"

namespace dsm {

enum class Mechanism { NDsm, OgDsm, JoDsm, ScDsm, BillingMin };

const char* to_string(Mechanism m);

/// Accepts the display names (N-DSM, OG-DSM, ...) case-insensitively.
Mechanism parse_mechanism(const std::string& name);

inline constexpr Mechanism kAllMechanisms[] = {Mechanism::NDsm, Mechanism::OgDsm, Mechanism::JoDsm,
                                               Mechanism::ScDsm, Mechanism::BillingMin};

struct MechanismRow {
  std::string name;
  double total_cost = 0.0;
  double par = 0.0;
  Eigen::VectorXd per_consumer_costs;
  // Discounted simulation total and its truncation bound; baselines are
  // stationary, so these equal total_cost and 0.
  double simulated_total = 0.0;
  double tail = 0.0;
};

struct ComparisonTable {
  std::vector<MechanismRow> rows;
  std::string fingerprint;

  const MechanismRow* find(const std::string& name) const;
};

struct CompareOptions {
  double discount = 0.995;
  long horizon = 5000;
  double renewable = 0.8;
};

/// N-DSM rows report the analytic C* total with the all-compliant
/// simulation alongside; baseline rows report their daily totals.
ComparisonTable compare(const Game& game, const TargetCostVector& target, std::span<const Mechanism> mechanisms,
                        const CompareOptions& options, std::string fingerprint);

struct FairnessEntry {
  int consumer = 0;
  double discounted_discomfort = 0.0;
  double cap = 0.0;
  double tail = 0.0;
  bool ok = true;
};

/// Discounted discomfort of each consumer against its cap, allowing the
/// truncation tail and a relative rounding slack of 1e-9.
std::vector<FairnessEntry> fairness_report(const SimulationTrace& trace, double delta,
                                           const Eigen::VectorXd& caps);

struct ConvergenceDiag {
  Eigen::VectorXd empirical;  // (1 - delta) sum delta^t 1{i active at t}
  double gap = 0.0;           // sup-norm distance to the target indices
  double bound = 0.0;         // delta^T; the gap also carries ~1e-14 of rounding
};

ConvergenceDiag convergence_diag(const SimulationTrace& trace, const TargetCostVector& target, double delta);

/// Largest |sum g(t) - m| over the cooperative periods of the trace.
double hyperplane_drift(const SimulationTrace& trace, int shifters);

}  // namespace dsm
