#pragma once

// Command dispatch and report serialization behind the dsm executable.

#include <iosfwd>
#include <string>
#include <vector>

#include "dsm/metrics.hpp"
#include "dsm/scenario.hpp"

namespace dsm {

/// Six significant digits, as used in every CSV cell.
std::string format_number(double value);

void write_extremes_csv(std::ostream& os, const Game& game, const std::string& fingerprint);
void write_target_csv(std::ostream& os, const TargetCostVector& target, const std::string& fingerprint);
void write_comparison_csv(std::ostream& os, const ComparisonTable& table);
void write_ic_csv(std::ostream& os, const IcReport& report, const std::string& fingerprint);
void write_consumer_summary_csv(std::ostream& os, const SimulationTrace& trace, const TargetCostVector& target,
                                const Eigen::VectorXd& caps, const std::string& fingerprint);

/// Header line, then one JSON object per period.
void write_trace_jsonl(std::ostream& os, const SimulationTrace& trace, const std::string& fingerprint);

/// `args` excludes the program name. Returns the process exit status:
/// 0 success, 1 domain error, 2 usage error, 3 incentive-compatibility failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dsm
