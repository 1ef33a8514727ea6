#pragma once

// Stationary comparison mechanisms. Each returns one daily profile that
// repeats every period, so its discounted average equals its daily cost.

#include <string>

#include "dsm/engine.hpp"

namespace dsm {

struct BaselineResult {
  std::string name;
  Profile profiles;
  Eigen::VectorXd stage_costs;
  double total_cost = 0.0;
  double par = 0.0;
};

/// Peak-to-average ratio. A column vector is read as per-slot loads; any
/// other shape as a profile whose column sums are the loads.
template <typename Derived>
double par(const Eigen::MatrixBase<Derived>& loads) {
  Pattern total;
  if (loads.cols() == 1)
    total = loads.col(0);
  else
    total = loads.colwise().sum().transpose();
  eigen_assert(total.size() > 0);
  return total.maxCoeff() / total.mean();
}

/// Every consumer at its desired pattern: the stage equilibrium.
BaselineResult og_dsm(const Game& game);

/// One-shot social optimum: the m consumers with the smallest shift
/// discomfort (lowest id on ties) shift, unless nobody shifting is cheaper.
BaselineResult jo_dsm(const Game& game);

/// Each consumer alone minimizes billing at fixed prices (high at the peak
/// slot only) plus (1 - renewable) times discomfort. Reported costs carry the
/// same (1 - renewable) discomfort weight.
BaselineResult sc_dsm(const Game& game, double renewable);

/// Everyone moves an equal share (peak - threshold)/N of the peak load to
/// their own cheapest other slot. Throws InsufficientShiftable if the share
/// exceeds some consumer's peak shiftable load.
BaselineResult billing_min(const Game& game);

}  // namespace dsm
