#pragma once

// Numerical check that the egalitarian split solves the Nash bargaining
// program: maximize prod_i u_i subject to sum_i p_i = C(G).

#include <cmath>
#include <vector>

#include "coalform/core.hpp"

namespace coalform {

// Maximizes the product of utilities over the budget hyperplane by repeated
// exact line searches along pairwise transfer directions (moving payment
// from one member to another keeps the budget). For the pair (i, j) with
// the other coordinates fixed, (u_i - d)(u_j + d) is maximized at
// d = (u_i - u_j) / 2, so each step equalizes one pair of utilities.
// Returns the resulting payment vector.
inline std::vector<double> maximize_nash_product(const std::vector<double>& standalone,
                                                 double coalition_cost,
                                                 int max_sweeps = 200,
                                                 double tol = 1e-12) {
  const std::size_t size = standalone.size();
  // Start from the equal split, an arbitrary point on the hyperplane.
  std::vector<double> pay(size, coalition_cost / static_cast<double>(size));
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double spread = 0.0;
    for (std::size_t i = 0; i + 1 < size; ++i) {
      for (std::size_t j = i + 1; j < size; ++j) {
        const double ui = standalone[i] - pay[i];
        const double uj = standalone[j] - pay[j];
        const double transfer = (ui - uj) / 2.0;
        pay[i] += transfer;
        pay[j] -= transfer;
        spread = std::max(spread, std::fabs(transfer));
      }
    }
    if (spread <= tol) break;
  }
  return pay;
}

// True iff the numerically found Nash bargaining maximizer matches the
// egalitarian payments within the tolerance. Requires strictly positive
// total surplus, otherwise the product objective is degenerate.
inline bool nash_bargaining_verify(const Coalition& g, const CostOracle& oracle,
                                   double tolerance = 1e-6) {
  auto cost = oracle.evaluate(g);
  if (!cost.has_value()) {
    throw InfeasibleCoalition("coalition " + g.to_string() + " has unbounded cost");
  }
  const double surplus = oracle.standalone_sum(g) - *cost;
  if (!(surplus > 0.0)) {
    throw DegenerateSurplus("coalition " + g.to_string() +
                            " has non-positive total surplus " +
                            std::to_string(surplus));
  }
  std::vector<double> standalone;
  standalone.reserve(g.members().size());
  for (ParticipantId i : g.members()) standalone.push_back(oracle.standalone_cost(i));

  std::vector<double> maximizer = maximize_nash_product(standalone, *cost);
  PaymentVector egalitarian = payment(MechanismKind::EgalitarianNash, g, oracle);
  for (std::size_t idx = 0; idx < maximizer.size(); ++idx) {
    if (std::fabs(maximizer[idx] - egalitarian.payments[idx]) > tolerance) {
      return false;
    }
  }
  return true;
}

}  // namespace coalform
