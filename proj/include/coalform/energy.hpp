#pragma once

// Peer-to-peer energy-sharing cost oracle. The cost of a coalition is the
// optimum of a dispatch LP over a horizon of timeslots: per household the
// battery state of charge evolves under charge/discharge efficiencies and
// rate limits, demand is served from battery, grid and PV, PV splits into
// demand/battery/feed-in, and grid flows split into billed imports/exports
// and settlement flows. Settlement (virtual net metering) flows must net to
// zero within the coalition in every slot.

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coalform/core.hpp"
#include "coalform/lp.hpp"

namespace coalform {

struct BatterySpec {
  double capacity = 0.0;  // kWh
  double eta_c = 1.0;     // charging efficiency, in (0, 1]
  double eta_d = 1.0;     // discharging efficiency, >= 1
  double mu_c = 0.0;      // max charge per slot, kWh
  double mu_d = 0.0;      // max discharge per slot, kWh
};

struct TariffSpec {
  double c_g_plus = 0.0;   // consumption tariff, currency/kWh
  double c_g_minus = 0.0;  // feed-in tariff, currency/kWh
  double c_s = 0.0;        // settlement service fee, currency/kWh
};

struct HouseholdProfile {
  std::vector<double> demand;  // kWh per slot, length T
  std::vector<double> pv;      // kWh per slot, length T
  BatterySpec battery;
};

struct EnergyScenario {
  int horizon = 0;            // number of timeslots T
  double slot_duration = 1.0; // hours per slot (metadata; series are energies)
  std::vector<HouseholdProfile> households;
  TariffSpec tariffs;
};

inline BatterySpec default_battery() { return BatterySpec{9.8, 0.95, 1.05, 5.0, 5.0}; }
inline TariffSpec default_tariffs() { return TariffSpec{0.20, 0.10, 0.00}; }

inline void validate_scenario(const EnergyScenario& s) {
  if (s.horizon < 1) throw ValidationError("scenario horizon must be >= 1");
  if (!(s.slot_duration > 0.0)) throw ValidationError("slot_duration must be positive");
  if (s.households.empty()) throw ValidationError("scenario needs at least one household");
  const auto& t = s.tariffs;
  if (t.c_g_plus < 0.0 || t.c_g_minus < 0.0 || t.c_s < 0.0) {
    throw ValidationError("tariffs must be non-negative");
  }
  if (t.c_g_minus > t.c_g_plus) {
    throw ValidationError("feed-in tariff must not exceed the consumption tariff");
  }
  for (std::size_t h = 0; h < s.households.size(); ++h) {
    const auto& hh = s.households[h];
    const std::string who = "household " + std::to_string(h);
    if (static_cast<int>(hh.demand.size()) != s.horizon ||
        static_cast<int>(hh.pv.size()) != s.horizon) {
      throw ValidationError(who + ": series length must equal the horizon");
    }
    for (int t2 = 0; t2 < s.horizon; ++t2) {
      const double d = hh.demand[static_cast<std::size_t>(t2)];
      const double r = hh.pv[static_cast<std::size_t>(t2)];
      if (!std::isfinite(d) || d < 0.0) {
        throw ValidationError(who + ": demand_kwh at slot " + std::to_string(t2) +
                              " must be finite and non-negative");
      }
      if (!std::isfinite(r) || r < 0.0) {
        throw ValidationError(who + ": pv_kwh at slot " + std::to_string(t2) +
                              " must be finite and non-negative");
      }
    }
    const auto& b = hh.battery;
    if (b.capacity < 0.0) throw ValidationError(who + ": battery capacity must be >= 0");
    if (!(b.eta_c > 0.0 && b.eta_c <= 1.0)) {
      throw ValidationError(who + ": eta_c must be in (0, 1]");
    }
    if (!(b.eta_d >= 1.0)) throw ValidationError(who + ": eta_d must be >= 1");
    if (b.mu_c < 0.0 || b.mu_d < 0.0) {
      throw ValidationError(who + ": charge/discharge rates must be >= 0");
    }
  }
}

// Flow values for one household in one slot, all kWh. soc is the state of
// charge after the slot's charging and discharging.
struct SlotDispatch {
  double soc = 0.0;
  double batt_to_demand = 0.0;
  double batt_to_grid = 0.0;
  double pv_to_demand = 0.0;
  double pv_to_batt = 0.0;
  double pv_to_grid = 0.0;
  double grid_to_demand = 0.0;
  double grid_to_batt = 0.0;
  double grid_import = 0.0;
  double grid_export = 0.0;
  double vnm_import = 0.0;
  double vnm_export = 0.0;
};

struct HouseholdDispatch {
  ParticipantId household = -1;
  std::vector<SlotDispatch> slots;
};

struct DispatchSolution {
  std::vector<HouseholdDispatch> households;
  double objective = 0.0;
};

namespace detail {

enum DispatchVar {
  kSoc = 0, kBattToDemand, kBattToGrid, kPvToDemand, kPvToBatt, kPvToGrid,
  kGridToDemand, kGridToBatt, kGridImport, kGridExport, kVnmImport, kVnmExport,
  kVarsPerSlot
};

inline int dispatch_var(int member, int slot, int kind, int horizon) {
  return (member * horizon + slot) * kVarsPerSlot + kind;
}

}  // namespace detail

// Optimal dispatch cost for a coalition of households. The LP is always
// feasible: with settlement flows at zero, batteries idle and all demand
// imported from the grid every constraint is satisfiable.
inline std::pair<double, DispatchSolution> coalition_cost(const EnergyScenario& scenario,
                                                          const Coalition& coalition) {
  using namespace detail;
  validate_scenario(scenario);
  for (ParticipantId i : coalition.members()) {
    if (i < 0 || i >= static_cast<int>(scenario.households.size())) {
      throw ValidationError("coalition member " + std::to_string(i) +
                            " does not index a household");
    }
  }
  const int T = scenario.horizon;
  const int size = coalition.size();
  lp::DenseLp problem(size * T * kVarsPerSlot);
  const auto& tariffs = scenario.tariffs;

  for (int m = 0; m < size; ++m) {
    const auto& hh = scenario.households[static_cast<std::size_t>(coalition.members()[static_cast<std::size_t>(m)])];
    const auto& batt = hh.battery;
    for (int t = 0; t < T; ++t) {
      auto var = [&](int kind) { return dispatch_var(m, t, kind, T); };
      problem.set_objective(var(kGridImport), tariffs.c_g_plus);
      problem.set_objective(var(kGridExport), -tariffs.c_g_minus);
      problem.set_objective(var(kVnmImport), tariffs.c_s);

      // State of charge after this slot; the initial charge is zero and any
      // residual charge at the end of the horizon is simply unused.
      std::vector<std::pair<int, double>> soc{
          {var(kSoc), 1.0},
          {var(kPvToBatt), -batt.eta_c},
          {var(kGridToBatt), -batt.eta_c},
          {var(kBattToDemand), batt.eta_d},
          {var(kBattToGrid), batt.eta_d}};
      if (t > 0) soc.push_back({dispatch_var(m, t - 1, kSoc, T), -1.0});
      problem.add_equality(soc, 0.0);
      problem.add_upper_bound({{var(kSoc), 1.0}}, batt.capacity);
      problem.add_upper_bound({{var(kGridToBatt), 1.0}, {var(kPvToBatt), 1.0}}, batt.mu_c);
      problem.add_upper_bound({{var(kBattToDemand), 1.0}, {var(kBattToGrid), 1.0}}, batt.mu_d);

      problem.add_equality({{var(kBattToDemand), 1.0},
                            {var(kGridToDemand), 1.0},
                            {var(kPvToDemand), 1.0}},
                           hh.demand[static_cast<std::size_t>(t)]);
      problem.add_equality({{var(kPvToDemand), 1.0},
                            {var(kPvToBatt), 1.0},
                            {var(kPvToGrid), 1.0}},
                           hh.pv[static_cast<std::size_t>(t)]);
      problem.add_equality({{var(kGridToDemand), 1.0},
                            {var(kGridToBatt), 1.0},
                            {var(kGridImport), -1.0},
                            {var(kVnmImport), -1.0}},
                           0.0);
      problem.add_equality({{var(kBattToGrid), 1.0},
                            {var(kPvToGrid), 1.0},
                            {var(kGridExport), -1.0},
                            {var(kVnmExport), -1.0}},
                           0.0);
    }
  }
  // Settlement flows net to zero within the coalition, slot by slot.
  for (int t = 0; t < T; ++t) {
    std::vector<std::pair<int, double>> balance;
    for (int m = 0; m < size; ++m) {
      balance.push_back({dispatch_var(m, t, kVnmImport, T), 1.0});
      balance.push_back({dispatch_var(m, t, kVnmExport, T), -1.0});
    }
    problem.add_equality(balance, 0.0);
  }

  lp::Solution sol = problem.solve();
  if (sol.status != lp::Status::Optimal) {
    throw SolverFailure("dispatch LP for " + coalition.to_string() +
                        " did not solve to optimality");
  }

  DispatchSolution dispatch;
  dispatch.objective = sol.objective;
  dispatch.households.resize(static_cast<std::size_t>(size));
  for (int m = 0; m < size; ++m) {
    auto& hd = dispatch.households[static_cast<std::size_t>(m)];
    hd.household = coalition.members()[static_cast<std::size_t>(m)];
    hd.slots.resize(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
      auto val = [&](int kind) {
        return sol.x[static_cast<std::size_t>(dispatch_var(m, t, kind, T))];
      };
      auto& slot = hd.slots[static_cast<std::size_t>(t)];
      slot.soc = val(kSoc);
      slot.batt_to_demand = val(kBattToDemand);
      slot.batt_to_grid = val(kBattToGrid);
      slot.pv_to_demand = val(kPvToDemand);
      slot.pv_to_batt = val(kPvToBatt);
      slot.pv_to_grid = val(kPvToGrid);
      slot.grid_to_demand = val(kGridToDemand);
      slot.grid_to_batt = val(kGridToBatt);
      slot.grid_import = val(kGridImport);
      slot.grid_export = val(kGridExport);
      slot.vnm_import = val(kVnmImport);
      slot.vnm_export = val(kVnmExport);
    }
  }
  return {sol.objective, std::move(dispatch)};
}

inline std::vector<double> standalone_costs(const EnergyScenario& scenario) {
  std::vector<double> out;
  out.reserve(scenario.households.size());
  for (int i = 0; i < static_cast<int>(scenario.households.size()); ++i) {
    out.push_back(coalition_cost(scenario, Coalition{i}).first);
  }
  return out;
}

// Largest absolute constraint violation of a dispatch against the scenario,
// including the recomputed-objective mismatch. Used to validate solutions.
inline double max_constraint_violation(const EnergyScenario& scenario,
                                       const Coalition& coalition,
                                       const DispatchSolution& dispatch) {
  const int T = scenario.horizon;
  if (dispatch.households.size() != coalition.members().size()) return kInfinity;
  for (std::size_t m = 0; m < dispatch.households.size(); ++m) {
    if (dispatch.households[m].household != coalition.members()[m]) return kInfinity;
  }
  double worst = 0.0;
  auto track = [&worst](double v) { worst = std::max(worst, std::fabs(v)); };
  double objective = 0.0;
  for (std::size_t m = 0; m < dispatch.households.size(); ++m) {
    const auto& hd = dispatch.households[m];
    const auto& hh = scenario.households[static_cast<std::size_t>(hd.household)];
    const auto& batt = hh.battery;
    double prev_soc = 0.0;
    for (int t = 0; t < T; ++t) {
      const auto& s = hd.slots[static_cast<std::size_t>(t)];
      track(s.soc - prev_soc -
            batt.eta_c * (s.pv_to_batt + s.grid_to_batt) +
            batt.eta_d * (s.batt_to_demand + s.batt_to_grid));
      track(std::max(0.0, s.soc - batt.capacity));
      track(std::max(0.0, -s.soc));
      track(std::max(0.0, s.grid_to_batt + s.pv_to_batt - batt.mu_c));
      track(std::max(0.0, s.batt_to_demand + s.batt_to_grid - batt.mu_d));
      track(s.batt_to_demand + s.grid_to_demand + s.pv_to_demand -
            hh.demand[static_cast<std::size_t>(t)]);
      track(s.pv_to_demand + s.pv_to_batt + s.pv_to_grid -
            hh.pv[static_cast<std::size_t>(t)]);
      track(s.grid_to_demand + s.grid_to_batt - s.grid_import - s.vnm_import);
      track(s.batt_to_grid + s.pv_to_grid - s.grid_export - s.vnm_export);
      objective += scenario.tariffs.c_g_plus * s.grid_import -
                   scenario.tariffs.c_g_minus * s.grid_export +
                   scenario.tariffs.c_s * s.vnm_import;
      prev_soc = s.soc;
    }
  }
  for (int t = 0; t < T; ++t) {
    double net = 0.0;
    for (const auto& hd : dispatch.households) {
      const auto& s = hd.slots[static_cast<std::size_t>(t)];
      net += s.vnm_import - s.vnm_export;
    }
    track(net);
  }
  track(objective - dispatch.objective);
  return worst;
}

// Wraps the dispatch LP as a memoizing cost oracle. The oracle is monotone
// (a new household brings its own demand obligations) and subadditive (a
// coalition can always replicate the standalone dispatches with settlement
// flows at zero); subadditivity is checked on every evaluated coalition.
inline CostOracle as_cost_oracle(const EnergyScenario& scenario) {
  validate_scenario(scenario);
  auto shared = std::make_shared<EnergyScenario>(scenario);
  return CostOracle(
      static_cast<int>(scenario.households.size()),
      [shared](const Coalition& g) -> std::optional<double> {
        return coalition_cost(*shared, g).first;
      },
      /*monotone=*/true, /*subadditive=*/true);
}

}  // namespace coalform
