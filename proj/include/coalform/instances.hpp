#pragma once

// Instance sources: seeded random monotone cost oracles, set-cover cost
// constructions, synthetic energy scenarios and on-disk scenario loading.
// All generators are pure functions of their spec; random draws use
// mt19937_64 with an explicit 53-bit uniform mapping so identical seeds
// produce bitwise-identical instances on every platform.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "coalform/core.hpp"
#include "coalform/energy.hpp"

namespace coalform {

inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(rng);
}

inline constexpr const char* kRngName = "mt19937_64";

struct RandomCostSpec {
  int n = 4;
  int k = 2;
  std::uint64_t seed = 0;
  double standalone_low = 1.0;
  double standalone_high = 2.0;
  double synergy_factor = 0.5;  // how far below the standalone sum costs may fall
};

namespace detail {

// Subsets of {0..n-1} of a given size, as bitmasks in lexicographic order of
// the sorted member list.
inline void for_each_subset_mask(int n, int size, const std::function<void(std::uint32_t)>& fn) {
  std::vector<int> comb(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) comb[static_cast<std::size_t>(i)] = i;
  while (true) {
    std::uint32_t mask = 0;
    for (int v : comb) mask |= (1u << v);
    fn(mask);
    int pos = size - 1;
    while (pos >= 0 && comb[static_cast<std::size_t>(pos)] == n - size + pos) --pos;
    if (pos < 0) break;
    ++comb[static_cast<std::size_t>(pos)];
    for (int q = pos + 1; q < size; ++q) {
      comb[static_cast<std::size_t>(q)] = comb[static_cast<std::size_t>(q - 1)] + 1;
    }
  }
}

inline std::uint32_t coalition_mask(const Coalition& g, int n) {
  std::uint32_t mask = 0;
  for (ParticipantId i : g.members()) {
    if (i < 0 || i >= n) {
      throw NotAMember("participant " + std::to_string(i) + " out of range");
    }
    mask |= (1u << i);
  }
  return mask;
}

// Shared table-backed oracle body for generated instances.
inline CostOracle table_oracle(int n, int k,
                               std::vector<std::optional<double>> table,
                               bool monotone, bool subadditive) {
  auto shared = std::make_shared<std::vector<std::optional<double>>>(std::move(table));
  return CostOracle(
      n,
      [shared, n, k](const Coalition& g) -> std::optional<double> {
        if (g.size() > k) {
          throw ValidationError("coalition " + g.to_string() +
                                " exceeds the generated size cap " + std::to_string(k));
        }
        return (*shared)[coalition_mask(g, n)];
      },
      monotone, subadditive);
}

}  // namespace detail

// Deterministic random oracle that is monotone and never exceeds the
// standalone sum, by construction: standalone costs are uniform draws in
// the configured range, and each larger coalition gets
//   C(G) = max( max_{H subset of G, |H|=|G|-1} C(H), (1 - s_G) * sum_j C_j )
// with s_G drawn uniformly in [0, synergy_factor]. Coalitions are visited
// in size-then-lexicographic order, one draw each.
inline Instance random_monotone_oracle(const RandomCostSpec& spec) {
  if (spec.n < 1 || spec.k < 1) {
    throw ValidationError("random oracle needs n >= 1 and k >= 1");
  }
  if (spec.n > 20) {
    throw InstanceTooLarge("random oracle generation capped at n <= 20");
  }
  if (!(spec.standalone_low > 0.0) || spec.standalone_high < spec.standalone_low) {
    throw ValidationError("standalone range must satisfy 0 < low <= high");
  }
  if (spec.synergy_factor < 0.0 || spec.synergy_factor > 1.0) {
    throw ValidationError("synergy_factor must lie in [0, 1]");
  }
  std::uint64_t subsets = 0;
  {
    std::uint64_t binom = 1;
    for (int s = 1; s <= std::min(spec.k, spec.n); ++s) {
      binom = binom * static_cast<std::uint64_t>(spec.n - s + 1) / static_cast<std::uint64_t>(s);
      subsets += binom;
    }
  }
  if (static_cast<std::uint64_t>(spec.n) * subsets > (1ull << 24)) {
    throw InstanceTooLarge("random oracle table would be too large");
  }

  std::mt19937_64 rng(spec.seed);
  std::vector<std::optional<double>> table(1u << spec.n);
  for (int i = 0; i < spec.n; ++i) {
    table[1u << i] = uniform_range(rng, spec.standalone_low, spec.standalone_high);
  }
  const int cap = std::min(spec.k, spec.n);
  for (int size = 2; size <= cap; ++size) {
    detail::for_each_subset_mask(spec.n, size, [&](std::uint32_t mask) {
      double sum = 0.0;
      double facet_max = 0.0;
      for (int i = 0; i < spec.n; ++i) {
        if (!(mask & (1u << i))) continue;
        sum += *table[1u << i];
        facet_max = std::max(facet_max, *table[mask ^ (1u << i)]);
      }
      const double synergy = spec.synergy_factor * uniform_unit(rng);
      table[mask] = std::max(facet_max, (1.0 - synergy) * sum);
    });
  }
  return Instance{spec.n, spec.k,
                  detail::table_oracle(spec.n, spec.k, std::move(table),
                                       /*monotone=*/true, /*subadditive=*/true)};
}

struct SetCoverInstance {
  int universe = 0;                    // elements 0..universe-1
  std::vector<std::vector<int>> sets;  // each of size <= the game cap
  std::vector<double> costs;           // positive, aligned with sets
};

inline SetCoverInstance load_set_cover(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open set-cover file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("set-cover file " + path.string() + ": " + e.what());
  }
  SetCoverInstance sc;
  try {
    sc.universe = j.at("universe").get<int>();
    sc.sets = j.at("sets").get<std::vector<std::vector<int>>>();
    sc.costs = j.at("costs").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("set-cover file " + path.string() + ": " + e.what());
  }
  return sc;
}

// Cost construction over a set-cover instance: a coalition costs the
// cheapest set that contains it, and is infeasible when no set does. A
// cost-based social optimum of the induced game is a minimum-cost set
// cover.
inline Instance set_cover_oracle(const SetCoverInstance& sc, int k) {
  if (sc.universe < 1) throw ValidationError("set-cover universe must be >= 1");
  if (sc.universe > 20) throw InstanceTooLarge("set-cover universe capped at 20");
  if (sc.sets.size() != sc.costs.size()) {
    throw ValidationError("set-cover sets and costs must have equal length");
  }
  std::vector<char> covered(static_cast<std::size_t>(sc.universe), 0);
  std::vector<std::uint32_t> masks;
  masks.reserve(sc.sets.size());
  for (std::size_t s = 0; s < sc.sets.size(); ++s) {
    if (sc.sets[s].empty()) throw ValidationError("set " + std::to_string(s) + " is empty");
    if (static_cast<int>(sc.sets[s].size()) > k) {
      throw ValidationError("set " + std::to_string(s) + " is larger than the cap K=" +
                            std::to_string(k));
    }
    if (!(sc.costs[s] > 0.0)) {
      throw ValidationError("set " + std::to_string(s) + " must have positive cost");
    }
    std::uint32_t mask = 0;
    for (int e : sc.sets[s]) {
      if (e < 0 || e >= sc.universe) {
        throw ValidationError("set " + std::to_string(s) + " references element " +
                              std::to_string(e) + " outside the universe");
      }
      covered[static_cast<std::size_t>(e)] = 1;
      mask |= (1u << e);
    }
    masks.push_back(mask);
  }
  for (int e = 0; e < sc.universe; ++e) {
    if (!covered[static_cast<std::size_t>(e)]) {
      throw ValidationError("element " + std::to_string(e) + " is not covered by any set");
    }
  }

  std::vector<std::optional<double>> table(1u << sc.universe);
  for (std::uint32_t mask = 1; mask < table.size(); ++mask) {
    std::optional<double> best;
    for (std::size_t s = 0; s < masks.size(); ++s) {
      if ((mask & masks[s]) == mask) {
        if (!best.has_value() || sc.costs[s] < *best) best = sc.costs[s];
      }
    }
    table[mask] = best;  // stays empty (infeasible) when no set contains mask
  }
  const int n = sc.universe;
  auto shared = std::make_shared<std::vector<std::optional<double>>>(std::move(table));
  CostOracle oracle(
      n,
      [shared, n](const Coalition& g) -> std::optional<double> {
        return (*shared)[detail::coalition_mask(g, n)];
      },
      /*monotone=*/true, /*subadditive=*/false);
  return Instance{n, k, std::move(oracle)};
}

enum class ProfileShape { Flat, DayNight };

inline const char* to_string(ProfileShape s) {
  return s == ProfileShape::Flat ? "flat" : "day_night";
}

// Synthetic household scenarios with the default battery and tariff
// parameters. `flat` has constant demand and no PV (no shareable surplus
// anywhere). `day_night` concentrates PV in the middle of the horizon and
// demand at the edges, alternating PV-rich and PV-poor households.
//
// The day_night profiles are shaped so that
//  - every household stays a net consumer (rich households import heavily
//    in the morning, before any PV or charge exists),
//  - the coalition cost stays monotone in membership (each household's
//    cost safely exceeds the savings its resources can unlock elsewhere),
//  - batteries matter to coalitions more than to singles: a rich household
//    alone needs almost no storage for its small evening demand, while a
//    coalition can bank its large midday surplus for a poor household's
//    evening, so pooled storage stays capacity-bound into the sweep range.
inline EnergyScenario synthetic_energy_scenario(int n, int horizon, std::uint64_t seed,
                                                ProfileShape shape) {
  if (n < 1 || horizon < 1) {
    throw ValidationError("synthetic scenario needs n >= 1 and horizon >= 1");
  }
  std::mt19937_64 rng(seed);
  EnergyScenario scenario;
  scenario.horizon = horizon;
  scenario.slot_duration = 1.0;
  scenario.tariffs = default_tariffs();
  scenario.households.resize(static_cast<std::size_t>(n));
  const int day_begin = horizon / 3;
  const int day_end = (2 * horizon + 2) / 3;  // mid-horizon window
  for (int i = 0; i < n; ++i) {
    auto& hh = scenario.households[static_cast<std::size_t>(i)];
    hh.battery = default_battery();
    hh.demand.assign(static_cast<std::size_t>(horizon), 0.0);
    hh.pv.assign(static_cast<std::size_t>(horizon), 0.0);
    if (shape == ProfileShape::Flat) {
      const double level = uniform_range(rng, 0.5, 1.5);
      for (int t = 0; t < horizon; ++t) hh.demand[static_cast<std::size_t>(t)] = level;
      continue;
    }
    const double base = uniform_range(rng, 0.9, 1.1);
    const bool pv_rich = (i % 2) == 0;
    for (int t = 0; t < horizon; ++t) {
      double demand;
      if (t < day_begin) {
        demand = (pv_rich ? 8.0 : 1.0) * base;  // morning
      } else if (t < day_end) {
        demand = (pv_rich ? 0.3 : 0.6) * base;  // midday
      } else {
        demand = (pv_rich ? 0.5 : 4.5) * base;  // evening
      }
      hh.demand[static_cast<std::size_t>(t)] = demand;
      if (t >= day_begin && t < day_end) {
        hh.pv[static_cast<std::size_t>(t)] =
            pv_rich ? demand + uniform_range(rng, 3.8, 4.2)
                    : uniform_range(rng, 0.0, 0.4) * demand;
      }
    }
  }
  return scenario;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  return out;
}

inline double parse_number(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError(where + ": '" + text + "' is not a number");
  }
}

}  // namespace detail

// Loads a scenario directory: scenario.json describes the horizon, tariffs
// and per-household battery specs plus one CSV per household with columns
// slot_index, demand_kwh, pv_kwh (header required, exactly T data rows).
inline EnergyScenario load_scenario(const std::filesystem::path& dir) {
  const auto meta_path = dir / "scenario.json";
  std::ifstream meta_in(meta_path);
  if (!meta_in) throw ParseError("cannot open " + meta_path.string());
  nlohmann::json meta;
  try {
    meta_in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(meta_path.string() + ": " + e.what());
  }

  EnergyScenario scenario;
  try {
    scenario.horizon = meta.at("t").get<int>();
    scenario.slot_duration = meta.at("slot_duration").get<double>();
    const auto& tariffs = meta.at("tariffs");
    scenario.tariffs.c_g_plus = tariffs.at("c_g_plus").get<double>();
    scenario.tariffs.c_g_minus = tariffs.at("c_g_minus").get<double>();
    scenario.tariffs.c_s = tariffs.at("c_s").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(meta_path.string() + ": " + e.what());
  }

  if (!meta.contains("households") || !meta["households"].is_array() ||
      meta["households"].empty()) {
    throw ParseError(meta_path.string() + ": 'households' must be a non-empty array");
  }
  for (const auto& entry : meta["households"]) {
    HouseholdProfile hh;
    std::string file;
    try {
      file = entry.at("file").get<std::string>();
      const auto& batt = entry.at("battery");
      hh.battery.capacity = batt.at("capacity").get<double>();
      hh.battery.eta_c = batt.at("eta_c").get<double>();
      hh.battery.eta_d = batt.at("eta_d").get<double>();
      hh.battery.mu_c = batt.at("mu_c").get<double>();
      hh.battery.mu_d = batt.at("mu_d").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(meta_path.string() + ": household entry: " + e.what());
    }

    const auto csv_path = dir / file;
    std::ifstream csv(csv_path);
    if (!csv) throw ParseError("cannot open " + csv_path.string());
    std::string line;
    if (!std::getline(csv, line)) throw ParseError(csv_path.string() + ": missing header row");
    const auto header = detail::split_csv_line(line);
    const std::vector<std::string> expected{"slot_index", "demand_kwh", "pv_kwh"};
    for (const auto& column : expected) {
      if (std::find(header.begin(), header.end(), column) == header.end()) {
        throw ParseError(csv_path.string() + ": missing column '" + column + "'");
      }
    }
    std::size_t idx_slot = 0, idx_demand = 0, idx_pv = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == "slot_index") idx_slot = c;
      if (header[c] == "demand_kwh") idx_demand = c;
      if (header[c] == "pv_kwh") idx_pv = c;
    }

    int row = 0;
    while (std::getline(csv, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto fields = detail::split_csv_line(line);
      const std::string where = csv_path.string() + ": row " + std::to_string(row + 1);
      if (fields.size() != header.size()) {
        throw ParseError(where + ": expected " + std::to_string(header.size()) +
                         " fields, got " + std::to_string(fields.size()));
      }
      const double slot = detail::parse_number(fields[idx_slot], where + ", slot_index");
      if (static_cast<int>(slot) != row) {
        throw ValidationError(where + ": slot_index must be " + std::to_string(row));
      }
      hh.demand.push_back(detail::parse_number(fields[idx_demand], where + ", demand_kwh"));
      hh.pv.push_back(detail::parse_number(fields[idx_pv], where + ", pv_kwh"));
      ++row;
    }
    if (row != scenario.horizon) {
      throw ValidationError(csv_path.string() + ": expected exactly " +
                            std::to_string(scenario.horizon) + " data rows, got " +
                            std::to_string(row));
    }
    scenario.households.push_back(std::move(hh));
  }
  validate_scenario(scenario);
  return scenario;
}

}  // namespace coalform
