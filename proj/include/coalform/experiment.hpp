#pragma once

// Experiment runner: materializes an instance from a generator spec, a
// scenario directory or a set-cover file, runs decentralized formation
// and/or brute-force stability analysis per mechanism, sweeps one parameter,
// and writes reports. Report files are byte-stable for a fixed config and
// seed: they carry deterministic work counters (rounds, proposals, stable
// counts) rather than wall-clock times, which go to stderr instead.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coalform/core.hpp"
#include "coalform/energy.hpp"
#include "coalform/formation.hpp"
#include "coalform/instances.hpp"
#include "coalform/stability.hpp"

namespace coalform {

// Log gate driven by the COALFORM_LOG environment variable
// (quiet | info | debug; default info).
inline int log_level() {
  static const int level = [] {
    const char* env = std::getenv("COALFORM_LOG");
    if (!env) return 1;
    const std::string v(env);
    if (v == "quiet") return 0;
    if (v == "debug") return 2;
    return 1;
  }();
  return level;
}

inline void log_info(const std::string& message) {
  if (log_level() >= 1) std::fprintf(stderr, "[coalform] %s\n", message.c_str());
}

struct MechanismSpec {
  std::optional<MechanismKind> pure;
  std::optional<MixedMechanism> mixed;

  std::string label() const {
    return pure.has_value() ? to_string(*pure) : mixed->to_string();
  }
};

struct SweepSpec {
  std::string parameter;  // c_g_plus | battery_capacity | K
  std::vector<double> values;
};

struct ExperimentConfig {
  enum class SourceType { Random, Synthetic, Scenario, SetCover };

  SourceType source = SourceType::Random;
  RandomCostSpec random_spec;
  int synthetic_n = 4;
  int synthetic_horizon = 8;
  ProfileShape synthetic_shape = ProfileShape::DayNight;
  std::filesystem::path scenario_path;
  std::filesystem::path set_cover_path;

  std::vector<MechanismSpec> mechanisms;
  int k = 2;
  std::string mode = "both";  // colnform | brute_force | both
  std::optional<SweepSpec> sweep;
  double epsilon = kDefaultEpsilon;
  std::uint64_t seed = 0;
  std::uint64_t budget = kDefaultBudget;
  bool trace = false;
};

inline void validate_config(const ExperimentConfig& config) {
  if (config.mechanisms.empty()) {
    throw ValidationError("config lists no mechanisms");
  }
  if (config.mode != "colnform" && config.mode != "brute_force" && config.mode != "both") {
    throw ValidationError("mode must be colnform, brute_force or both");
  }
  if (config.k < 1) throw ValidationError("k must be >= 1");
  if (config.epsilon < 0.0) throw ValidationError("epsilon must be >= 0");
  if (config.sweep.has_value()) {
    const auto& sweep = *config.sweep;
    if (sweep.parameter != "c_g_plus" && sweep.parameter != "battery_capacity" &&
        sweep.parameter != "K") {
      throw ValidationError("sweep parameter must be c_g_plus, battery_capacity or K");
    }
    if (sweep.values.empty()) throw ValidationError("sweep needs at least one value");
    for (double v : sweep.values) {
      if (!(v > 0.0)) throw ValidationError("sweep values must be positive");
    }
    const bool energy_source = config.source == ExperimentConfig::SourceType::Synthetic ||
                               config.source == ExperimentConfig::SourceType::Scenario;
    if (!energy_source && sweep.parameter != "K") {
      throw ValidationError("sweep parameter '" + sweep.parameter +
                            "' needs an energy scenario source");
    }
  }
  for (const auto& mech : config.mechanisms) {
    if (mech.mixed.has_value() && config.mode == "colnform") {
      throw ValidationError("mixed mechanisms need brute-force mode");
    }
  }
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config " + path.string() + ": " + e.what());
  }

  ExperimentConfig config;
  const auto base_dir = path.parent_path();
  try {
    config.k = j.value("k", 2);
    config.mode = j.value("mode", std::string("both"));
    config.epsilon = j.value("epsilon", kDefaultEpsilon);
    config.seed = j.value("seed", static_cast<std::uint64_t>(0));
    config.budget = j.value("budget", kDefaultBudget);
    config.trace = j.value("trace", false);

    const auto& inst = j.at("instance");
    const std::string type = inst.at("type").get<std::string>();
    if (type == "random") {
      config.source = ExperimentConfig::SourceType::Random;
      config.random_spec.n = inst.at("n").get<int>();
      config.random_spec.k = config.k;
      config.random_spec.seed = inst.value("seed", config.seed);
      if (inst.contains("standalone_range")) {
        config.random_spec.standalone_low = inst["standalone_range"].at(0).get<double>();
        config.random_spec.standalone_high = inst["standalone_range"].at(1).get<double>();
      }
      config.random_spec.synergy_factor = inst.value("synergy_factor", 0.5);
    } else if (type == "synthetic") {
      config.source = ExperimentConfig::SourceType::Synthetic;
      config.synthetic_n = inst.at("n").get<int>();
      config.synthetic_horizon = inst.value("horizon", 8);
      config.random_spec.seed = inst.value("seed", config.seed);
      const std::string shape = inst.value("shape", std::string("day_night"));
      if (shape == "flat") {
        config.synthetic_shape = ProfileShape::Flat;
      } else if (shape == "day_night") {
        config.synthetic_shape = ProfileShape::DayNight;
      } else {
        throw ValidationError("unknown profile shape '" + shape + "'");
      }
    } else if (type == "scenario") {
      config.source = ExperimentConfig::SourceType::Scenario;
      config.scenario_path = base_dir / inst.at("path").get<std::string>();
    } else if (type == "set_cover") {
      config.source = ExperimentConfig::SourceType::SetCover;
      config.set_cover_path = base_dir / inst.at("path").get<std::string>();
    } else {
      throw ValidationError("unknown instance type '" + type + "'");
    }

    for (const auto& entry : j.at("mechanisms")) {
      MechanismSpec spec;
      if (entry.is_string()) {
        auto kind = mechanism_from_string(entry.get<std::string>());
        if (!kind.has_value()) {
          throw ValidationError("unknown mechanism '" + entry.get<std::string>() + "'");
        }
        spec.pure = *kind;
      } else {
        std::vector<MechanismKind> kinds;
        for (const auto& name : entry.at("mixed")) {
          auto kind = mechanism_from_string(name.get<std::string>());
          if (!kind.has_value()) {
            throw ValidationError("unknown mechanism '" + name.get<std::string>() + "'");
          }
          kinds.push_back(*kind);
        }
        spec.mixed = MixedMechanism(kinds);
      }
      config.mechanisms.push_back(std::move(spec));
    }

    if (j.contains("sweep")) {
      SweepSpec sweep;
      sweep.parameter = j["sweep"].at("parameter").get<std::string>();
      sweep.values = j["sweep"].at("values").get<std::vector<double>>();
      config.sweep = std::move(sweep);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config " + path.string() + ": " + e.what());
  }
  validate_config(config);
  return config;
}

struct RunRecord {
  std::string mechanism;
  int k = 0;
  int n = 0;
  std::string sweep_parameter;  // empty when not swept
  std::optional<double> sweep_value;
  std::string mode;
  std::uint64_t seed = 0;

  // The reported structure: the formation outcome when formation ran, the
  // worst stable structure otherwise.
  std::optional<CoalitionStructure> structure;
  std::optional<double> cost;
  std::optional<double> utility;
  std::optional<std::uint64_t> rounds;
  std::optional<std::uint64_t> proposals;
  std::optional<bool> formation_stable;  // cross-check when both modes ran
  std::optional<SpoaReport> spoa;
  bool no_stable_structure = false;  // mixed mechanisms may have none
  std::string error;                 // non-empty when the run failed

  std::vector<RoundTrace> trace_rounds;  // only kept when tracing
};

struct ExperimentReport {
  std::vector<RunRecord> runs;
  bool ok = true;
};

namespace detail {

inline double structure_cost(const CoalitionStructure& s, const CostOracle& oracle) {
  double total = 0.0;
  for (const auto& g : s.coalitions()) {
    auto c = oracle.evaluate(g);
    if (!c.has_value()) {
      throw InfeasibleCoalition("structure contains infeasible coalition " + g.to_string());
    }
    total += *c;
  }
  return total;
}

inline double structure_utility(const CoalitionStructure& s, MechanismKind mechanism,
                                const CostOracle& oracle) {
  double total = 0.0;
  for (const auto& g : s.coalitions()) {
    for (ParticipantId i : g.members()) total += utility(mechanism, g, oracle, i);
  }
  return total;
}

struct SweepPoint {
  std::optional<double> value;
  int k;
};

inline Instance materialize(const ExperimentConfig& config, const SweepPoint& point) {
  switch (config.source) {
    case ExperimentConfig::SourceType::Random: {
      RandomCostSpec spec = config.random_spec;
      spec.k = point.k;
      return random_monotone_oracle(spec);
    }
    case ExperimentConfig::SourceType::Synthetic:
    case ExperimentConfig::SourceType::Scenario: {
      EnergyScenario scenario =
          config.source == ExperimentConfig::SourceType::Synthetic
              ? synthetic_energy_scenario(config.synthetic_n, config.synthetic_horizon,
                                          config.random_spec.seed, config.synthetic_shape)
              : load_scenario(config.scenario_path);
      if (config.sweep.has_value() && point.value.has_value()) {
        if (config.sweep->parameter == "c_g_plus") {
          scenario.tariffs.c_g_plus = *point.value;
        } else if (config.sweep->parameter == "battery_capacity") {
          for (auto& hh : scenario.households) hh.battery.capacity = *point.value;
        }
      }
      return Instance{static_cast<int>(scenario.households.size()), point.k,
                      as_cost_oracle(scenario)};
    }
    case ExperimentConfig::SourceType::SetCover: {
      return set_cover_oracle(load_set_cover(config.set_cover_path), point.k);
    }
  }
  throw ValidationError("unreachable instance source");
}

}  // namespace detail

// Runs the configured experiment matrix: every sweep point crossed with
// every mechanism. Rows are ordered by (sweep value order, mechanism order).
inline ExperimentReport run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  ExperimentReport report;

  std::vector<detail::SweepPoint> points;
  if (config.sweep.has_value()) {
    for (double v : config.sweep->values) {
      detail::SweepPoint p;
      p.value = v;
      p.k = config.sweep->parameter == "K" ? static_cast<int>(v) : config.k;
      points.push_back(p);
    }
  } else {
    points.push_back(detail::SweepPoint{std::nullopt, config.k});
  }

  for (const auto& point : points) {
    // Sweeps rebuild the oracle per point: tariff and battery changes
    // invalidate memoized dispatch costs.
    std::optional<Instance> instance;
    std::string materialize_error;
    try {
      instance = detail::materialize(config, point);
    } catch (const std::exception& e) {
      materialize_error = e.what();
    }

    for (const auto& mech : config.mechanisms) {
      const auto started = std::chrono::steady_clock::now();
      RunRecord record;
      record.mechanism = mech.label();
      record.k = point.k;
      record.mode = config.mode;
      record.seed = config.random_spec.seed;
      if (config.sweep.has_value()) {
        record.sweep_parameter = config.sweep->parameter;
        record.sweep_value = point.value;
      }
      if (!materialize_error.empty()) {
        record.error = materialize_error;
        report.ok = false;
        report.runs.push_back(std::move(record));
        continue;
      }
      record.n = instance->n;

      try {
        const bool want_formation = config.mode != "brute_force";
        const bool want_brute = config.mode != "colnform";

        if (mech.pure.has_value()) {
          const MechanismKind kind = *mech.pure;
          if (want_formation) {
            auto result = run_formation(*instance, kind, config.epsilon, config.budget);
            record.structure = result.structure;
            record.rounds = result.rounds.size();
            record.proposals = total_proposals(result.rounds);
            record.cost = detail::structure_cost(result.structure, instance->oracle);
            record.utility = detail::structure_utility(result.structure, kind,
                                                       instance->oracle);
            if (config.trace) record.trace_rounds = result.rounds;
            if (want_brute) {
              record.formation_stable =
                  find_blocking_coalition(result.structure, kind, instance->oracle,
                                          instance->k, config.epsilon)
                      .is_stable;
              if (!*record.formation_stable) {
                record.error = "formation output failed the stability re-check";
              }
            }
          }
          if (want_brute) {
            record.spoa = spoa(*instance, kind, config.epsilon, config.budget);
            if (!want_formation) {
              // report the worst stable structure
              auto stable = enumerate_stable_structures(*instance, kind, config.epsilon,
                                                        config.budget);
              const CoalitionStructure* worst = nullptr;
              double worst_cost = -kInfinity;
              for (const auto& s : stable) {
                const double c = detail::structure_cost(s, instance->oracle);
                if (c > worst_cost) {
                  worst_cost = c;
                  worst = &s;
                }
              }
              record.structure = *worst;
              record.cost = worst_cost;
              record.utility = detail::structure_utility(*worst, kind, instance->oracle);
            }
          }
        } else {
          // mixed mechanisms run by exhaustive search only
          auto outcomes = enumerate_stable_mixed(*instance, *mech.mixed, config.epsilon,
                                                 config.budget);
          if (outcomes.empty()) {
            record.no_stable_structure = true;
          } else {
            record.spoa = spoa_mixed(*instance, *mech.mixed, config.epsilon, config.budget);
            const CoalitionStructure* worst = nullptr;
            double worst_cost = -kInfinity;
            for (const auto& o : outcomes) {
              const double c = detail::structure_cost(o.structure, instance->oracle);
              if (c > worst_cost) {
                worst_cost = c;
                worst = &o.structure;
              }
            }
            record.structure = *worst;
            record.cost = worst_cost;
            // budget balance makes the social utility assignment-independent
            record.utility = instance->oracle.standalone_total() - worst_cost;
          }
        }

        // Report identity: u(P) == sum C_i - C(P).
        if (record.cost.has_value() && record.utility.has_value()) {
          const double identity = instance->oracle.standalone_total() - *record.cost;
          if (std::fabs(identity - *record.utility) >
              1e-6 * std::max(1.0, std::fabs(identity))) {
            record.error = "budget-balance identity violated: utility " +
                           std::to_string(*record.utility) + " vs " +
                           std::to_string(identity);
          }
        }
      } catch (const std::exception& e) {
        record.error = e.what();
      }

      if (!record.error.empty()) report.ok = false;
      const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - started);
      log_info("run " + record.mechanism +
               (record.sweep_value.has_value()
                    ? " @" + record.sweep_parameter + "=" + std::to_string(*record.sweep_value)
                    : "") +
               (record.error.empty() ? " ok" : " FAILED: " + record.error) + " (" +
               std::to_string(elapsed.count()) + " ms)");
      report.runs.push_back(std::move(record));
    }
  }
  return report;
}

// Per-mechanism SPoA columns plus the pairwise worst-stable-cost ratio
// matrix, one table per sweep point.
struct ComparisonTable {
  std::optional<double> sweep_value;
  std::vector<std::string> mechanisms;
  std::vector<std::optional<double>> spoa_cost;          // aligned with mechanisms
  std::vector<std::vector<std::optional<double>>> cost_ratio;  // [a][b]
};

inline std::vector<ComparisonTable> compare_mechanisms(const ExperimentReport& report) {
  // group runs by sweep value, preserving order
  std::vector<std::optional<double>> seen;
  std::vector<ComparisonTable> tables;
  for (const auto& run : report.runs) {
    if (std::find(seen.begin(), seen.end(), run.sweep_value) == seen.end()) {
      seen.push_back(run.sweep_value);
      ComparisonTable table;
      table.sweep_value = run.sweep_value;
      tables.push_back(table);
    }
  }
  for (auto& table : tables) {
    std::vector<const RunRecord*> rows;
    for (const auto& run : report.runs) {
      if (run.sweep_value == table.sweep_value) rows.push_back(&run);
    }
    for (const auto* run : rows) {
      table.mechanisms.push_back(run->mechanism);
      table.spoa_cost.push_back(run->spoa.has_value()
                                    ? std::optional<double>(run->spoa->spoa_cost)
                                    : std::nullopt);
    }
    table.cost_ratio.assign(rows.size(), std::vector<std::optional<double>>(rows.size()));
    for (std::size_t a = 0; a < rows.size(); ++a) {
      for (std::size_t b = 0; b < rows.size(); ++b) {
        if (rows[a]->spoa.has_value() && rows[b]->spoa.has_value() &&
            rows[b]->spoa->cost_worst_stable > 0.0) {
          table.cost_ratio[a][b] =
              rows[a]->spoa->cost_worst_stable / rows[b]->spoa->cost_worst_stable;
        }
      }
    }
  }
  return tables;
}

namespace detail {

inline nlohmann::json to_json(const Coalition& g) {
  return nlohmann::json(g.members());
}

inline nlohmann::json to_json(const CoalitionStructure& s) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& g : s.coalitions()) out.push_back(to_json(g));
  return out;
}

inline nlohmann::json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;  // +infinity sentinels serialize as null
}

inline std::string format_double(double v) {
  if (!std::isfinite(v)) return v > 0 ? "inf" : "-inf";
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.12g", v);
  return buffer;
}

inline std::string structure_label(const CoalitionStructure& s) {
  std::string out;
  for (std::size_t b = 0; b < s.coalitions().size(); ++b) {
    if (b) out += "|";
    const auto& members = s.coalitions()[b].members();
    for (std::size_t m = 0; m < members.size(); ++m) {
      if (m) out += "+";
      out += std::to_string(members[m]);
    }
  }
  return out;
}

}  // namespace detail

inline nlohmann::json spoa_to_json(const SpoaReport& report) {
  nlohmann::json j;
  j["cost_opt"] = report.cost_opt;
  j["cost_worst_stable"] = report.cost_worst_stable;
  j["utility_opt"] = report.utility_opt;
  j["utility_worst_stable"] = report.utility_worst_stable;
  j["spoa_cost"] = detail::finite_or_null(report.spoa_cost);
  j["spoa_utility"] = detail::finite_or_null(report.spoa_utility);
  j["stable_count"] = report.stable_count;
  j["k"] = report.k;
  j["n"] = report.n;
  return j;
}

inline nlohmann::json round_trace_to_json(const RoundTrace& round) {
  nlohmann::json j;
  j["round_index"] = round.round_index;
  auto pairs = [](const std::vector<std::pair<ParticipantId, Coalition>>& items) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [who, g] : items) {
      out.push_back({{"participant", who}, {"coalition", detail::to_json(g)}});
    }
    return out;
  };
  j["proposals"] = pairs(round.proposals);
  j["rejections"] = pairs(round.rejections);
  nlohmann::json formed = nlohmann::json::array();
  for (const auto& g : round.holds_formed) formed.push_back(detail::to_json(g));
  j["holds_formed"] = formed;
  nlohmann::json broken = nlohmann::json::array();
  for (const auto& g : round.holds_broken) broken.push_back(detail::to_json(g));
  j["holds_broken"] = broken;
  return j;
}

inline nlohmann::json report_to_json(const ExperimentReport& report,
                                     const ExperimentConfig& config) {
  nlohmann::json j;
  j["ok"] = report.ok;
  j["rng"] = kRngName;
  j["seed"] = config.seed;
  j["mode"] = config.mode;
  j["epsilon"] = config.epsilon;
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& run : report.runs) {
    nlohmann::json r;
    r["mechanism"] = run.mechanism;
    r["k"] = run.k;
    r["n"] = run.n;
    r["sweep_parameter"] = run.sweep_parameter;
    r["sweep_value"] = run.sweep_value.has_value()
                           ? nlohmann::json(*run.sweep_value)
                           : nlohmann::json(nullptr);
    r["mode"] = run.mode;
    r["seed"] = run.seed;
    r["structure"] = run.structure.has_value() ? detail::to_json(*run.structure)
                                               : nlohmann::json(nullptr);
    r["cost"] = run.cost.has_value() ? nlohmann::json(*run.cost) : nlohmann::json(nullptr);
    r["utility"] =
        run.utility.has_value() ? nlohmann::json(*run.utility) : nlohmann::json(nullptr);
    r["rounds"] =
        run.rounds.has_value() ? nlohmann::json(*run.rounds) : nlohmann::json(nullptr);
    r["proposals"] = run.proposals.has_value() ? nlohmann::json(*run.proposals)
                                               : nlohmann::json(nullptr);
    r["formation_stable"] = run.formation_stable.has_value()
                                ? nlohmann::json(*run.formation_stable)
                                : nlohmann::json(nullptr);
    r["spoa"] = run.spoa.has_value() ? spoa_to_json(*run.spoa) : nlohmann::json(nullptr);
    r["no_stable_structure"] = run.no_stable_structure;
    r["error"] = run.error;
    runs.push_back(std::move(r));
  }
  j["runs"] = std::move(runs);
  return j;
}

inline std::string report_to_csv(const ExperimentReport& report) {
  std::string out =
      "mechanism,k,n,sweep_parameter,sweep_value,mode,seed,cost,utility,opt_cost,"
      "opt_utility,spoa_cost,spoa_utility,stable_count,rounds,proposals,"
      "structure,no_stable_structure,error\n";
  for (const auto& run : report.runs) {
    auto opt_num = [](const std::optional<double>& v) {
      return v.has_value() ? detail::format_double(*v) : std::string();
    };
    auto opt_count = [](const std::optional<std::uint64_t>& v) {
      return v.has_value() ? std::to_string(*v) : std::string();
    };
    out += run.mechanism + "," + std::to_string(run.k) + "," + std::to_string(run.n) + ",";
    out += run.sweep_parameter + "," + opt_num(run.sweep_value) + "," + run.mode + ",";
    out += std::to_string(run.seed) + ",";
    out += opt_num(run.cost) + "," + opt_num(run.utility) + ",";
    if (run.spoa.has_value()) {
      out += detail::format_double(run.spoa->cost_opt) + "," +
             detail::format_double(run.spoa->utility_opt) + "," +
             detail::format_double(run.spoa->spoa_cost) + "," +
             detail::format_double(run.spoa->spoa_utility) + "," +
             std::to_string(run.spoa->stable_count) + ",";
    } else {
      out += ",,,,,";
    }
    out += opt_count(run.rounds) + "," + opt_count(run.proposals) + ",";
    out += (run.structure.has_value() ? detail::structure_label(*run.structure)
                                      : std::string()) +
           ",";
    out += std::string(run.no_stable_structure ? "true" : "false") + ",";
    out += run.error + "\n";
  }
  return out;
}

inline nlohmann::json comparison_to_json(const std::vector<ComparisonTable>& tables) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& table : tables) {
    nlohmann::json t;
    t["sweep_value"] = table.sweep_value.has_value()
                           ? nlohmann::json(*table.sweep_value)
                           : nlohmann::json(nullptr);
    t["mechanisms"] = table.mechanisms;
    nlohmann::json spoas = nlohmann::json::array();
    for (const auto& v : table.spoa_cost) {
      spoas.push_back(v.has_value() ? nlohmann::json(detail::finite_or_null(*v))
                                    : nlohmann::json(nullptr));
    }
    t["spoa_cost"] = spoas;
    nlohmann::json matrix = nlohmann::json::array();
    for (const auto& row : table.cost_ratio) {
      nlohmann::json r = nlohmann::json::array();
      for (const auto& v : row) {
        r.push_back(v.has_value() ? nlohmann::json(*v) : nlohmann::json(nullptr));
      }
      matrix.push_back(std::move(r));
    }
    t["cost_ratio"] = std::move(matrix);
    out.push_back(std::move(t));
  }
  return out;
}

// Writes report.json, runs.csv, compare.json (when brute-force data exists)
// and one rounds_<mechanism>[_<value>].jsonl per traced formation run.
inline void write_report_files(const ExperimentReport& report,
                               const ExperimentConfig& config,
                               const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "report.json");
    out << report_to_json(report, config).dump(2) << "\n";
  }
  {
    std::ofstream out(out_dir / "runs.csv");
    out << report_to_csv(report);
  }
  bool any_spoa = false;
  for (const auto& run : report.runs) any_spoa |= run.spoa.has_value();
  if (any_spoa && config.mechanisms.size() >= 2) {
    std::ofstream out(out_dir / "compare.json");
    out << comparison_to_json(compare_mechanisms(report)).dump(2) << "\n";
  }
  if (config.trace) {
    for (const auto& run : report.runs) {
      if (run.trace_rounds.empty()) continue;
      std::string name = "rounds_" + run.mechanism;
      if (run.sweep_value.has_value()) {
        name += "_" + detail::format_double(*run.sweep_value);
      }
      std::ofstream out(out_dir / (name + ".jsonl"));
      for (const auto& round : run.trace_rounds) {
        out << round_trace_to_json(round).dump() << "\n";
      }
    }
  }
}

}  // namespace coalform
