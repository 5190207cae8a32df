#pragma once

// Exhaustive desk-scale stability machinery: blocking-coalition detection,
// stable-structure enumeration (pure and mixed mechanisms), social optima,
// strong-price-of-anarchy reports and cyclic-preference search.

#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include "coalform/core.hpp"
#include "coalform/partitions.hpp"

namespace coalform {

struct StabilityReport {
  bool is_stable = false;
  std::optional<Coalition> witness;  // absent iff is_stable
  double epsilon = kDefaultEpsilon;
};

struct SpoaReport {
  double cost_opt = 0.0;
  double cost_worst_stable = 0.0;
  double utility_opt = 0.0;
  double utility_worst_stable = 0.0;
  double spoa_cost = 1.0;
  double spoa_utility = 1.0;  // +infinity when the worst stable utility is 0
  std::uint64_t stable_count = 0;
  int k = 0;
  int n = 0;
};

struct CyclicPreferenceWitness {
  std::vector<ParticipantId> participants;  // i_1..i_t
  std::vector<Coalition> coalitions;        // G_1..G_t
};

// A stable outcome under a mixed mechanism: the structure plus the
// per-coalition constituent assignment that witnesses its stability.
struct MixedOutcome {
  CoalitionStructure structure;
  MixedAssignment assignment;
};

// Precomputed view of every candidate coalition of size <= k: cost and the
// utility each member derives under one mechanism. Infeasible coalitions
// carry -infinity utilities so they can never strictly improve anyone.
class UtilityTable {
 public:
  UtilityTable(const Instance& instance, MechanismKind mechanism)
      : n_(instance.n), k_(instance.k), mechanism_(mechanism) {
    coalitions_ = enumerate_coalitions(n_, k_);
    costs_.resize(coalitions_.size());
    utilities_.resize(coalitions_.size());
    index_.reserve(coalitions_.size());
    for (std::size_t idx = 0; idx < coalitions_.size(); ++idx) {
      const Coalition& g = coalitions_[idx];
      index_.emplace(g, static_cast<int>(idx));
      costs_[idx] = instance.oracle.evaluate(g);
      auto& us = utilities_[idx];
      us.assign(g.members().size(), -kInfinity);
      if (!costs_[idx].has_value()) continue;
      if (g.size() == 1) {
        us[0] = 0.0;
        continue;
      }
      bool degenerate = false;
      if (mechanism == MechanismKind::ProportionalSplit &&
          !(instance.oracle.standalone_sum(g) > 0.0)) {
        degenerate = true;  // treat as unusable rather than aborting the scan
      }
      if (degenerate) continue;
      PaymentVector p = payment(mechanism, g, instance.oracle);
      for (std::size_t m = 0; m < g.members().size(); ++m) {
        us[m] = instance.oracle.standalone_cost(g.members()[m]) - p.payments[m];
      }
    }
    singleton_index_.assign(static_cast<std::size_t>(n_), -1);
    for (int i = 0; i < n_; ++i) {
      singleton_index_[static_cast<std::size_t>(i)] = index_.at(Coalition{i});
    }
  }

  int coalition_count() const { return static_cast<int>(coalitions_.size()); }
  int n() const { return n_; }
  int k() const { return k_; }
  MechanismKind mechanism() const { return mechanism_; }
  const Coalition& coalition(int idx) const { return coalitions_[static_cast<std::size_t>(idx)]; }
  const std::optional<double>& cost(int idx) const { return costs_[static_cast<std::size_t>(idx)]; }
  bool feasible(int idx) const { return costs_[static_cast<std::size_t>(idx)].has_value(); }
  int singleton_index(ParticipantId i) const { return singleton_index_[static_cast<std::size_t>(i)]; }

  int index_of(const Coalition& g) const {
    auto it = index_.find(g);
    return it == index_.end() ? -1 : it->second;
  }

  // Utility of member i in coalition idx; -infinity when infeasible.
  double member_utility(int idx, ParticipantId i) const {
    const auto& m = coalitions_[static_cast<std::size_t>(idx)].members();
    for (std::size_t pos = 0; pos < m.size(); ++pos) {
      if (m[pos] == i) return utilities_[static_cast<std::size_t>(idx)][pos];
    }
    throw NotAMember("participant " + std::to_string(i) + " not in " +
                     coalitions_[static_cast<std::size_t>(idx)].to_string());
  }

 private:
  int n_;
  int k_;
  MechanismKind mechanism_;
  std::vector<Coalition> coalitions_;
  std::vector<std::optional<double>> costs_;
  std::vector<std::vector<double>> utilities_;
  std::vector<int> singleton_index_;
  std::unordered_map<Coalition, int, CoalitionHash> index_;
};

namespace detail {

// Current utility of every participant under a structure, read from a table.
inline std::vector<double> current_utilities(const CoalitionStructure& structure,
                                             const UtilityTable& table) {
  std::vector<double> u(static_cast<std::size_t>(table.n()), 0.0);
  for (const auto& g : structure.coalitions()) {
    int idx = table.index_of(g);
    for (ParticipantId i : g.members()) {
      u[static_cast<std::size_t>(i)] =
          idx >= 0 ? table.member_utility(idx, i) : -kInfinity;
    }
  }
  return u;
}

// First coalition (size-then-lex order) whose members all strictly improve
// on `current`, or -1. Infeasible candidates are skipped.
inline int first_blocking_index(const UtilityTable& table,
                                const std::vector<double>& current,
                                double epsilon) {
  for (int idx = 0; idx < table.coalition_count(); ++idx) {
    if (!table.feasible(idx)) continue;
    const auto& members = table.coalition(idx).members();
    bool blocks = true;
    for (ParticipantId i : members) {
      if (!(table.member_utility(idx, i) > current[static_cast<std::size_t>(i)] + epsilon)) {
        blocks = false;
        break;
      }
    }
    if (blocks) return idx;
  }
  return -1;
}

}  // namespace detail

// Scans coalitions of size <= k in size-then-lexicographic order and returns
// the first one whose members all strictly improve (by more than epsilon) on
// their current coalitions.
inline StabilityReport find_blocking_coalition(const CoalitionStructure& structure,
                                               MechanismKind mechanism,
                                               const CostOracle& oracle, int k,
                                               double epsilon = kDefaultEpsilon) {
  Instance instance{oracle.participants(), k, oracle};
  UtilityTable table(instance, mechanism);
  auto current = detail::current_utilities(structure, table);
  int idx = detail::first_blocking_index(table, current, epsilon);
  if (idx < 0) return StabilityReport{true, std::nullopt, epsilon};
  return StabilityReport{false, table.coalition(idx), epsilon};
}

// Mixed variant: the structure's coalitions are billed per the assignment,
// and a coalition blocks if all its members strictly improve under ANY
// constituent pure mechanism.
inline StabilityReport find_blocking_coalition(const CoalitionStructure& structure,
                                               const MixedAssignment& assignment,
                                               const CostOracle& oracle, int k,
                                               double epsilon = kDefaultEpsilon) {
  assignment.validate_for(structure);
  Instance instance{oracle.participants(), k, oracle};
  std::vector<UtilityTable> tables;
  tables.reserve(assignment.mechanism.constituents.size());
  for (MechanismKind m : assignment.mechanism.constituents) {
    tables.emplace_back(instance, m);
  }
  // Current utility of i comes from the constituent assigned to i's block.
  std::vector<double> current(static_cast<std::size_t>(oracle.participants()), 0.0);
  for (const auto& g : structure.coalitions()) {
    MechanismKind m = assignment.mechanism_for(g);
    std::size_t t = 0;
    while (assignment.mechanism.constituents[t] != m) ++t;
    int idx = tables[t].index_of(g);
    for (ParticipantId i : g.members()) {
      current[static_cast<std::size_t>(i)] =
          idx >= 0 ? tables[t].member_utility(idx, i) : -kInfinity;
    }
  }
  for (int idx = 0; idx < tables[0].coalition_count(); ++idx) {
    for (const auto& table : tables) {
      if (!table.feasible(idx)) continue;
      const auto& members = table.coalition(idx).members();
      bool blocks = true;
      for (ParticipantId i : members) {
        if (!(table.member_utility(idx, i) > current[static_cast<std::size_t>(i)] + epsilon)) {
          blocks = false;
          break;
        }
      }
      if (blocks) {
        return StabilityReport{false, table.coalition(idx), epsilon};
      }
    }
  }
  return StabilityReport{true, std::nullopt, epsilon};
}

// All stable structures under a pure mechanism, in canonical enumeration
// order. Non-empty for the pure mechanisms on any finite instance.
inline std::vector<CoalitionStructure> enumerate_stable_structures(
    const Instance& instance, MechanismKind mechanism,
    double epsilon = kDefaultEpsilon, std::uint64_t budget = kDefaultBudget) {
  UtilityTable table(instance, mechanism);
  std::vector<CoalitionStructure> stable;
  for_each_structure(instance.n, instance.k, [&](const CoalitionStructure& s) {
    auto current = detail::current_utilities(s, table);
    if (detail::first_blocking_index(table, current, epsilon) < 0) {
      stable.push_back(s);
    }
    return true;
  }, budget);
  return stable;
}

// Stable outcomes under a mixed mechanism. A structure is stable when some
// assignment of constituents to its coalitions admits no blocking coalition
// under any constituent; all witnessing assignments are returned. May be
// empty: mixed mechanisms do not guarantee existence.
inline std::vector<MixedOutcome> enumerate_stable_mixed(
    const Instance& instance, const MixedMechanism& mixed,
    double epsilon = kDefaultEpsilon, std::uint64_t budget = kDefaultBudget) {
  std::vector<UtilityTable> tables;
  tables.reserve(mixed.constituents.size());
  for (MechanismKind m : mixed.constituents) tables.emplace_back(instance, m);
  const std::size_t num_mechs = mixed.constituents.size();

  std::vector<MixedOutcome> out;
  for_each_structure(instance.n, instance.k, [&](const CoalitionStructure& s) {
    const auto& blocks = s.coalitions();
    std::vector<int> block_idx(blocks.size());
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      block_idx[b] = tables[0].index_of(blocks[b]);
    }
    // Walk every assignment of constituents to blocks.
    std::vector<std::size_t> choice(blocks.size(), 0);
    while (true) {
      std::vector<double> current(static_cast<std::size_t>(instance.n), 0.0);
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto& table = tables[choice[b]];
        for (ParticipantId i : blocks[b].members()) {
          current[static_cast<std::size_t>(i)] =
              block_idx[b] >= 0 ? table.member_utility(block_idx[b], i) : -kInfinity;
        }
      }
      bool blocked = false;
      for (int idx = 0; idx < tables[0].coalition_count() && !blocked; ++idx) {
        for (const auto& table : tables) {
          if (!table.feasible(idx)) continue;
          bool all_better = true;
          for (ParticipantId i : table.coalition(idx).members()) {
            if (!(table.member_utility(idx, i) >
                  current[static_cast<std::size_t>(i)] + epsilon)) {
              all_better = false;
              break;
            }
          }
          if (all_better) {
            blocked = true;
            break;
          }
        }
      }
      if (!blocked) {
        MixedAssignment assignment{mixed, {}};
        for (std::size_t b = 0; b < blocks.size(); ++b) {
          assignment.assignment.emplace(blocks[b], mixed.constituents[choice[b]]);
        }
        out.push_back(MixedOutcome{s, std::move(assignment)});
      }
      // next assignment
      std::size_t pos = 0;
      while (pos < choice.size() && ++choice[pos] == num_mechs) {
        choice[pos] = 0;
        ++pos;
      }
      if (pos == choice.size()) break;
    }
    return true;
  }, budget);
  return out;
}

// Structure minimizing total cost; ties go to the first in canonical order.
// Structures containing an infeasible-cost coalition are skipped.
inline std::pair<CoalitionStructure, double> social_optimum(
    const Instance& instance, std::uint64_t budget = kDefaultBudget) {
  std::optional<CoalitionStructure> best;
  double best_cost = kInfinity;
  for_each_structure(instance.n, instance.k, [&](const CoalitionStructure& s) {
    double total = 0.0;
    for (const auto& g : s.coalitions()) {
      auto c = instance.oracle.evaluate(g);
      if (!c.has_value()) return true;
      total += *c;
    }
    if (total < best_cost) {
      best_cost = total;
      best = s;
    }
    return true;
  }, budget);
  if (!best.has_value()) {
    // Unreachable: the standalone structure always has finite cost.
    throw NoStableStructure("no feasible structure exists");
  }
  return {*best, best_cost};
}

namespace detail {

inline SpoaReport spoa_from_costs(const Instance& instance, double cost_opt,
                                  double cost_worst_stable, std::uint64_t stable_count) {
  SpoaReport report;
  report.n = instance.n;
  report.k = instance.k;
  report.stable_count = stable_count;
  report.cost_opt = cost_opt;
  report.cost_worst_stable = cost_worst_stable;
  const double standalone_total = instance.oracle.standalone_total();
  report.utility_opt = standalone_total - cost_opt;
  report.utility_worst_stable = standalone_total - cost_worst_stable;
  report.spoa_cost = cost_opt > 0.0
                         ? cost_worst_stable / cost_opt
                         : (cost_worst_stable <= 0.0 ? 1.0 : kInfinity);
  report.spoa_utility = report.utility_worst_stable > 0.0
                            ? report.utility_opt / report.utility_worst_stable
                            : kInfinity;
  return report;
}

}  // namespace detail

// Worst-case stable structure versus the social optimum. The worst case is
// found by exhausting all stable structures. On oracles declared monotone
// the cost ratio is checked against the K upper bound; a violation means an
// implementation bug.
inline SpoaReport spoa(const Instance& instance, MechanismKind mechanism,
                       double epsilon = kDefaultEpsilon,
                       std::uint64_t budget = kDefaultBudget) {
  auto stable = enumerate_stable_structures(instance, mechanism, epsilon, budget);
  if (stable.empty()) {
    throw NoStableStructure(std::string("no stable structure under ") +
                            to_string(mechanism));
  }
  double worst = 0.0;
  for (const auto& s : stable) {
    double total = 0.0;
    for (const auto& g : s.coalitions()) total += *instance.oracle.evaluate(g);
    worst = std::max(worst, total);
  }
  auto [opt_structure, opt_cost] = social_optimum(instance, budget);
  SpoaReport report = detail::spoa_from_costs(instance, opt_cost, worst, stable.size());
  if (instance.oracle.declared_monotone() &&
      report.spoa_cost > instance.k + 1e-9) {
    throw std::logic_error("cost SPoA " + std::to_string(report.spoa_cost) +
                           " exceeds K=" + std::to_string(instance.k) +
                           " on a monotone instance");
  }
  return report;
}

inline SpoaReport spoa_mixed(const Instance& instance, const MixedMechanism& mixed,
                             double epsilon = kDefaultEpsilon,
                             std::uint64_t budget = kDefaultBudget) {
  auto outcomes = enumerate_stable_mixed(instance, mixed, epsilon, budget);
  if (outcomes.empty()) {
    throw NoStableStructure("no stable structure under " + mixed.to_string());
  }
  double worst = 0.0;
  std::uint64_t distinct = 0;
  std::optional<CoalitionStructure> last;
  for (const auto& o : outcomes) {
    if (!last.has_value() || !(*last == o.structure)) {
      ++distinct;
      last = o.structure;
      double total = 0.0;
      for (const auto& g : o.structure.coalitions()) {
        total += *instance.oracle.evaluate(g);
      }
      worst = std::max(worst, total);
    }
  }
  auto [opt_structure, opt_cost] = social_optimum(instance, budget);
  return detail::spoa_from_costs(instance, opt_cost, worst, distinct);
}

namespace detail {

// Bitset adjacency rows sized for a few hundred coalitions.
struct BitMatrix {
  int size = 0;
  int words = 0;
  std::vector<std::uint64_t> bits;

  BitMatrix(int s) : size(s), words((s + 63) / 64), bits(static_cast<std::size_t>(s) * words, 0) {}

  void set(int r, int c) {
    bits[static_cast<std::size_t>(r) * words + static_cast<std::size_t>(c / 64)] |=
        (1ull << (c % 64));
  }
  bool get(int r, int c) const {
    return (bits[static_cast<std::size_t>(r) * words + static_cast<std::size_t>(c / 64)] >>
            (c % 64)) & 1ull;
  }

  // this = this * other (boolean product).
  BitMatrix multiplied(const BitMatrix& other) const {
    BitMatrix out(size);
    for (int r = 0; r < size; ++r) {
      auto* out_row = &out.bits[static_cast<std::size_t>(r) * words];
      for (int c = 0; c < size; ++c) {
        if (!get(r, c)) continue;
        const auto* other_row = &other.bits[static_cast<std::size_t>(c) * words];
        for (int w = 0; w < words; ++w) out_row[w] |= other_row[w];
      }
    }
    return out;
  }
};

struct ImprovementGraph {
  std::vector<Coalition> nodes;
  BitMatrix adjacency{0};
  // label[r][c] = smallest participant witnessing the improvement edge r->c.
  std::vector<std::vector<ParticipantId>> labels;
};

// Nodes are feasible coalitions; edge G -> G' exists when some shared member
// strictly prefers G' to G.
template <typename UtilityFn>
ImprovementGraph build_improvement_graph(const std::vector<Coalition>& feasible,
                                         const UtilityFn& utility_of,
                                         double epsilon) {
  ImprovementGraph g;
  g.nodes = feasible;
  const int count = static_cast<int>(feasible.size());
  g.adjacency = BitMatrix(count);
  g.labels.assign(static_cast<std::size_t>(count),
                  std::vector<ParticipantId>(static_cast<std::size_t>(count), -1));
  for (int a = 0; a < count; ++a) {
    for (int b = 0; b < count; ++b) {
      if (a == b) continue;
      ParticipantId witness = -1;
      for (ParticipantId i : g.nodes[static_cast<std::size_t>(a)].members()) {
        if (!g.nodes[static_cast<std::size_t>(b)].contains(i)) continue;
        if (utility_of(i, b) > utility_of(i, a) + epsilon) {
          witness = i;
          break;
        }
      }
      if (witness >= 0) {
        g.adjacency.set(a, b);
        g.labels[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = witness;
      }
    }
  }
  return g;
}

inline std::optional<CyclicPreferenceWitness> find_cycle_in_graph(
    const ImprovementGraph& g, int max_length) {
  const int count = g.adjacency.size;
  if (count == 0) return std::nullopt;
  std::vector<BitMatrix> reach;
  reach.push_back(g.adjacency);  // reach[0] = A^1
  for (int len = 2; len <= max_length; ++len) {
    reach.push_back(reach.back().multiplied(g.adjacency));
  }
  for (int len = 2; len <= max_length; ++len) {
    const BitMatrix& power = reach[static_cast<std::size_t>(len - 1)];
    for (int v = 0; v < count; ++v) {
      if (!power.get(v, v)) continue;
      // Recover a closed walk of this length starting at v.
      std::vector<int> path{v};
      int at = v;
      for (int remaining = len; remaining > 1; --remaining) {
        for (int w = 0; w < count; ++w) {
          if (!g.adjacency.get(at, w)) continue;
          // remaining-1 more steps must lead from w back to v.
          bool closes = (remaining - 1 == 1)
                            ? g.adjacency.get(w, v)
                            : reach[static_cast<std::size_t>(remaining - 2)].get(w, v);
          if (closes) {
            path.push_back(w);
            at = w;
            break;
          }
        }
      }
      CyclicPreferenceWitness witness;
      for (std::size_t p = 0; p < path.size(); ++p) {
        int from = path[p];
        int to = path[(p + 1) % path.size()];
        witness.coalitions.push_back(g.nodes[static_cast<std::size_t>(from)]);
        witness.participants.push_back(
            g.labels[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)]);
      }
      return witness;
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Searches for a cyclic preference (sequences i_1..i_t, G_1..G_t with each
// i_k in G_k and G_{k+1} strictly preferring G_{k+1}) up to the given cycle
// length. Pure mechanisms are expected to return none.
inline std::optional<CyclicPreferenceWitness> find_cyclic_preference(
    const Instance& instance, MechanismKind mechanism,
    double epsilon = kDefaultEpsilon, int max_length = 6) {
  UtilityTable table(instance, mechanism);
  std::vector<Coalition> feasible;
  std::vector<int> table_idx;
  for (int idx = 0; idx < table.coalition_count(); ++idx) {
    if (table.feasible(idx)) {
      feasible.push_back(table.coalition(idx));
      table_idx.push_back(idx);
    }
  }
  auto graph = detail::build_improvement_graph(
      feasible,
      [&](ParticipantId i, int node) {
        return table.member_utility(table_idx[static_cast<std::size_t>(node)], i);
      },
      epsilon);
  return detail::find_cycle_in_graph(graph, max_length);
}

// Raw-utility variant: preferences given directly as a utility function
// (participant, coalition) -> value, over all coalitions of size <= k.
inline std::optional<CyclicPreferenceWitness> find_cyclic_preference(
    int n, int k, const std::function<double(ParticipantId, const Coalition&)>& utility_of,
    double epsilon = kDefaultEpsilon, int max_length = 6) {
  auto coalitions = enumerate_coalitions(n, k);
  auto graph = detail::build_improvement_graph(
      coalitions,
      [&](ParticipantId i, int node) {
        return utility_of(i, coalitions[static_cast<std::size_t>(node)]);
      },
      epsilon);
  return detail::find_cycle_in_graph(graph, max_length);
}

}  // namespace coalform
