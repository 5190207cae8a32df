#pragma once

// Round-based simulation of decentralized coalition formation by deferred
// acceptance. Each round runs four barrier-synchronized stages: proposing,
// evaluation, selection, termination. All stage decisions are evaluated
// against the stage-start snapshot, so results do not depend on the order
// participants are visited within a stage.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "coalform/core.hpp"
#include "coalform/stability.hpp"

namespace coalform {

// Coalitions containing the owner with utility above epsilon, ordered by
// utility descending; ties broken by smaller size first, then
// lexicographically on member ids (the same rule for every participant).
struct PreferenceList {
  ParticipantId owner = -1;
  std::vector<Coalition> entries;
  std::vector<double> utilities;  // aligned with entries
};

// Per-participant state between rounds.
struct AgentState {
  ParticipantId owner = -1;
  std::vector<std::pair<Coalition, ParticipantId>> proposals_received;
  std::optional<Coalition> held;
  bool suspended = false;
  std::size_t preference_cursor = 0;  // entries before the cursor were proposed
};

struct RoundTrace {
  int round_index = 0;
  std::vector<std::pair<ParticipantId, Coalition>> proposals;   // (proposer, G)
  std::vector<std::pair<ParticipantId, Coalition>> rejections;  // (rejector, G)
  std::vector<Coalition> holds_formed;
  std::vector<Coalition> holds_broken;
};

struct FormationResult {
  CoalitionStructure structure;
  std::vector<RoundTrace> rounds;
  std::vector<AgentState> final_states;
};

inline std::uint64_t total_proposals(const std::vector<RoundTrace>& rounds) {
  std::uint64_t total = 0;
  for (const auto& r : rounds) total += r.proposals.size();
  return total;
}

inline std::vector<PreferenceList> build_preferences(const Instance& instance,
                                                     MechanismKind mechanism,
                                                     double epsilon = kDefaultEpsilon,
                                                     std::uint64_t budget = kDefaultBudget) {
  UtilityTable table(instance, mechanism);
  std::vector<PreferenceList> prefs(static_cast<std::size_t>(instance.n));
  std::uint64_t total_entries = 0;
  for (int i = 0; i < instance.n; ++i) {
    auto& list = prefs[static_cast<std::size_t>(i)];
    list.owner = i;
    std::vector<int> indices;
    for (int idx = 0; idx < table.coalition_count(); ++idx) {
      if (!table.feasible(idx)) continue;
      const Coalition& g = table.coalition(idx);
      if (!g.contains(i)) continue;
      if (table.member_utility(idx, i) > epsilon) indices.push_back(idx);
    }
    std::sort(indices.begin(), indices.end(), [&](int a, int b) {
      const double ua = table.member_utility(a, i);
      const double ub = table.member_utility(b, i);
      if (ua != ub) return ua > ub;
      return a < b;  // table order is size-then-lex
    });
    total_entries += indices.size();
    if (total_entries > budget) {
      throw InstanceTooLarge("preference lists exceed budget of " +
                             std::to_string(budget) + " entries");
    }
    for (int idx : indices) {
      list.entries.push_back(table.coalition(idx));
      list.utilities.push_back(table.member_utility(idx, i));
    }
  }
  return prefs;
}

namespace detail {

struct FormationSim {
  const UtilityTable& table;
  double epsilon;
  int n;

  std::vector<std::vector<int>> prefs;  // coalition indices, best first
  std::vector<std::size_t> cursor;
  std::vector<int> held;  // coalition index, -1 when none
  std::vector<char> suspended;
  std::map<int, std::vector<ParticipantId>> held_proposers;  // held idx -> proposers

  double utility_of(ParticipantId i, int idx) const {
    return idx < 0 ? 0.0 : table.member_utility(idx, i);
  }

  bool better(ParticipantId i, int candidate, int incumbent) const {
    return utility_of(i, candidate) > utility_of(i, incumbent) + epsilon;
  }

  // Preference order of participant i between two coalition indices:
  // higher utility first, then smaller table index (size-then-lex).
  bool prefers(ParticipantId i, int a, int b) const {
    const double ua = utility_of(i, a);
    const double ub = utility_of(i, b);
    if (ua != ub) return ua > ub;
    return a < b;
  }
};

}  // namespace detail

// Runs the four-stage deferred-acceptance process to completion and returns
// the final structure (held coalitions plus singletons for everyone else)
// with the full per-round trace.
//
// Stage rules, per round:
//  1. proposing: every non-suspended participant whose next preference beats
//     its held coalition proposes it to all members and removes it from its
//     list (each participant proposes a given coalition at most once).
//     Identical proposals from several proposers merge.
//  2. evaluation: every member rejects a pending proposal that is not
//     strictly better than its currently held coalition; a rejection removes
//     the proposal for all members. Unrejected proposals stay pending for
//     consideration in later rounds, as deferred acceptance requires: a
//     proposal leaves the table only by rejection or by being held.
//  3. selection: every participant picks its favourite surviving proposal it
//     belongs to (a proposer's own proposal competes here too). A proposal
//     becomes held only when every member picked it. Displaced held
//     coalitions dissolve for all their members, their proposers resume
//     proposing; the proposers of a newly held coalition are suspended.
//  4. termination: the process ends on the first round with no proposal,
//     rejection or new hold (nothing can change thereafter).
inline FormationResult run_formation(const Instance& instance, MechanismKind mechanism,
                                     double epsilon = kDefaultEpsilon,
                                     std::uint64_t budget = kDefaultBudget) {
  UtilityTable table(instance, mechanism);
  detail::FormationSim sim{table, epsilon, instance.n, {}, {}, {}, {}, {}};

  // Preference lists as table indices (same entries as build_preferences).
  std::uint64_t total_entries = 0;
  sim.prefs.assign(static_cast<std::size_t>(instance.n), {});
  for (int i = 0; i < instance.n; ++i) {
    auto& list = sim.prefs[static_cast<std::size_t>(i)];
    for (int idx = 0; idx < table.coalition_count(); ++idx) {
      if (!table.feasible(idx)) continue;
      if (!table.coalition(idx).contains(i)) continue;
      if (table.member_utility(idx, i) > epsilon) list.push_back(idx);
    }
    std::sort(list.begin(), list.end(), [&](int a, int b) {
      const double ua = table.member_utility(a, i);
      const double ub = table.member_utility(b, i);
      if (ua != ub) return ua > ub;
      return a < b;
    });
    total_entries += list.size();
    if (total_entries > budget) {
      throw InstanceTooLarge("preference lists exceed budget of " +
                             std::to_string(budget) + " entries");
    }
  }
  sim.cursor.assign(static_cast<std::size_t>(instance.n), 0);
  sim.held.assign(static_cast<std::size_t>(instance.n), -1);
  sim.suspended.assign(static_cast<std::size_t>(instance.n), 0);

  FormationResult result;
  const std::uint64_t max_rounds =
      3 * (total_entries + static_cast<std::uint64_t>(instance.n)) + 2;

  // Proposals on the table, merged per coalition with all their proposers.
  std::map<int, std::vector<ParticipantId>> pending;

  for (std::uint64_t round = 1;; ++round) {
    if (round > max_rounds) {
      // Every non-terminal round consumes a preference entry or removes a
      // pending proposal, so the round count is linearly bounded by the
      // total number of preference entries.
      throw NonConvergence("formation exceeded " + std::to_string(max_rounds) +
                           " rounds; this indicates a bug or cyclic preferences");
    }
    RoundTrace trace;
    trace.round_index = static_cast<int>(round);

    // --- proposing (against the round-start snapshot) ---
    for (int i = 0; i < instance.n; ++i) {
      auto& list = sim.prefs[static_cast<std::size_t>(i)];
      auto& cur = sim.cursor[static_cast<std::size_t>(i)];
      if (sim.suspended[static_cast<std::size_t>(i)] || cur >= list.size()) continue;
      const int top = list[cur];
      if (!sim.better(i, top, sim.held[static_cast<std::size_t>(i)])) continue;
      pending[top].push_back(i);
      ++cur;
      trace.proposals.emplace_back(i, table.coalition(top));
    }

    // --- evaluation (held coalitions unchanged during this stage) ---
    for (auto it = pending.begin(); it != pending.end();) {
      const int idx = it->first;
      bool rejected = false;
      for (ParticipantId j : table.coalition(idx).members()) {
        if (!sim.better(j, idx, sim.held[static_cast<std::size_t>(j)])) {
          trace.rejections.emplace_back(j, table.coalition(idx));
          rejected = true;
        }
      }
      it = rejected ? pending.erase(it) : std::next(it);
    }

    // --- selection ---
    // Each participant picks its favourite surviving proposal it belongs to.
    std::vector<int> pick(static_cast<std::size_t>(instance.n), -1);
    for (const auto& [idx, proposers] : pending) {
      for (ParticipantId j : table.coalition(idx).members()) {
        auto& best = pick[static_cast<std::size_t>(j)];
        if (best < 0 || sim.prefers(j, idx, best)) best = idx;
      }
    }
    std::vector<int> accepted;
    for (const auto& [idx, proposers] : pending) {
      bool unanimous = true;
      for (ParticipantId j : table.coalition(idx).members()) {
        if (pick[static_cast<std::size_t>(j)] != idx) {
          unanimous = false;
          break;
        }
      }
      if (unanimous) accepted.push_back(idx);
    }
    // Accepted coalitions are pairwise disjoint (each member picked exactly
    // one), so holds stay a partial partition.
    std::set<int> displaced;
    for (int idx : accepted) {
      for (ParticipantId j : table.coalition(idx).members()) {
        const int old = sim.held[static_cast<std::size_t>(j)];
        if (old >= 0 && old != idx) displaced.insert(old);
      }
    }
    for (int idx : accepted) {
      for (ParticipantId j : table.coalition(idx).members()) {
        sim.held[static_cast<std::size_t>(j)] = idx;
      }
    }
    for (int old : displaced) {
      for (ParticipantId j : table.coalition(old).members()) {
        if (sim.held[static_cast<std::size_t>(j)] == old) {
          sim.held[static_cast<std::size_t>(j)] = -1;
        }
      }
      auto it = sim.held_proposers.find(old);
      if (it != sim.held_proposers.end()) {
        for (ParticipantId q : it->second) sim.suspended[static_cast<std::size_t>(q)] = 0;
        sim.held_proposers.erase(it);
      }
      trace.holds_broken.push_back(table.coalition(old));
    }
    for (int idx : accepted) {
      const auto& proposers = pending.at(idx);
      sim.held_proposers[idx] = proposers;
      for (ParticipantId q : proposers) sim.suspended[static_cast<std::size_t>(q)] = 1;
      trace.holds_formed.push_back(table.coalition(idx));
    }
    for (int idx : accepted) pending.erase(idx);

    // --- termination: a round that changed nothing ends the process ---
    if (trace.proposals.empty() && trace.rejections.empty() &&
        trace.holds_formed.empty()) {
      break;
    }
    result.rounds.push_back(std::move(trace));
  }

  // Final structure: held coalitions plus singletons for the unheld.
  std::set<int> held_set;
  std::vector<Coalition> blocks;
  for (int i = 0; i < instance.n; ++i) {
    const int idx = sim.held[static_cast<std::size_t>(i)];
    if (idx < 0) {
      blocks.push_back(Coalition{i});
    } else if (held_set.insert(idx).second) {
      blocks.push_back(table.coalition(idx));
    }
  }
  result.structure = CoalitionStructure(std::move(blocks));

  result.final_states.resize(static_cast<std::size_t>(instance.n));
  for (int i = 0; i < instance.n; ++i) {
    auto& st = result.final_states[static_cast<std::size_t>(i)];
    st.owner = i;
    st.suspended = sim.suspended[static_cast<std::size_t>(i)] != 0;
    st.preference_cursor = sim.cursor[static_cast<std::size_t>(i)];
    const int idx = sim.held[static_cast<std::size_t>(i)];
    if (idx >= 0) st.held = table.coalition(idx);
    for (const auto& [pending_idx, proposers] : pending) {
      if (table.coalition(pending_idx).contains(i)) {
        for (ParticipantId q : proposers) {
          st.proposals_received.emplace_back(table.coalition(pending_idx), q);
        }
      }
    }
  }
  return result;
}

}  // namespace coalform
