#include <catch2/catch.hpp>

#include <map>
#include <set>

#include "coalform/formation.hpp"
#include "coalform/instances.hpp"
#include "coalform/stability.hpp"

using namespace coalform;

namespace {

CostOracle map_oracle(std::vector<double> standalone,
                      std::map<Coalition, double> costs) {
  const int n = static_cast<int>(standalone.size());
  return CostOracle(n, [standalone, costs](const Coalition& g) -> std::optional<double> {
    if (g.size() == 1) return standalone[static_cast<std::size_t>(g.members()[0])];
    auto it = costs.find(g);
    if (it == costs.end()) return std::nullopt;
    return it->second;
  });
}

Instance three_participant_instance() {
  return Instance{3, 2,
                  map_oracle({1.0, 1.0, 1.0}, {{Coalition{0, 1}, 1.0},
                                               {Coalition{0, 2}, 1.4},
                                               {Coalition{1, 2}, 1.8}})};
}

}  // namespace

TEST_CASE("preference lists are positive-utility and utility-ordered") {
  auto prefs = build_preferences(three_participant_instance(), MechanismKind::EqualSplit);
  REQUIRE(prefs.size() == 3);
  REQUIRE(prefs[0].entries.size() == 2);
  CHECK(prefs[0].entries[0] == Coalition{0, 1});
  CHECK(prefs[0].utilities[0] == Approx(0.5));
  CHECK(prefs[0].entries[1] == Coalition{0, 2});
  CHECK(prefs[0].utilities[1] == Approx(0.3));
  REQUIRE(prefs[1].entries.size() == 2);
  CHECK(prefs[1].entries[0] == Coalition{0, 1});
  CHECK(prefs[1].entries[1] == Coalition{1, 2});
  REQUIRE(prefs[2].entries.size() == 2);
  CHECK(prefs[2].entries[0] == Coalition{0, 2});
  CHECK(prefs[2].entries[1] == Coalition{1, 2});
  for (const auto& list : prefs) {
    for (double u : list.utilities) CHECK(u > kDefaultEpsilon);
  }
}

TEST_CASE("additive costs produce empty preference lists") {
  CostOracle oracle(3, [](const Coalition& g) -> std::optional<double> {
    return static_cast<double>(g.size());
  });
  auto prefs = build_preferences(Instance{3, 2, oracle}, MechanismKind::EqualSplit);
  for (const auto& list : prefs) CHECK(list.entries.empty());
}

TEST_CASE("single participant has an empty preference list") {
  auto prefs = build_preferences(Instance{1, 1, map_oracle({1.0}, {})},
                                 MechanismKind::EqualSplit);
  REQUIRE(prefs.size() == 1);
  CHECK(prefs[0].entries.empty());
}

TEST_CASE("formation reaches the hand-simulated outcome") {
  auto instance = three_participant_instance();
  auto result = run_formation(instance, MechanismKind::EqualSplit);
  CHECK(result.structure == CoalitionStructure({Coalition{0, 1}, Coalition{2}}));
  CHECK(total_proposals(result.rounds) <= 6);  // total preference entries

  // round 1: 0 and 1 both propose {0,1}, 2 proposes {0,2}; {0,1} is held
  REQUIRE(result.rounds.size() >= 2);
  const auto& first = result.rounds[0];
  CHECK(first.proposals.size() == 3);
  REQUIRE(first.holds_formed.size() == 1);
  CHECK(first.holds_formed[0] == Coalition{0, 1});
  CHECK(first.holds_broken.empty());

  // round 2: participant 2 proposes {1,2}; both of 2's proposals are now
  // worse than the holders' pair and get rejected
  const auto& second = result.rounds[1];
  REQUIRE(second.proposals.size() == 1);
  CHECK(second.proposals[0].first == 2);
  CHECK(second.proposals[0].second == Coalition{1, 2});
  bool pair_12_rejected = false;
  bool pair_02_rejected = false;
  for (const auto& round : result.rounds) {
    for (const auto& [who, g] : round.rejections) {
      if (who == 1 && g == Coalition{1, 2}) pair_12_rejected = true;
      if (who == 0 && g == Coalition{0, 2}) pair_02_rejected = true;
    }
  }
  CHECK(pair_12_rejected);
  CHECK(pair_02_rejected);

  // outcome passes the blocking check
  auto report = find_blocking_coalition(result.structure, MechanismKind::EqualSplit,
                                        instance.oracle, instance.k);
  CHECK(report.is_stable);
}

TEST_CASE("empty preferences terminate immediately with the standalone structure") {
  CostOracle oracle(3, [](const Coalition& g) -> std::optional<double> {
    return static_cast<double>(g.size());
  });
  auto result = run_formation(Instance{3, 2, oracle}, MechanismKind::EqualSplit);
  CHECK(result.structure == CoalitionStructure::standalone(3));
  CHECK(result.rounds.empty());
  CHECK(total_proposals(result.rounds) == 0);
}

TEST_CASE("identical inputs produce identical traces") {
  RandomCostSpec spec;
  spec.n = 6;
  spec.k = 3;
  spec.seed = 12345;
  auto a = run_formation(random_monotone_oracle(spec), MechanismKind::ProportionalSplit);
  auto b = run_formation(random_monotone_oracle(spec), MechanismKind::ProportionalSplit);
  CHECK(a.structure == b.structure);
  REQUIRE(a.rounds.size() == b.rounds.size());
  for (std::size_t r = 0; r < a.rounds.size(); ++r) {
    CHECK(a.rounds[r].proposals == b.rounds[r].proposals);
    CHECK(a.rounds[r].rejections == b.rounds[r].rejections);
    CHECK(a.rounds[r].holds_formed == b.rounds[r].holds_formed);
    CHECK(a.rounds[r].holds_broken == b.rounds[r].holds_broken);
  }
}

TEST_CASE("formation invariants hold across random instances") {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    RandomCostSpec spec;
    spec.n = 4 + static_cast<int>(seed % 4);
    spec.k = 2 + static_cast<int>(seed % 2);
    spec.seed = seed;
    spec.synergy_factor = 0.7;
    Instance instance = random_monotone_oracle(spec);
    for (MechanismKind m : kAllMechanisms) {
      auto prefs = build_preferences(instance, m);
      std::uint64_t pref_entries = 0;
      for (const auto& list : prefs) pref_entries += list.entries.size();

      auto result = run_formation(instance, m);

      // output is a valid partition and stable
      CHECK(result.structure.is_valid_partition(instance.n, instance.k));
      CHECK(find_blocking_coalition(result.structure, m, instance.oracle,
                                    instance.k).is_stable);

      // proposal bound: each coalition proposed at most once per proposer
      CHECK(total_proposals(result.rounds) <= pref_entries);
      std::set<std::pair<ParticipantId, Coalition>> seen;
      for (const auto& round : result.rounds) {
        for (const auto& p : round.proposals) {
          CHECK(seen.insert(p).second);
        }
      }

      // holds stay a disjoint partial partition after every round
      std::map<ParticipantId, Coalition> held;
      for (const auto& round : result.rounds) {
        for (const auto& broken : round.holds_broken) {
          for (ParticipantId i : broken.members()) {
            auto it = held.find(i);
            if (it != held.end() && it->second == broken) held.erase(it);
          }
        }
        for (const auto& formed : round.holds_formed) {
          for (ParticipantId i : formed.members()) held.insert_or_assign(i, formed);
        }
        // each member of a held coalition holds that same coalition, so the
        // holds are pairwise disjoint
        for (const auto& [i, g] : held) {
          for (ParticipantId j : g.members()) {
            auto it = held.find(j);
            REQUIRE(it != held.end());
            CHECK(it->second == g);
          }
        }
      }

      // replaced holds are strictly better for every member kept
      std::map<ParticipantId, double> held_utility;
      for (const auto& round : result.rounds) {
        for (const auto& broken : round.holds_broken) {
          for (ParticipantId i : broken.members()) held_utility.erase(i);
        }
        for (const auto& formed : round.holds_formed) {
          for (ParticipantId i : formed.members()) {
            const double u = utility(m, formed, instance.oracle, i);
            auto it = held_utility.find(i);
            if (it != held_utility.end()) {
              CHECK(u > it->second + kDefaultEpsilon);
            }
            held_utility[i] = u;
          }
        }
      }
    }
  }
}

TEST_CASE("formation structure appears in the brute-force stable set") {
  auto instance = three_participant_instance();
  auto stable = enumerate_stable_structures(instance, MechanismKind::EqualSplit);
  auto result = run_formation(instance, MechanismKind::EqualSplit);
  CHECK(std::find(stable.begin(), stable.end(), result.structure) != stable.end());
}

TEST_CASE("formation skips infeasible coalitions of a set-cover oracle") {
  SetCoverInstance sc;
  sc.universe = 3;
  sc.sets = {{0, 1}, {2}, {0, 1, 2}};
  sc.costs = {1.0, 1.0, 3.0};
  Instance instance = set_cover_oracle(sc, 3);
  auto prefs = build_preferences(instance, MechanismKind::EqualSplit);
  // only the cheap pair clears the positive-utility bar
  CHECK(prefs[0].entries == std::vector<Coalition>{Coalition{0, 1}});
  CHECK(prefs[1].entries == std::vector<Coalition>{Coalition{0, 1}});
  CHECK(prefs[2].entries.empty());
  auto result = run_formation(instance, MechanismKind::EqualSplit);
  CHECK(result.structure == CoalitionStructure({Coalition{0, 1}, Coalition{2}}));
  CHECK(find_blocking_coalition(result.structure, MechanismKind::EqualSplit,
                                instance.oracle, instance.k).is_stable);
}
