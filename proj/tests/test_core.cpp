#include <catch2/catch.hpp>

#include <cmath>
#include <map>
#include <random>
#include <thread>

#include "coalform/bargaining.hpp"
#include "coalform/core.hpp"
#include "coalform/instances.hpp"
#include "coalform/partitions.hpp"

using namespace coalform;

namespace {

// Oracle over an explicit cost map; standalone costs listed separately.
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

}  // namespace

TEST_CASE("coalition normalizes and validates") {
  Coalition g({3, 1, 2, 1});
  CHECK(g.members() == std::vector<ParticipantId>{1, 2, 3});
  CHECK(g.contains(2));
  CHECK_FALSE(g.contains(0));
  CHECK_THROWS_AS(Coalition(std::vector<ParticipantId>{}), ValidationError);
  CHECK(size_lex_less(Coalition{5}, Coalition{0, 1}));
  CHECK(size_lex_less(Coalition{0, 2}, Coalition{0, 3}));
}

TEST_CASE("coalition structure validity") {
  CoalitionStructure s({Coalition{0, 1}, Coalition{2}});
  CHECK(s.is_valid_partition(3, 2));
  CHECK_FALSE(s.is_valid_partition(3, 1));  // pair exceeds cap
  CHECK_FALSE(s.is_valid_partition(4, 2));  // participant 3 missing
  CHECK(s.block_of(1) == Coalition{0, 1});
  CHECK(CoalitionStructure::standalone(3).coalitions().size() == 3);
}

TEST_CASE("equal split halves a two-member cost") {
  auto oracle = map_oracle({1.0, 1.0}, {{Coalition{0, 1}, 1.0}});
  auto p = payment(MechanismKind::EqualSplit, Coalition{0, 1}, oracle);
  CHECK(p.payment_of(0) == Approx(0.5));
  CHECK(p.payment_of(1) == Approx(0.5));
}

TEST_CASE("proportional split follows standalone costs") {
  auto oracle = map_oracle({3.0, 1.0}, {{Coalition{0, 1}, 2.0}});
  auto p = payment(MechanismKind::ProportionalSplit, Coalition{0, 1}, oracle);
  CHECK(p.payment_of(0) == Approx(1.5));
  CHECK(p.payment_of(1) == Approx(0.5));
}

TEST_CASE("egalitarian split equalizes surplus") {
  auto oracle = map_oracle({3.0, 1.0}, {{Coalition{0, 1}, 2.0}});
  auto p = payment(MechanismKind::EgalitarianNash, Coalition{0, 1}, oracle);
  CHECK(p.payment_of(0) == Approx(2.0));
  CHECK(p.payment_of(1) == Approx(0.0));
  CHECK(utility(MechanismKind::EgalitarianNash, Coalition{0, 1}, oracle, 0) == Approx(1.0));
  CHECK(utility(MechanismKind::EgalitarianNash, Coalition{0, 1}, oracle, 1) == Approx(1.0));
}

TEST_CASE("egalitarian payment may be negative") {
  auto oracle = map_oracle({5.0, 1.0}, {{Coalition{0, 1}, 1.0}});
  auto p = payment(MechanismKind::EgalitarianNash, Coalition{0, 1}, oracle);
  CHECK(p.payment_of(1) == Approx(-1.5));
  CHECK(p.total() == Approx(1.0));
}

TEST_CASE("payment errors") {
  auto oracle = map_oracle({1.0, 1.0}, {});
  CHECK_THROWS_AS(payment(MechanismKind::EqualSplit, Coalition{0, 1}, oracle),
                  InfeasibleCoalition);
  auto zero = map_oracle({0.0, 0.0}, {{Coalition{0, 1}, 0.0}});
  CHECK_THROWS_AS(payment(MechanismKind::ProportionalSplit, Coalition{0, 1}, zero),
                  DegenerateProportional);
}

TEST_CASE("utility basics") {
  auto oracle = map_oracle({3.0, 1.0}, {{Coalition{0, 1}, 2.0}});
  for (MechanismKind m : kAllMechanisms) {
    CHECK(utility(m, Coalition{0}, oracle, 0) == 0.0);
  }
  CHECK(utility(MechanismKind::EqualSplit, Coalition{0, 1}, oracle, 0) == Approx(2.0));
  CHECK(utility(MechanismKind::EqualSplit, Coalition{0, 1}, oracle, 1) == Approx(0.0));
  CHECK_THROWS_AS(utility(MechanismKind::EqualSplit, Coalition{0, 1}, oracle, 2),
                  NotAMember);
}

TEST_CASE("budget balance holds on random coalitions") {
  std::mt19937_64 rng(20240601);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 4);
    std::vector<double> standalone;
    for (int i = 0; i < n; ++i) standalone.push_back(uniform_range(rng, 0.2, 3.0));
    std::vector<ParticipantId> all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    Coalition g(all);
    const double sum = [&] {
      double s = 0.0;
      for (double c : standalone) s += c;
      return s;
    }();
    const double cost = uniform_range(rng, 0.0, 1.5) * sum;
    auto oracle = map_oracle(standalone, {{g, cost}});
    for (MechanismKind m : kAllMechanisms) {
      auto p = payment(m, g, oracle);
      CHECK(std::fabs(p.total() - cost) <= kRelTol * std::max(1.0, cost));
    }
  }
}

TEST_CASE("egalitarian utilities are equal across members") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 3);
    std::vector<double> standalone;
    for (int i = 0; i < n; ++i) standalone.push_back(uniform_range(rng, 0.1, 4.0));
    std::vector<ParticipantId> all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    Coalition g(all);
    double sum = 0.0;
    for (double c : standalone) sum += c;
    auto oracle = map_oracle(standalone, {{g, uniform_range(rng, 0.0, 1.0) * sum}});
    double umin = kInfinity;
    double umax = -kInfinity;
    for (ParticipantId i : g.members()) {
      const double u = utility(MechanismKind::EgalitarianNash, g, oracle, i);
      umin = std::min(umin, u);
      umax = std::max(umax, u);
    }
    CHECK(umax - umin <= 1e-9);
  }
}

// For a pair {i, j} with non-negative surplus: the member with the smaller
// standalone cost does at least as well under the egalitarian split as
// under the proportional split, and vice versa.
TEST_CASE("pairwise ordering of egalitarian vs proportional utilities") {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 300; ++trial) {
    const double ci = uniform_range(rng, 0.05, 2.0);
    const double cj = uniform_range(rng, 0.05, 2.0);
    const double cost = uniform_range(rng, 0.0, 1.0) * (ci + cj);
    auto oracle = map_oracle({ci, cj}, {{Coalition{0, 1}, cost}});
    const double u_ega = utility(MechanismKind::EgalitarianNash, Coalition{0, 1}, oracle, 0);
    const double u_pp = utility(MechanismKind::ProportionalSplit, Coalition{0, 1}, oracle, 0);
    if (cj >= ci) {
      CHECK(u_ega >= u_pp - 1e-12);
    } else {
      CHECK(u_pp >= u_ega - 1e-12);
    }
  }
}

TEST_CASE("cost truncation caps at the standalone sum") {
  auto high = map_oracle({2.0, 2.0}, {{Coalition{0, 1}, 5.0}});
  auto truncated = truncate_cost(high);
  CHECK(*truncated.evaluate(Coalition{0, 1}) == Approx(4.0));
  CHECK(truncated.standalone_cost(0) == Approx(2.0));

  auto low = map_oracle({2.0, 2.0}, {{Coalition{0, 1}, 3.0}});
  CHECK(*truncate_cost(low).evaluate(Coalition{0, 1}) == Approx(3.0));
  CHECK(*truncate_cost(low).evaluate(Coalition{1}) == Approx(2.0));

  // idempotent
  auto twice = truncate_cost(truncate_cost(high));
  CHECK(*twice.evaluate(Coalition{0, 1}) == Approx(4.0));

  // an unbounded cost truncates to the standalone sum
  auto partial = map_oracle({2.0, 3.0}, {});
  CHECK(*truncate_cost(partial).evaluate(Coalition{0, 1}) == Approx(5.0));
}

TEST_CASE("oracle memo table supports concurrent readers") {
  CostOracle oracle(6, [](const Coalition& g) -> std::optional<double> {
    double total = 0.0;
    for (ParticipantId i : g.members()) total += 1.0 + 0.25 * i;
    return total * (g.size() > 1 ? 0.9 : 1.0);
  });
  auto coalitions = enumerate_coalitions(6, 3);
  std::vector<double> expected;
  for (const auto& g : coalitions) expected.push_back(*oracle.evaluate(g));

  std::vector<std::thread> workers;
  std::vector<std::vector<double>> results(4);
  for (int w = 0; w < 4; ++w) {
    workers.emplace_back([&, w] {
      for (const auto& g : coalitions) results[static_cast<std::size_t>(w)].push_back(*oracle.evaluate(g));
    });
  }
  for (auto& t : workers) t.join();
  for (const auto& r : results) CHECK(r == expected);
}

TEST_CASE("oracle memoization is deterministic and shared") {
  int calls = 0;
  CostOracle oracle(2, [&calls](const Coalition& g) -> std::optional<double> {
    ++calls;
    return static_cast<double>(g.size());
  });
  const int after_ctor = calls;  // standalone costs were cached eagerly
  CHECK(*oracle.evaluate(Coalition{0, 1}) == 2.0);
  CHECK(*oracle.evaluate(Coalition{0, 1}) == 2.0);
  CHECK(calls == after_ctor + 1);
  CHECK(*oracle.evaluate(Coalition{0}) == 1.0);
  CHECK(calls == after_ctor + 1);
}

TEST_CASE("mixed mechanism validates constituents") {
  MixedMechanism mixed({MechanismKind::EqualSplit, MechanismKind::EqualSplit,
                        MechanismKind::EgalitarianNash});
  CHECK(mixed.constituents.size() == 2);
  CHECK(mixed.to_string() == "mixed(equal_split+egalitarian_nash)");
  CHECK_THROWS_AS(MixedMechanism(std::vector<MechanismKind>{}), ValidationError);
}

namespace {

// Independent oracle for the Nash bargaining program: brute grid search
// over payments on the budget hyperplane, maximizing the utility product.
std::vector<double> grid_search_nash(const std::vector<double>& standalone, double cost,
                                     double lo, double hi, int steps) {
  const std::size_t size = standalone.size();
  std::vector<double> best;
  double best_product = -kInfinity;
  std::vector<int> idx(size - 1, 0);
  while (true) {
    std::vector<double> pay(size, 0.0);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < size; ++i) {
      pay[i] = lo + (hi - lo) * idx[i] / static_cast<double>(steps);
      sum += pay[i];
    }
    pay[size - 1] = cost - sum;
    double product = 1.0;
    bool positive = true;
    for (std::size_t i = 0; i < size; ++i) {
      const double u = standalone[i] - pay[i];
      if (u <= 0.0) { positive = false; break; }
      product *= u;
    }
    if (positive && product > best_product) {
      best_product = product;
      best = pay;
    }
    std::size_t pos = 0;
    while (pos + 1 < size && ++idx[pos] > steps) {
      idx[pos] = 0;
      ++pos;
    }
    if (pos + 1 >= size) break;
  }
  return best;
}

}  // namespace

TEST_CASE("nash bargaining maximizer matches the egalitarian split") {
  auto oracle = map_oracle({3.0, 1.0}, {{Coalition{0, 1}, 2.0}});
  CHECK(nash_bargaining_verify(Coalition{0, 1}, oracle, 1e-6));

  // grid oracle agrees: maximizer near u_0 = u_1 = 1
  auto grid = grid_search_nash({3.0, 1.0}, 2.0, -5.0, 5.0, 2000);
  REQUIRE_FALSE(grid.empty());
  CHECK(grid[0] == Approx(2.0).margin(0.01));
  CHECK(grid[1] == Approx(0.0).margin(0.01));

  auto symmetric = map_oracle({1.0, 1.0}, {{Coalition{0, 1}, 1.0}});
  CHECK(nash_bargaining_verify(Coalition{0, 1}, symmetric, 1e-6));

  auto triple = map_oracle({2.0, 2.0, 2.0}, {{Coalition{0, 1, 2}, 3.0}});
  CHECK(nash_bargaining_verify(Coalition{0, 1, 2}, triple, 1e-6));
  auto grid3 = grid_search_nash({2.0, 2.0, 2.0}, 3.0, -4.0, 4.0, 400);
  REQUIRE_FALSE(grid3.empty());
  CHECK(grid3[0] == Approx(1.0).margin(0.03));
  CHECK(grid3[1] == Approx(1.0).margin(0.03));
}

TEST_CASE("nash bargaining verification rejects degenerate surplus") {
  auto oracle = map_oracle({1.0, 1.0}, {{Coalition{0, 1}, 2.5}});
  CHECK_THROWS_AS(nash_bargaining_verify(Coalition{0, 1}, oracle), DegenerateSurplus);
}

TEST_CASE("nash bargaining verification passes on random positive-surplus coalitions") {
  std::mt19937_64 rng(99);
  int verified = 0;
  while (verified < 120) {
    const int size = 2 + static_cast<int>(rng() % 3);
    std::vector<double> standalone;
    for (int i = 0; i < size; ++i) standalone.push_back(uniform_range(rng, 0.2, 3.0));
    double sum = 0.0;
    for (double c : standalone) sum += c;
    const double cost = uniform_range(rng, 0.1, 0.9) * sum;
    std::vector<ParticipantId> all(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) all[static_cast<std::size_t>(i)] = i;
    auto oracle = map_oracle(standalone, {{Coalition(all), cost}});
    CHECK(nash_bargaining_verify(Coalition(all), oracle, 1e-4));
    ++verified;
  }
}
