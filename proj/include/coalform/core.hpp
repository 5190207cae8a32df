#pragma once

// Core domain types for coalition cost-sharing games: participants,
// coalitions, coalition structures, cost oracles and the pure cost-sharing
// mechanisms (equal split, proportional split, egalitarian/Nash split).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace coalform {

using ParticipantId = int;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Relative tolerance used for budget-balance style equality checks.
inline constexpr double kRelTol = 1e-9;
// Default threshold for "strictly better" comparisons in stability tests.
inline constexpr double kDefaultEpsilon = 1e-9;
// Default cap on enumeration work (structures, preference entries).
inline constexpr std::uint64_t kDefaultBudget = 10'000'000;

struct InfeasibleCoalition : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateProportional : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateSurplus : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotAMember : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InstanceTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoStableStructure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A non-empty, sorted, duplicate-free set of participants.
class Coalition {
 public:
  Coalition(std::initializer_list<ParticipantId> ids)
      : Coalition(std::vector<ParticipantId>(ids)) {}

  explicit Coalition(std::vector<ParticipantId> ids) : members_(std::move(ids)) {
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
    if (members_.empty()) {
      throw ValidationError("coalition must be non-empty");
    }
    if (members_.front() < 0) {
      throw ValidationError("participant ids must be non-negative");
    }
  }

  const std::vector<ParticipantId>& members() const { return members_; }
  int size() const { return static_cast<int>(members_.size()); }

  bool contains(ParticipantId i) const {
    return std::binary_search(members_.begin(), members_.end(), i);
  }

  bool is_subset_of(const Coalition& other) const {
    return std::includes(other.members_.begin(), other.members_.end(),
                         members_.begin(), members_.end());
  }

  bool intersects(const Coalition& other) const {
    auto a = members_.begin();
    auto b = other.members_.begin();
    while (a != members_.end() && b != other.members_.end()) {
      if (*a == *b) return true;
      if (*a < *b) ++a; else ++b;
    }
    return false;
  }

  std::string to_string() const {
    std::string out = "{";
    for (std::size_t i = 0; i < members_.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(members_[i]);
    }
    return out + "}";
  }

  friend bool operator==(const Coalition& a, const Coalition& b) {
    return a.members_ == b.members_;
  }
  // Lexicographic on the sorted member list.
  friend bool operator<(const Coalition& a, const Coalition& b) {
    return a.members_ < b.members_;
  }

 private:
  std::vector<ParticipantId> members_;
};

// Orders coalitions by size first, then lexicographically; this is the
// canonical scan order for blocking-coalition searches and tie-breaking.
inline bool size_lex_less(const Coalition& a, const Coalition& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

struct CoalitionHash {
  std::size_t operator()(const Coalition& g) const {
    std::size_t h = 0x9e3779b97f4a7c15ull;
    for (ParticipantId i : g.members()) {
      h ^= static_cast<std::size_t>(i) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
  }
};

// A partition of {0..n-1} into disjoint coalitions. Blocks are kept in
// lexicographic order (equivalently, sorted by smallest member).
class CoalitionStructure {
 public:
  CoalitionStructure() = default;

  explicit CoalitionStructure(std::vector<Coalition> blocks)
      : coalitions_(std::move(blocks)) {
    std::sort(coalitions_.begin(), coalitions_.end());
  }

  static CoalitionStructure standalone(int n) {
    std::vector<Coalition> blocks;
    blocks.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) blocks.push_back(Coalition{i});
    return CoalitionStructure(std::move(blocks));
  }

  const std::vector<Coalition>& coalitions() const { return coalitions_; }

  int participant_count() const {
    int n = 0;
    for (const auto& g : coalitions_) n += g.size();
    return n;
  }

  // The block containing participant i; throws if i is unassigned.
  const Coalition& block_of(ParticipantId i) const {
    for (const auto& g : coalitions_) {
      if (g.contains(i)) return g;
    }
    throw NotAMember("participant " + std::to_string(i) + " not in structure");
  }

  // True iff the blocks partition {0..n-1} and every block has size <= k.
  bool is_valid_partition(int n, int k) const {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    int total = 0;
    for (const auto& g : coalitions_) {
      if (g.size() > k) return false;
      for (ParticipantId i : g.members()) {
        if (i < 0 || i >= n || seen[static_cast<std::size_t>(i)]) return false;
        seen[static_cast<std::size_t>(i)] = 1;
        ++total;
      }
    }
    return total == n;
  }

  std::string to_string() const {
    std::string out;
    for (const auto& g : coalitions_) out += g.to_string();
    return out;
  }

  friend bool operator==(const CoalitionStructure& a, const CoalitionStructure& b) {
    return a.coalitions_ == b.coalitions_;
  }
  friend bool operator<(const CoalitionStructure& a, const CoalitionStructure& b) {
    return a.coalitions_ < b.coalitions_;
  }

 private:
  std::vector<Coalition> coalitions_;
};

// Deterministic map from coalitions to non-negative costs. std::nullopt is
// the infeasible sentinel (unbounded cost). Evaluations are memoized keyed
// by the sorted member list; the memo table allows concurrent readers with
// exclusive insertion, so evaluation may be called from parallel workers.
class CostOracle {
 public:
  using EvalFn = std::function<std::optional<double>(const Coalition&)>;

  CostOracle(int participants, EvalFn fn, bool monotone = false,
             bool subadditive = false)
      : state_(std::make_shared<State>()) {
    if (participants < 1) {
      throw ValidationError("cost oracle needs at least one participant");
    }
    state_->n = participants;
    state_->fn = std::move(fn);
    state_->monotone = monotone;
    state_->subadditive = subadditive;
    state_->standalone.resize(static_cast<std::size_t>(participants));
    for (int i = 0; i < participants; ++i) {
      auto c = evaluate(Coalition{i});
      if (!c.has_value() || !std::isfinite(*c)) {
        throw ValidationError("standalone cost of participant " +
                              std::to_string(i) + " must be finite");
      }
      if (*c < 0.0 && !state_->warned_negative) {
        state_->warned_negative = true;
        std::cerr << "warning: negative standalone cost for participant "
                  << i << " (" << *c << ")\n";
      }
      state_->standalone[static_cast<std::size_t>(i)] = *c;
    }
  }

  int participants() const { return state_->n; }
  bool declared_monotone() const { return state_->monotone; }
  bool declared_subadditive() const { return state_->subadditive; }

  std::optional<double> evaluate(const Coalition& g) const {
    {
      std::shared_lock lock(state_->mutex);
      auto it = state_->memo.find(g);
      if (it != state_->memo.end()) return it->second;
    }
    std::optional<double> cost = state_->fn(g);
    if (cost.has_value() && !std::isfinite(*cost)) {
      cost = std::nullopt;  // fold non-finite results into the sentinel
    }
    if (cost.has_value() && state_->subadditive && g.size() >= 2 &&
        !state_->standalone.empty()) {
      double cap = 0.0;
      bool have_all = true;
      for (ParticipantId i : g.members()) {
        if (i >= state_->n) { have_all = false; break; }
        cap += state_->standalone[static_cast<std::size_t>(i)];
      }
      if (have_all && *cost > cap + 1e-6) {
        throw std::logic_error("oracle declared subadditive but C(" +
                               g.to_string() + ")=" + std::to_string(*cost) +
                               " exceeds standalone sum " + std::to_string(cap));
      }
    }
    {
      std::unique_lock lock(state_->mutex);
      state_->memo.emplace(g, cost);
    }
    return cost;
  }

  double standalone_cost(ParticipantId i) const {
    if (i < 0 || i >= state_->n) {
      throw NotAMember("participant id out of range: " + std::to_string(i));
    }
    return state_->standalone[static_cast<std::size_t>(i)];
  }

  double standalone_sum(const Coalition& g) const {
    double s = 0.0;
    for (ParticipantId i : g.members()) s += standalone_cost(i);
    return s;
  }

  double standalone_total() const {
    double s = 0.0;
    for (double c : state_->standalone) s += c;
    return s;
  }

 private:
  struct State {
    int n = 0;
    EvalFn fn;
    bool monotone = false;
    bool subadditive = false;
    bool warned_negative = false;
    std::vector<double> standalone;
    mutable std::shared_mutex mutex;
    mutable std::unordered_map<Coalition, std::optional<double>, CoalitionHash> memo;
  };
  std::shared_ptr<State> state_;
};

// One cost-sharing game: participants 0..n-1, coalition size cap k, and the
// cost oracle that prices every coalition.
struct Instance {
  int n = 0;
  int k = 1;
  CostOracle oracle;
};

enum class MechanismKind { EqualSplit, ProportionalSplit, EgalitarianNash };

inline constexpr MechanismKind kAllMechanisms[] = {
    MechanismKind::EqualSplit, MechanismKind::ProportionalSplit,
    MechanismKind::EgalitarianNash};

inline const char* to_string(MechanismKind m) {
  switch (m) {
    case MechanismKind::EqualSplit: return "equal_split";
    case MechanismKind::ProportionalSplit: return "proportional_split";
    case MechanismKind::EgalitarianNash: return "egalitarian_nash";
  }
  return "unknown";
}

inline std::optional<MechanismKind> mechanism_from_string(std::string_view s) {
  for (MechanismKind m : kAllMechanisms) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

// Payments of one coalition under one mechanism, aligned with the sorted
// member list. Budget balance: sum(payments) == C(G) up to kRelTol.
struct PaymentVector {
  Coalition coalition;
  std::vector<double> payments;

  double payment_of(ParticipantId i) const {
    const auto& m = coalition.members();
    auto it = std::lower_bound(m.begin(), m.end(), i);
    if (it == m.end() || *it != i) {
      throw NotAMember("participant " + std::to_string(i) + " not in " +
                       coalition.to_string());
    }
    return payments[static_cast<std::size_t>(it - m.begin())];
  }

  double total() const {
    double s = 0.0;
    for (double p : payments) s += p;
    return s;
  }
};

// Splits C(G) among the members of G.
//   equal:         p_i = C(G) / |G|
//   proportional:  p_i = C_i * C(G) / sum_j C_j
//   egalitarian:   p_i = C_i - (sum_j C_j - C(G)) / |G|   (equal surplus;
//                  coincides with the Nash bargaining solution and may be
//                  negative for members with small standalone cost)
inline PaymentVector payment(MechanismKind mechanism, const Coalition& g,
                             const CostOracle& oracle) {
  auto cost = oracle.evaluate(g);
  if (!cost.has_value()) {
    throw InfeasibleCoalition("coalition " + g.to_string() + " has unbounded cost");
  }
  const double c = *cost;
  const int size = g.size();
  PaymentVector out{g, std::vector<double>(static_cast<std::size_t>(size), 0.0)};
  switch (mechanism) {
    case MechanismKind::EqualSplit: {
      const double share = c / size;
      std::fill(out.payments.begin(), out.payments.end(), share);
      break;
    }
    case MechanismKind::ProportionalSplit: {
      const double sum = oracle.standalone_sum(g);
      if (!(sum > 0.0)) {
        throw DegenerateProportional(
            "proportional split undefined: standalone costs of " +
            g.to_string() + " sum to " + std::to_string(sum));
      }
      for (int idx = 0; idx < size; ++idx) {
        out.payments[static_cast<std::size_t>(idx)] =
            oracle.standalone_cost(g.members()[static_cast<std::size_t>(idx)]) * c / sum;
      }
      break;
    }
    case MechanismKind::EgalitarianNash: {
      const double surplus = (oracle.standalone_sum(g) - c) / size;
      for (int idx = 0; idx < size; ++idx) {
        out.payments[static_cast<std::size_t>(idx)] =
            oracle.standalone_cost(g.members()[static_cast<std::size_t>(idx)]) - surplus;
      }
      break;
    }
  }
  return out;
}

// Surplus of joining g relative to standing alone: u_i(G) = C_i - p_i(G).
// Singletons have utility exactly zero under every mechanism.
inline double utility(MechanismKind mechanism, const Coalition& g,
                      const CostOracle& oracle, ParticipantId i) {
  if (!g.contains(i)) {
    throw NotAMember("participant " + std::to_string(i) + " not in " +
                     g.to_string());
  }
  if (g.size() == 1) return 0.0;
  return oracle.standalone_cost(i) - payment(mechanism, g, oracle).payment_of(i);
}

// Truncated oracle: C~(G) = min(C(G), sum_{j in G} C_j). Standalone costs
// are unchanged and the truncation is idempotent. An infeasible C(G) is
// treated as +infinity, so the truncated cost is the standalone sum.
inline CostOracle truncate_cost(const CostOracle& oracle) {
  return CostOracle(
      oracle.participants(),
      [oracle](const Coalition& g) -> std::optional<double> {
        const double cap = oracle.standalone_sum(g);
        auto c = oracle.evaluate(g);
        if (!c.has_value()) return cap;
        return std::min(*c, cap);
      },
      oracle.declared_monotone(), /*subadditive=*/true);
}

// A mixed mechanism is a non-empty set of at most three distinct pure
// mechanisms; each coalition of a governed structure is billed by exactly
// one of them.
struct MixedMechanism {
  std::vector<MechanismKind> constituents;

  explicit MixedMechanism(std::vector<MechanismKind> kinds)
      : constituents(std::move(kinds)) {
    std::sort(constituents.begin(), constituents.end());
    constituents.erase(std::unique(constituents.begin(), constituents.end()),
                       constituents.end());
    if (constituents.empty() || constituents.size() > 3) {
      throw ValidationError("mixed mechanism needs 1..3 distinct constituents");
    }
  }

  std::string to_string() const {
    std::string out = "mixed(";
    for (std::size_t i = 0; i < constituents.size(); ++i) {
      if (i) out += "+";
      out += coalform::to_string(constituents[i]);
    }
    return out + ")";
  }
};

// Assignment of one constituent mechanism to every coalition of a governed
// structure.
struct MixedAssignment {
  MixedMechanism mechanism;
  std::map<Coalition, MechanismKind> assignment;

  MechanismKind mechanism_for(const Coalition& g) const {
    auto it = assignment.find(g);
    if (it == assignment.end()) {
      throw ValidationError("no mechanism assigned to coalition " + g.to_string());
    }
    return it->second;
  }

  // Every block of the structure must carry exactly one constituent.
  void validate_for(const CoalitionStructure& structure) const {
    for (const auto& g : structure.coalitions()) {
      MechanismKind m = mechanism_for(g);
      if (std::find(mechanism.constituents.begin(), mechanism.constituents.end(),
                    m) == mechanism.constituents.end()) {
        throw ValidationError("assigned mechanism is not a constituent for " +
                              g.to_string());
      }
    }
  }
};

}  // namespace coalform
