#pragma once

// Set-partition enumeration with a block-size cap. Partitions are encoded
// as restricted growth strings: a[0] = 0 and a[p] <= 1 + max(a[0..p-1]).
// The visit order is descending lexicographic on the growth string, so the
// all-singletons structure (0,1,2,...) is canonical-first and the coarsest
// structures come last.

#include <cstdint>
#include <functional>
#include <vector>

#include "coalform/core.hpp"

namespace coalform {

// Number of partitions of an n-set with all blocks of size <= k.
inline std::uint64_t count_structures(int n, int k) {
  if (n < 1 || k < 1) {
    throw ValidationError("count_structures requires n >= 1 and k >= 1");
  }
  if (n > 24) {
    throw InstanceTooLarge("structure counting capped at n <= 24, got n=" +
                           std::to_string(n));
  }
  // f(m) = sum_{s=1..min(k,m)} C(m-1, s-1) * f(m-s): the block containing
  // the highest element has size s.
  std::vector<std::uint64_t> f(static_cast<std::size_t>(n) + 1, 0);
  std::vector<std::vector<std::uint64_t>> choose(
      static_cast<std::size_t>(n) + 1,
      std::vector<std::uint64_t>(static_cast<std::size_t>(n) + 1, 0));
  for (int i = 0; i <= n; ++i) {
    choose[static_cast<std::size_t>(i)][0] = 1;
    for (int j = 1; j <= i; ++j) {
      choose[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          choose[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)] +
          choose[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j)];
    }
  }
  f[0] = 1;
  for (int m = 1; m <= n; ++m) {
    std::uint64_t total = 0;
    for (int s = 1; s <= std::min(k, m); ++s) {
      total += choose[static_cast<std::size_t>(m - 1)][static_cast<std::size_t>(s - 1)] *
               f[static_cast<std::size_t>(m - s)];
    }
    f[static_cast<std::size_t>(m)] = total;
  }
  return f[static_cast<std::size_t>(n)];
}

namespace detail {

struct StructureEnumerator {
  int n;
  int k;
  const std::function<bool(const CoalitionStructure&)>* visit;
  std::vector<int> label;       // growth string under construction
  std::vector<int> block_size;  // size per label
  bool stopped = false;

  bool emit() {
    int blocks = 0;
    for (int p = 0; p < n; ++p) blocks = std::max(blocks, label[static_cast<std::size_t>(p)] + 1);
    std::vector<std::vector<ParticipantId>> groups(static_cast<std::size_t>(blocks));
    for (int p = 0; p < n; ++p) {
      groups[static_cast<std::size_t>(label[static_cast<std::size_t>(p)])].push_back(p);
    }
    std::vector<Coalition> out;
    out.reserve(groups.size());
    for (auto& g : groups) out.push_back(Coalition(std::move(g)));
    return (*visit)(CoalitionStructure(std::move(out)));
  }

  void recurse(int pos, int used) {
    if (stopped) return;
    if (pos == n) {
      if (!emit()) stopped = true;
      return;
    }
    // Try larger labels first so full strings appear in descending
    // lexicographic order (singletons first).
    for (int lab = std::min(used, pos); lab >= 0 && !stopped; --lab) {
      if (lab < used && block_size[static_cast<std::size_t>(lab)] >= k) continue;
      label[static_cast<std::size_t>(pos)] = lab;
      if (lab == used) {
        block_size.push_back(1);
        recurse(pos + 1, used + 1);
        block_size.pop_back();
      } else {
        ++block_size[static_cast<std::size_t>(lab)];
        recurse(pos + 1, used);
        --block_size[static_cast<std::size_t>(lab)];
      }
    }
  }
};

}  // namespace detail

// Visits every partition of {0..n-1} with block sizes <= k exactly once in
// the canonical order described above. Returning false from the callback
// stops early. Throws InstanceTooLarge when the structure count exceeds
// the budget.
inline void for_each_structure(int n, int k,
                               const std::function<bool(const CoalitionStructure&)>& visit,
                               std::uint64_t budget = kDefaultBudget) {
  const std::uint64_t total = count_structures(n, k);
  if (total > budget) {
    throw InstanceTooLarge("n=" + std::to_string(n) + ", k=" + std::to_string(k) +
                           " has " + std::to_string(total) +
                           " structures, over budget " + std::to_string(budget));
  }
  detail::StructureEnumerator en;
  en.n = n;
  en.k = k;
  en.visit = &visit;
  en.label.assign(static_cast<std::size_t>(n), 0);
  en.recurse(0, 0);
}

inline std::vector<CoalitionStructure> enumerate_structures(
    int n, int k, std::uint64_t budget = kDefaultBudget) {
  std::vector<CoalitionStructure> out;
  for_each_structure(n, k, [&out](const CoalitionStructure& s) {
    out.push_back(s);
    return true;
  }, budget);
  return out;
}

// All coalitions over {0..n-1} of size 1..k, ordered by size then
// lexicographically on the sorted member list.
inline std::vector<Coalition> enumerate_coalitions(int n, int k) {
  if (n < 1 || k < 1) {
    throw ValidationError("enumerate_coalitions requires n >= 1 and k >= 1");
  }
  std::vector<Coalition> out;
  std::vector<ParticipantId> comb;
  for (int s = 1; s <= std::min(k, n); ++s) {
    comb.assign(static_cast<std::size_t>(s), 0);
    for (int i = 0; i < s; ++i) comb[static_cast<std::size_t>(i)] = i;
    while (true) {
      out.push_back(Coalition(comb));
      int pos = s - 1;
      while (pos >= 0 && comb[static_cast<std::size_t>(pos)] == n - s + pos) --pos;
      if (pos < 0) break;
      ++comb[static_cast<std::size_t>(pos)];
      for (int q = pos + 1; q < s; ++q) {
        comb[static_cast<std::size_t>(q)] = comb[static_cast<std::size_t>(q - 1)] + 1;
      }
    }
  }
  return out;
}

}  // namespace coalform
