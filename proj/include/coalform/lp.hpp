#pragma once

// Small dense linear-program solver: minimize c.x subject to equality and
// upper-bound rows over x >= 0, via a two-phase primal simplex on a dense
// tableau. Sized for the dispatch problems here (a few hundred variables);
// not a general-purpose LP code.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "coalform/core.hpp"

namespace coalform::lp {

enum class Status { Optimal, Infeasible, Unbounded };

struct Solution {
  Status status = Status::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
};

class DenseLp {
 public:
  explicit DenseLp(int num_vars) : num_vars_(num_vars), objective_(static_cast<std::size_t>(num_vars), 0.0) {}

  int num_vars() const { return num_vars_; }

  void set_objective(int var, double coeff) {
    objective_[static_cast<std::size_t>(var)] = coeff;
  }
  void add_objective(int var, double coeff) {
    objective_[static_cast<std::size_t>(var)] += coeff;
  }

  // terms.x == rhs
  void add_equality(const std::vector<std::pair<int, double>>& terms, double rhs) {
    rows_.push_back(Row{terms, rhs, RowType::Equal});
  }

  // terms.x <= rhs
  void add_upper_bound(const std::vector<std::pair<int, double>>& terms, double rhs) {
    rows_.push_back(Row{terms, rhs, RowType::LessEqual});
  }

  Solution solve() const {
    const int m = static_cast<int>(rows_.size());
    int slack_count = 0;
    for (const auto& row : rows_) {
      if (row.type == RowType::LessEqual) ++slack_count;
    }
    // Column layout: structural vars, slacks, artificials (added on demand).
    const int slack_base = num_vars_;
    int total = num_vars_ + slack_count;

    std::vector<std::vector<double>> a(static_cast<std::size_t>(m));
    std::vector<double> rhs(static_cast<std::size_t>(m), 0.0);
    {
      int next_slack = slack_base;
      for (int r = 0; r < m; ++r) {
        auto& dense = a[static_cast<std::size_t>(r)];
        dense.assign(static_cast<std::size_t>(total), 0.0);
        for (const auto& [var, coeff] : rows_[static_cast<std::size_t>(r)].terms) {
          dense[static_cast<std::size_t>(var)] += coeff;
        }
        rhs[static_cast<std::size_t>(r)] = rows_[static_cast<std::size_t>(r)].rhs;
        if (rows_[static_cast<std::size_t>(r)].type == RowType::LessEqual) {
          dense[static_cast<std::size_t>(next_slack++)] = 1.0;
        }
      }
    }
    // Normalize to rhs >= 0.
    for (int r = 0; r < m; ++r) {
      if (rhs[static_cast<std::size_t>(r)] < 0.0) {
        rhs[static_cast<std::size_t>(r)] = -rhs[static_cast<std::size_t>(r)];
        for (auto& v : a[static_cast<std::size_t>(r)]) v = -v;
      }
    }
    // Choose an initial basis: a slack with +1 coefficient if the row has
    // one, otherwise a fresh artificial column.
    std::vector<int> basis(static_cast<std::size_t>(m), -1);
    std::vector<int> artificial_rows;
    for (int r = 0; r < m; ++r) {
      int candidate = -1;
      for (int c = slack_base; c < total; ++c) {
        if (a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] == 1.0) {
          bool only_here = true;
          for (int rr = 0; rr < m && only_here; ++rr) {
            if (rr != r && a[static_cast<std::size_t>(rr)][static_cast<std::size_t>(c)] != 0.0) {
              only_here = false;
            }
          }
          if (only_here) { candidate = c; break; }
        }
      }
      if (candidate >= 0) {
        basis[static_cast<std::size_t>(r)] = candidate;
      } else {
        artificial_rows.push_back(r);
      }
    }
    const int artificial_base = total;
    total += static_cast<int>(artificial_rows.size());
    for (int r = 0; r < m; ++r) {
      a[static_cast<std::size_t>(r)].resize(static_cast<std::size_t>(total), 0.0);
    }
    for (std::size_t idx = 0; idx < artificial_rows.size(); ++idx) {
      const int r = artificial_rows[idx];
      const int col = artificial_base + static_cast<int>(idx);
      a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] = 1.0;
      basis[static_cast<std::size_t>(r)] = col;
    }

    Tableau t;
    t.m = m;
    t.total = total;
    t.a = std::move(a);
    t.rhs = std::move(rhs);
    t.basis = std::move(basis);
    t.allowed_max = total;

    Solution out;
    if (!artificial_rows.empty()) {
      // Phase 1: minimize the sum of artificials.
      std::vector<double> cost(static_cast<std::size_t>(total), 0.0);
      for (int c = artificial_base; c < total; ++c) cost[static_cast<std::size_t>(c)] = 1.0;
      double phase1 = t.run(cost);
      if (phase1 > kFeasTol) {
        out.status = Status::Infeasible;
        return out;
      }
      // Pivot any artificial still in the basis out on a structural column.
      for (int r = 0; r < m; ++r) {
        if (t.basis[static_cast<std::size_t>(r)] < artificial_base) continue;
        int col = -1;
        for (int c = 0; c < artificial_base; ++c) {
          if (std::fabs(t.a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]) > kPivotTol) {
            col = c;
            break;
          }
        }
        if (col >= 0) t.pivot(r, col);
        // A fully zero row is redundant; its artificial stays basic at zero.
      }
      t.allowed_max = artificial_base;  // artificials may never re-enter
    }

    // Phase 2: the real objective.
    std::vector<double> cost(static_cast<std::size_t>(total), 0.0);
    for (int c = 0; c < num_vars_; ++c) cost[static_cast<std::size_t>(c)] = objective_[static_cast<std::size_t>(c)];
    t.run(cost);
    if (t.unbounded) {
      out.status = Status::Unbounded;
      return out;
    }
    out.status = Status::Optimal;
    out.x.assign(static_cast<std::size_t>(num_vars_), 0.0);
    for (int r = 0; r < m; ++r) {
      const int b = t.basis[static_cast<std::size_t>(r)];
      if (b < num_vars_) out.x[static_cast<std::size_t>(b)] = t.rhs[static_cast<std::size_t>(r)];
    }
    // Recompute the objective from x for a cleaner value than the
    // accumulated tableau cost.
    out.objective = 0.0;
    for (int c = 0; c < num_vars_; ++c) {
      out.objective += objective_[static_cast<std::size_t>(c)] * out.x[static_cast<std::size_t>(c)];
    }
    return out;
  }

 private:
  enum class RowType { Equal, LessEqual };
  struct Row {
    std::vector<std::pair<int, double>> terms;
    double rhs;
    RowType type;
  };

  static constexpr double kPivotTol = 1e-9;
  static constexpr double kFeasTol = 1e-7;

  struct Tableau {
    int m = 0;
    int total = 0;
    int allowed_max = 0;  // columns >= this may not enter the basis
    bool unbounded = false;
    std::vector<std::vector<double>> a;
    std::vector<double> rhs;
    std::vector<int> basis;
    std::vector<double> reduced;  // reduced costs

    void pivot(int row, int col) {
      auto& prow = a[static_cast<std::size_t>(row)];
      const double p = prow[static_cast<std::size_t>(col)];
      for (auto& v : prow) v /= p;
      rhs[static_cast<std::size_t>(row)] /= p;
      for (int r = 0; r < m; ++r) {
        if (r == row) continue;
        auto& arow = a[static_cast<std::size_t>(r)];
        const double f = arow[static_cast<std::size_t>(col)];
        if (f == 0.0) continue;
        for (int c = 0; c < total; ++c) {
          arow[static_cast<std::size_t>(c)] -= f * prow[static_cast<std::size_t>(c)];
        }
        rhs[static_cast<std::size_t>(r)] -= f * rhs[static_cast<std::size_t>(row)];
        if (rhs[static_cast<std::size_t>(r)] < 0.0 && rhs[static_cast<std::size_t>(r)] > -1e-12) {
          rhs[static_cast<std::size_t>(r)] = 0.0;
        }
      }
      if (!reduced.empty()) {
        const double f = reduced[static_cast<std::size_t>(col)];
        if (f != 0.0) {
          for (int c = 0; c < total; ++c) {
            reduced[static_cast<std::size_t>(c)] -= f * prow[static_cast<std::size_t>(c)];
          }
        }
      }
      basis[static_cast<std::size_t>(row)] = col;
    }

    // Runs the simplex to optimality for the given cost vector; returns the
    // objective value of the final basic solution.
    double run(const std::vector<double>& cost) {
      unbounded = false;
      reduced = cost;
      for (int r = 0; r < m; ++r) {
        const int b = basis[static_cast<std::size_t>(r)];
        const double cb = cost[static_cast<std::size_t>(b)];
        if (cb == 0.0) continue;
        const auto& arow = a[static_cast<std::size_t>(r)];
        for (int c = 0; c < total; ++c) {
          reduced[static_cast<std::size_t>(c)] -= cb * arow[static_cast<std::size_t>(c)];
        }
      }

      const std::uint64_t bland_after = 20ull * static_cast<std::uint64_t>(m + total) + 200;
      const std::uint64_t hard_limit = 200ull * static_cast<std::uint64_t>(m + total) + 20000;
      std::uint64_t iterations = 0;
      while (true) {
        if (++iterations > hard_limit) {
          throw SolverFailure("simplex iteration limit reached (" +
                              std::to_string(hard_limit) + ")");
        }
        const bool bland = iterations > bland_after;
        int enter = -1;
        double best = -kPivotTol;
        for (int c = 0; c < allowed_max; ++c) {
          const double rc = reduced[static_cast<std::size_t>(c)];
          if (rc < -kPivotTol) {
            if (bland) { enter = c; break; }
            if (rc < best) { best = rc; enter = c; }
          }
        }
        if (enter < 0) break;  // optimal
        int leave = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int r = 0; r < m; ++r) {
          const double coef = a[static_cast<std::size_t>(r)][static_cast<std::size_t>(enter)];
          if (coef > kPivotTol) {
            const double ratio = rhs[static_cast<std::size_t>(r)] / coef;
            if (ratio < best_ratio - 1e-12 ||
                (ratio < best_ratio + 1e-12 && leave >= 0 &&
                 basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leave)])) {
              best_ratio = ratio;
              leave = r;
            }
          }
        }
        if (leave < 0) {
          unbounded = true;
          return -std::numeric_limits<double>::infinity();
        }
        pivot(leave, enter);
      }
      // Objective of the final basic solution, recomputed from the basis.
      double value = 0.0;
      for (int r = 0; r < m; ++r) {
        value += cost[static_cast<std::size_t>(basis[static_cast<std::size_t>(r)])] *
                 rhs[static_cast<std::size_t>(r)];
      }
      return value;
    }
  };

  int num_vars_;
  std::vector<double> objective_;
  std::vector<Row> rows_;
};

}  // namespace coalform::lp
