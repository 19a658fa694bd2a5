#pragma once

#include <map>
#include <vector>

#include "opfbound/barrier.hpp"
#include "opfbound/cones.hpp"
#include "opfbound/core.hpp"
#include "opfbound/lp.hpp"

namespace testutil {

using namespace opfbound;

// Evaluates one row at a point; returns lhs - rhs signed so that >= rows
// want nonnegative values and <= rows nonpositive ones.
inline double row_residual(const RowDraft& r, const std::map<ColumnId, double>& vals) {
  double lhs = 0.0;
  for (const auto& [c, v] : r.coef) lhs += v * vals.at(c);
  return lhs - r.rhs;
}

inline bool row_holds(const RowDraft& r, const std::map<ColumnId, double>& vals, double tol) {
  double res = row_residual(r, vals);
  switch (r.rel) {
    case Relation::LessEqual: return res <= tol;
    case Relation::GreaterEqual: return res >= -tol;
    case Relation::Equal: return std::abs(res) <= tol;
  }
  return false;
}

inline bool block_holds(const ConstraintBlock& blk, const std::map<ColumnId, double>& vals,
                        double tol) {
  for (const auto& r : blk.rows)
    if (!row_holds(r, vals, tol)) return false;
  return true;
}

// Builds an LpProblem whose columns 0..n-1 carry the given bounds and
// appends the blocks; anchors can be pinned by fixing bounds.
struct MiniLp {
  lp::LpProblem p;
  ColumnAllocator alloc;

  ColumnId add(VarBounds b) {
    ColumnId c = alloc.allocate();
    ColumnId got = p.add_column(b);
    (void)got;
    return c;
  }
  ColumnId fixed(double v) { return add({v, v}); }
  void apply(const ConstraintBlock& blk) { p.apply(blk); }
};

// min or max of one column over the block's feasible set.
inline double extremize(MiniLp& m, ColumnId target, bool maximize, double tol = 1e-9) {
  lp::LpProblem q = m.p;
  q.set_objective(target, maximize ? -1.0 : 1.0);
  lp::SolverOptions opt;
  opt.tol.feasibility = tol;
  opt.tol.optimality = tol;
  auto sol = lp::solve(q, opt);
  REQUIRE_MESSAGE(sol.status == lp::SolveStatus::Optimal,
                  "extremize: solver returned ", lp::to_string(sol.status));
  return maximize ? -sol.objective : sol.objective;
}

// Phase-I feasibility of a set of blocks with anchors pinned: minimizes a
// single relaxation slack; the result is <= 0 (up to tolerance) iff the
// pinned system is feasible. Always a bounded, feasible LP.
inline double phase1_slack(const lp::LpProblem& pinned, double tol = 1e-9) {
  lp::LpProblem q;
  for (int j = 0; j < pinned.num_cols(); ++j)
    q.add_column({pinned.lower_bound(j), pinned.upper_bound(j)});
  ColumnId t = q.add_column({-1.0, kInf}, 1.0);
  for (const auto& row : pinned.rows()) {
    RowDraft r;
    r.rel = row.rel == Relation::Equal ? Relation::LessEqual : row.rel;
    r.rhs = row.rhs;
    r.coef.assign(row.coef.begin(), row.coef.end());
    if (row.rel == Relation::Equal) {
      RowDraft r2 = r;
      r2.rel = Relation::GreaterEqual;
      r2.coef.emplace_back(t, 1.0);
      q.add_row(r2);
      r.coef.emplace_back(t, -1.0);
      q.add_row(r);
    } else if (row.rel == Relation::LessEqual) {
      r.coef.emplace_back(t, -1.0);
      q.add_row(r);
    } else {
      r.coef.emplace_back(t, 1.0);
      q.add_row(r);
    }
  }
  lp::SolverOptions opt;
  opt.tol.feasibility = tol;
  opt.tol.optimality = tol;
  auto sol = lp::solve(q, opt);
  REQUIRE(sol.status == lp::SolveStatus::Optimal);
  return sol.objective;
}

// Minimal-fold walk over one soc3 stage chain: assigns each fold column
// the smallest value its two stage rows admit, then reports the radius the
// closing row pair requires. Works directly on the emitted rows, so it is
// independent of how the block was derived.
struct WalkResult {
  std::map<ColumnId, double> vals;  // anchors plus fold witnesses
  double required_radius = 0.0;     // feasible iff r >= this (or <= 0 for constant r)
};

inline WalkResult min_fold_walk(const std::vector<RowDraft>& rows, size_t first, size_t stages,
                                const std::vector<NewColumn>& cols, size_t fold_first,
                                ColumnId r_col, std::map<ColumnId, double> vals) {
  WalkResult w;
  w.vals = std::move(vals);
  for (size_t i = 0; i + 1 < stages; ++i) {
    ColumnId yc = cols[fold_first + i].id;
    double lb = 0.0;
    for (size_t t = 0; t < 2; ++t) {
      const RowDraft& row = rows[first + 2 * i + t];
      double rest = 0.0, cy = 0.0;
      for (const auto& [c, v] : row.coef) {
        if (c == yc)
          cy += v;
        else
          rest += v * w.vals.at(c);
      }
      REQUIRE(cy > 0.0);
      lb = std::max(lb, (row.rhs - rest) / cy);
    }
    w.vals[yc] = lb;
  }
  double req = -kInf;
  for (size_t t = 0; t < 2; ++t) {
    const RowDraft& row = rows[first + 2 * (stages - 1) + t];
    double rest = 0.0, cr = 0.0;
    for (const auto& [c, v] : row.coef) {
      if (c == r_col)
        cr += v;
      else
        rest += v * w.vals.at(c);
    }
    if (r_col < 0) {
      req = std::max(req, row.rhs - rest);
    } else {
      REQUIRE(cr > 0.0);
      req = std::max(req, (row.rhs - rest) / cr);
    }
  }
  w.required_radius = req;
  return w;
}

// Radius demanded by a standalone soc3 block at the given anchor values.
inline double soc3_required_radius(const cones::ConeBlock& blk, ColumnId r_col,
                                   const std::map<ColumnId, double>& anchors) {
  return min_fold_walk(blk.rows, 0, blk.rows.size() / 2, blk.new_columns, 0, r_col, anchors)
      .required_radius;
}

// Feasibility of a soc4_rotated block by composing the two chain walks
// through the coupling equalities.
inline bool soc4_feasible(const cones::ConeBlock& blk, int k, double r1, double r2, double x0v,
                          double y0v, ColumnId x0, ColumnId y0) {
  if (r1 < 0 || r2 < 0) return false;
  ColumnId u = blk.new_columns[0].id;
  ColumnId xp0 = blk.new_columns[2].id;
  ColumnId yp0 = blk.new_columns[3].id;
  double rp_v = 0.5 * (r1 + r2);
  double yp0_v = 0.5 * (r1 - r2);
  size_t inner_first = 3;  // after the three coupling equalities
  auto inner = min_fold_walk(blk.rows, inner_first, k, blk.new_columns, 4, u,
                             {{x0, x0v}, {y0, y0v}});
  double u_min = std::max(inner.required_radius, 0.0);
  auto outer = min_fold_walk(blk.rows, inner_first + 2 * k, k, blk.new_columns, 4 + (k - 1),
                             blk.new_columns[1].id, {{xp0, u_min}, {yp0, yp0_v}});
  return outer.required_radius <= rp_v * (1 + 1e-15) + 1e-15;
}

}  // namespace testutil
