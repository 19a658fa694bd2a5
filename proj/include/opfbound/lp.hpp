#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "opfbound/core.hpp"

namespace opfbound::lp {

struct LpRow {
  std::vector<std::pair<ColumnId, double>> coef;  // sorted by column, deduped
  Relation rel = Relation::Equal;
  double rhs = 0.0;
};

// Sparse linear program: per-column bounds (possibly infinite), rows with a
// relation and rhs, linear objective plus constant. Always minimization.
class LpProblem {
 public:
  int num_cols() const { return static_cast<int>(lo_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }

  // Crossing bounds are representable; the solver reports them Infeasible.
  ColumnId add_column(VarBounds b, double cost = 0.0) {
    lo_.push_back(b.lo);
    hi_.push_back(b.hi);
    obj_.push_back(cost);
    return static_cast<ColumnId>(lo_.size()) - 1;
  }

  void set_bounds(ColumnId j, VarBounds b) {
    lo_.at(j) = b.lo;
    hi_.at(j) = b.hi;
  }
  void set_objective(ColumnId j, double c) { obj_.at(j) = c; }
  void add_objective(ColumnId j, double c) { obj_.at(j) += c; }
  void add_objective_constant(double c) { obj_constant_ += c; }

  // Duplicate (row, column) coefficients are summed at ingest.
  void add_row(const RowDraft& draft) {
    if (draft.coef.empty()) throw std::invalid_argument("LpProblem: empty row");
    LpRow row;
    row.rel = draft.rel;
    row.rhs = draft.rhs;
    std::map<ColumnId, double> acc;
    for (const auto& [c, v] : draft.coef) {
      if (c < 0 || c >= num_cols())
        throw std::out_of_range("LpProblem: row references column " + std::to_string(c));
      acc[c] += v;
    }
    row.coef.assign(acc.begin(), acc.end());
    rows_.push_back(std::move(row));
  }

  // Appends a generated block. The block's new columns must continue the
  // problem's column sequence (builders keep one allocator in sync).
  void apply(const ConstraintBlock& blk) {
    for (const auto& nc : blk.new_columns) {
      if (nc.id != num_cols())
        throw std::logic_error("block column " + std::to_string(nc.id) +
                               " does not continue the column sequence");
      add_column(nc.bounds);
    }
    for (const auto& r : blk.rows) add_row(r);
  }

  double lower_bound(ColumnId j) const { return lo_.at(j); }
  double upper_bound(ColumnId j) const { return hi_.at(j); }
  double objective_coef(ColumnId j) const { return obj_.at(j); }
  double objective_constant() const { return obj_constant_; }
  const std::vector<LpRow>& rows() const { return rows_; }
  const std::vector<double>& objective() const { return obj_; }

 private:
  std::vector<double> lo_, hi_, obj_;
  double obj_constant_ = 0.0;
  std::vector<LpRow> rows_;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit, NumericalFailure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::IterationLimit: return "IterationLimit";
    case SolveStatus::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

struct Tolerances {
  double feasibility = 1e-8;
  double optimality = 1e-8;
};

// Solver result. An Optimal solution cannot be constructed with residuals
// beyond the tolerances it was solved with.
struct Solution {
  SolveStatus status = SolveStatus::NumericalFailure;
  double objective = 0.0;
  std::vector<double> primal;
  std::vector<double> dual;
  int iterations = 0;
  double wall_seconds = 0.0;
  double primal_residual = 0.0;  // ||Ax-b||inf / (1 + ||b||inf), plus bound violations
  double dual_residual = 0.0;
  double relative_gap = 0.0;

  Solution() = default;
  Solution(SolveStatus st, double obj, std::vector<double> x, std::vector<double> y, int iters,
           double wall, double rp, double rd, double gap, const Tolerances& tol)
      : status(st),
        objective(obj),
        primal(std::move(x)),
        dual(std::move(y)),
        iterations(iters),
        wall_seconds(wall),
        primal_residual(rp),
        dual_residual(rd),
        relative_gap(gap) {
    if (status == SolveStatus::Optimal) {
      if (!(primal_residual <= tol.feasibility) || !(dual_residual <= tol.feasibility))
        throw std::logic_error("Optimal solution violates the feasibility certificate");
      if (!(relative_gap <= tol.optimality))
        throw std::logic_error("Optimal solution violates the duality-gap certificate");
    }
  }
};

// --- standard form --------------------------------------------------------

enum class ColKind { NonNeg, Boxed, Free };

// Equality-constrained canonical form
//   min c'x + c0,  A x = b,  x_j >= 0 | x_j in [0, u_j] | x_j free,
// with a back-map that restores original column values exactly.
struct StandardForm {
  int n = 0;  // columns
  int m = 0;  // rows (all equalities)
  // column-major sparse A
  std::vector<int> col_ptr;
  std::vector<int> row_ind;
  std::vector<double> val;
  std::vector<double> b, c;
  double c0 = 0.0;
  std::vector<ColKind> kind;
  std::vector<double> upper;  // valid where kind == Boxed

  // original column j: x_orig = scale * x_std[col] + shift, or fixed value
  struct ColMap {
    int col = -1;  // -1 when fixed
    double scale = 1.0;
    double shift = 0.0;
  };
  std::vector<ColMap> col_map;
  std::vector<double> row_scale;  // +-1 applied to original row i
  std::vector<int> slack_col;     // standard column of row i's slack, -1 if none
  int num_orig_rows = 0;

  std::vector<double> to_original_point(const std::vector<double>& x_std) const {
    std::vector<double> x(col_map.size());
    for (size_t j = 0; j < col_map.size(); ++j) {
      const auto& cm = col_map[j];
      x[j] = cm.col < 0 ? cm.shift : cm.scale * x_std[cm.col] + cm.shift;
    }
    return x;
  }

  // Embeds an original-space point (structural columns and row slacks).
  std::vector<double> to_standard_point(const LpProblem& p,
                                        const std::vector<double>& x_orig) const {
    std::vector<double> xs(n, 0.0);
    for (size_t j = 0; j < col_map.size(); ++j) {
      const auto& cm = col_map[j];
      if (cm.col >= 0) xs[cm.col] = (x_orig[j] - cm.shift) / cm.scale;
    }
    const auto& rows = p.rows();
    for (int i = 0; i < num_orig_rows; ++i) {
      if (slack_col[i] < 0) continue;
      double act = 0.0;
      for (const auto& [cc, vv] : rows[i].coef) act += vv * x_orig[cc];
      xs[slack_col[i]] = row_scale[i] * (rows[i].rhs - act);
    }
    return xs;
  }
};

struct BoundsInfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline StandardForm to_standard_form(const LpProblem& p) {
  StandardForm sf;
  const int n_orig = p.num_cols();
  sf.col_map.resize(n_orig);
  sf.num_orig_rows = p.num_rows();

  std::vector<std::vector<std::pair<int, double>>> cols;  // per std col: (row, val)
  auto new_col = [&](ColKind k, double u, double cost) {
    cols.emplace_back();
    sf.kind.push_back(k);
    sf.upper.push_back(u);
    sf.c.push_back(cost);
    return static_cast<int>(cols.size()) - 1;
  };

  sf.c0 = p.objective_constant();
  for (int j = 0; j < n_orig; ++j) {
    double lo = p.lower_bound(j), hi = p.upper_bound(j);
    if (lo > hi) throw BoundsInfeasibleError("column " + std::to_string(j) + " has lo > hi");
    auto& cm = sf.col_map[j];
    if (lo == hi) {
      cm.col = -1;
      cm.shift = lo;
      sf.c0 += p.objective_coef(j) * lo;
    } else if (std::isfinite(lo)) {
      cm.col = new_col(std::isfinite(hi) ? ColKind::Boxed : ColKind::NonNeg,
                       std::isfinite(hi) ? hi - lo : kInf, p.objective_coef(j));
      cm.scale = 1.0;
      cm.shift = lo;
      sf.c0 += p.objective_coef(j) * lo;
    } else if (std::isfinite(hi)) {
      cm.col = new_col(ColKind::NonNeg, kInf, -p.objective_coef(j));
      cm.scale = -1.0;
      cm.shift = hi;
      sf.c0 += p.objective_coef(j) * hi;
    } else {
      cm.col = new_col(ColKind::Free, kInf, p.objective_coef(j));
    }
  }

  const auto& rows = p.rows();
  sf.row_scale.assign(rows.size(), 1.0);
  sf.slack_col.assign(rows.size(), -1);
  sf.b.reserve(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    const LpRow& row = rows[i];
    double sgn = row.rel == Relation::GreaterEqual ? -1.0 : 1.0;
    sf.row_scale[i] = sgn;
    double rhs = sgn * row.rhs;
    int nz = 0;
    for (const auto& [j, v] : row.coef) {
      if (v == 0.0) continue;
      ++nz;
      const auto& cm = sf.col_map[j];
      if (cm.col < 0) {
        rhs -= sgn * v * cm.shift;
      } else {
        rhs -= sgn * v * cm.shift;
        cols[cm.col].emplace_back(static_cast<int>(i), sgn * v * cm.scale);
      }
    }
    if (nz == 0)
      throw std::invalid_argument("row " + std::to_string(i) +
                                  " has all-zero coefficients after dedup");
    if (row.rel != Relation::Equal) {
      int s = new_col(ColKind::NonNeg, kInf, 0.0);
      cols[s].emplace_back(static_cast<int>(i), 1.0);
      sf.slack_col[i] = s;
    }
    sf.b.push_back(rhs);
  }

  sf.n = static_cast<int>(cols.size());
  sf.m = static_cast<int>(rows.size());
  sf.col_ptr.assign(sf.n + 1, 0);
  for (int j = 0; j < sf.n; ++j) sf.col_ptr[j + 1] = sf.col_ptr[j] + static_cast<int>(cols[j].size());
  sf.row_ind.resize(sf.col_ptr[sf.n]);
  sf.val.resize(sf.col_ptr[sf.n]);
  for (int j = 0; j < sf.n; ++j) {
    int at = sf.col_ptr[j];
    for (const auto& [r, v] : cols[j]) {
      sf.row_ind[at] = r;
      sf.val[at] = v;
      ++at;
    }
  }
  return sf;
}

// --- text export -----------------------------------------------------------

// Plain-text LP dump (17 significant digits) for cross-checking with third
// party solvers. Format:
//   opfbound-lp 1
//   minimize
//   constant <c0>
//   columns <n>
//   c <idx> <lo> <hi> <obj>     (one per column)
//   rows <m>
//   r <rel> <rhs> <nnz> [<col> <coef>]...
//   end
inline std::string export_lp_text(const LpProblem& p) {
  auto num = [](double v) {
    char buf[40];
    if (v == kInf) return std::string("inf");
    if (v == -kInf) return std::string("-inf");
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::string out = "opfbound-lp 1\nminimize\nconstant " + num(p.objective_constant()) + "\n";
  out += "columns " + std::to_string(p.num_cols()) + "\n";
  for (int j = 0; j < p.num_cols(); ++j)
    out += "c " + std::to_string(j) + " " + num(p.lower_bound(j)) + " " + num(p.upper_bound(j)) +
           " " + num(p.objective_coef(j)) + "\n";
  out += "rows " + std::to_string(p.num_rows()) + "\n";
  for (const auto& row : p.rows()) {
    const char* rel = row.rel == Relation::LessEqual ? "<="
                      : row.rel == Relation::Equal   ? "="
                                                     : ">=";
    out += "r ";
    out += rel;
    out += " " + num(row.rhs) + " " + std::to_string(row.coef.size());
    for (const auto& [c, v] : row.coef) out += " " + std::to_string(c) + " " + num(v);
    out += "\n";
  }
  out += "end\n";
  return out;
}

// Hook for validating objectives against an external LP solver: submit the
// text export, read back objective and primal values. Implementations live
// outside the core build.
struct ExternalSolverResult {
  double objective = 0.0;
  std::vector<double> primal;
};

class ExternalSolverAdapter {
 public:
  virtual ~ExternalSolverAdapter() = default;
  virtual std::optional<ExternalSolverResult> solve_lp_text(const std::string& lp_text) = 0;
};

inline std::optional<ExternalSolverResult> cross_check(const LpProblem& p,
                                                       ExternalSolverAdapter& adapter) {
  return adapter.solve_lp_text(export_lp_text(p));
}

}  // namespace opfbound::lp
