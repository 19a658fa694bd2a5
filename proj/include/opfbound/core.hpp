#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace opfbound {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// LP column index. Columns are allocated sequentially by a ColumnAllocator
// and owned by exactly one semantic entry or one generated block.
using ColumnId = int;

struct VarBounds {
  double lo = -kInf;
  double hi = kInf;

  bool finite() const { return std::isfinite(lo) && std::isfinite(hi); }
  bool valid() const { return lo <= hi; }
};

enum class Relation { LessEqual, Equal, GreaterEqual };

// Affine expression over LP columns. Generators accept anchors as Affine so
// that a cone radius can be a constant (thermal limit) and an envelope
// argument can be a difference of two columns (theta_i - theta_j).
struct Affine {
  std::vector<std::pair<ColumnId, double>> terms;
  double constant = 0.0;

  Affine() = default;
  Affine(ColumnId c) : terms{{c, 1.0}} {}  // NOLINT: implicit by design
  static Affine value(double v) {
    Affine a;
    a.constant = v;
    return a;
  }
  static Affine diff(ColumnId a, ColumnId b) {
    Affine e;
    e.terms = {{a, 1.0}, {b, -1.0}};
    return e;
  }
  bool is_constant() const { return terms.empty(); }
};

inline Affine operator*(double s, const Affine& a) {
  Affine r = a;
  for (auto& t : r.terms) t.second *= s;
  r.constant *= s;
  return r;
}

inline Affine operator+(const Affine& a, const Affine& b) {
  Affine r = a;
  r.terms.insert(r.terms.end(), b.terms.begin(), b.terms.end());
  r.constant += b.constant;
  return r;
}

// One linear row under assembly: sum of coefficients (rel) rhs.
struct RowDraft {
  std::vector<std::pair<ColumnId, double>> coef;
  Relation rel = Relation::Equal;
  double rhs = 0.0;

  // Accumulates s * expr on the left-hand side; constants move to the rhs.
  void add(const Affine& e, double s = 1.0) {
    for (const auto& [c, v] : e.terms) coef.emplace_back(c, s * v);
    rhs -= s * e.constant;
  }
};

inline RowDraft make_row(Relation rel, double rhs) {
  RowDraft r;
  r.rel = rel;
  r.rhs = rhs;
  return r;
}

struct NewColumn {
  ColumnId id;
  VarBounds bounds;
};

// A self-contained batch of rows plus the columns it declares. Blocks are
// value objects; they reference pre-existing columns and columns drawn from
// the allocator that was passed to the generator.
struct ConstraintBlock {
  std::vector<RowDraft> rows;
  std::vector<NewColumn> new_columns;

  void append(ConstraintBlock other) {
    for (auto& r : other.rows) rows.push_back(std::move(r));
    for (auto& c : other.new_columns) new_columns.push_back(c);
  }
};

// Hands out consecutive column ids. Model builders keep one allocator in
// sync with the LpProblem; generator unit tests use a standalone one.
class ColumnAllocator {
 public:
  ColumnAllocator() = default;
  explicit ColumnAllocator(ColumnId next) : next_(next) {}

  ColumnId allocate() { return next_++; }
  ColumnId peek() const { return next_; }

 private:
  ColumnId next_ = 0;
};

}  // namespace opfbound
