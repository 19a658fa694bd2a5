#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "opfbound/core.hpp"

namespace opfbound::hulls {

inline constexpr double kPiHalf = 1.57079632679489661923;

inline void require_finite(const VarBounds& b, const char* what) {
  if (!b.finite()) throw std::invalid_argument(std::string(what) + ": bounds must be finite");
  if (!b.valid()) throw std::invalid_argument(std::string(what) + ": lo > hi");
}

// Convex hull of the bilinear set {w = x*y, (x, y) in box}: the four
// McCormick rows
//   w >= lo_x*y + lo_y*x - lo_x*lo_y
//   w >= hi_x*y + hi_y*x - hi_x*hi_y
//   w <= lo_x*y + hi_y*x - lo_x*hi_y
//   w <= hi_x*y + lo_y*x - hi_x*lo_y
inline ConstraintBlock mccormick(const Affine& w, const Affine& x, const Affine& y,
                                 const VarBounds& bx, const VarBounds& by) {
  require_finite(bx, "mccormick x");
  require_finite(by, "mccormick y");
  ConstraintBlock blk;
  auto emit = [&](double ax, double ay, double c, Relation rel) {
    RowDraft r = make_row(rel, c);
    r.add(w);
    r.add(x, -ax);
    r.add(y, -ay);
    blk.rows.push_back(std::move(r));
  };
  emit(by.lo, bx.lo, -bx.lo * by.lo, Relation::GreaterEqual);
  emit(by.hi, bx.hi, -bx.hi * by.hi, Relation::GreaterEqual);
  emit(by.hi, bx.lo, -bx.lo * by.hi, Relation::LessEqual);
  emit(by.lo, bx.hi, -bx.hi * by.lo, Relation::LessEqual);
  return blk;
}

// Secant over-estimator of w2 = x^2 on [lo, hi]:  w2 <= (hi+lo)x - hi*lo.
// The under side is square_polyhedron's job.
inline ConstraintBlock square_envelope(const Affine& w2, const Affine& x, const VarBounds& bx) {
  require_finite(bx, "square_envelope");
  ConstraintBlock blk;
  RowDraft r = make_row(Relation::LessEqual, -bx.hi * bx.lo);
  r.add(w2);
  r.add(x, -(bx.hi + bx.lo));
  blk.rows.push_back(std::move(r));
  return blk;
}

// Uniform tangent points on [lo, hi], endpoints included; l = 1 degenerates
// to the midpoint.
inline std::vector<double> uniform_points(double lo, double hi, int n) {
  std::vector<double> pts;
  if (n == 1) {
    pts.push_back(0.5 * (lo + hi));
    return pts;
  }
  for (int h = 0; h < n; ++h) pts.push_back(lo + (hi - lo) * h / (n - 1));
  return pts;
}

// Polyhedral under-approximation of w2 >= x^2: l tangents
//   w2 >= 2*x_h*x - x_h^2
// at uniform points plus the secant row. l + 1 rows, no new columns.
inline ConstraintBlock square_polyhedron(const Affine& w2, const Affine& x, const VarBounds& bx,
                                         int l) {
  require_finite(bx, "square_polyhedron");
  if (l < 1) throw std::invalid_argument("square_polyhedron: l must be >= 1");
  ConstraintBlock blk;
  for (double xh : uniform_points(bx.lo, bx.hi, l)) {
    RowDraft r = make_row(Relation::GreaterEqual, -xh * xh);
    r.add(w2);
    r.add(x, -2.0 * xh);
    blk.rows.push_back(std::move(r));
  }
  blk.append(square_envelope(w2, x, bx));
  return blk;
}

// Convex envelope of xc = cos(x) on [-xbar, xbar], 0 < xbar < pi/2:
//   xc >= cos(xbar)
//   xc <= 1 - (1 - cos(xbar))/xbar^2 * q,   q >= x^2 (square_polyhedron)
// Declares the helper column q.
inline ConstraintBlock cosine_envelope(const Affine& xc, const Affine& x, double xbar,
                                       ColumnAllocator& alloc, int l) {
  if (!(xbar > 0.0 && xbar < kPiHalf))
    throw std::invalid_argument("cosine_envelope: requires 0 < xbar < pi/2");
  ConstraintBlock blk;
  ColumnId q = alloc.allocate();
  blk.new_columns.push_back({q, {0.0, xbar * xbar}});
  blk.append(square_polyhedron(Affine(q), x, {-xbar, xbar}, l));

  double slope = (1.0 - std::cos(xbar)) / (xbar * xbar);
  RowDraft upper = make_row(Relation::LessEqual, 1.0);
  upper.add(xc);
  upper.add(Affine(q), slope);
  blk.rows.push_back(std::move(upper));

  RowDraft floor = make_row(Relation::GreaterEqual, std::cos(xbar));
  floor.add(xc);
  blk.rows.push_back(std::move(floor));
  return blk;
}

// Convex envelope of xs = sin(x) on [-xbar, xbar], 0 < xbar < pi/2:
//   xs <= cos(xbar/2)(x - xbar/2) + sin(xbar/2)
//   xs >= cos(xbar/2)(x + xbar/2) - sin(xbar/2)
inline ConstraintBlock sine_envelope(const Affine& xs, const Affine& x, double xbar) {
  if (!(xbar > 0.0 && xbar < kPiHalf))
    throw std::invalid_argument("sine_envelope: requires 0 < xbar < pi/2");
  double c = std::cos(xbar / 2), s = std::sin(xbar / 2);
  ConstraintBlock blk;
  RowDraft up = make_row(Relation::LessEqual, s - c * xbar / 2);
  up.add(xs);
  up.add(x, -c);
  blk.rows.push_back(std::move(up));
  RowDraft lo = make_row(Relation::GreaterEqual, c * xbar / 2 - s);
  lo.add(xs);
  lo.add(x, -c);
  blk.rows.push_back(std::move(lo));
  return blk;
}

// Direct polyhedral approximation of xc = cos(theta) on [blo, bhi] inside
// (-pi/2, pi/2): s tangent rows
//   xc <= -sin(t_a)(theta - t_a) + cos(t_a)
// at uniform points plus the floor xc >= cos(max(|blo|, |bhi|)).
inline ConstraintBlock cosine_polyhedron(const Affine& xc, const Affine& theta, double blo,
                                         double bhi, int s) {
  if (!(blo > -kPiHalf && bhi < kPiHalf && blo <= bhi))
    throw std::invalid_argument("cosine_polyhedron: bounds must lie inside (-pi/2, pi/2)");
  if (s < 1) throw std::invalid_argument("cosine_polyhedron: s must be >= 1");
  ConstraintBlock blk;
  for (double ta : uniform_points(blo, bhi, s)) {
    RowDraft r = make_row(Relation::LessEqual, std::cos(ta) + ta * std::sin(ta));
    r.add(xc);
    r.add(theta, std::sin(ta));
    blk.rows.push_back(std::move(r));
  }
  RowDraft floor = make_row(Relation::GreaterEqual, std::cos(std::max(std::abs(blo), std::abs(bhi))));
  floor.add(xc);
  blk.rows.push_back(std::move(floor));
  return blk;
}

}  // namespace opfbound::hulls
