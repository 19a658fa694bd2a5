#pragma once

#include <cmath>
#include <stdexcept>

#include "opfbound/core.hpp"

namespace opfbound::cones {

inline constexpr double kPi = 3.14159265358979323846;

// Approximation accuracy of the k-stage lifted cone: 1/cos(pi/2^k) - 1,
// evaluated as 2*sin^2(a/2)/cos(a) to keep full precision for large k.
inline double epsilon(int k) {
  if (k < 2) throw std::invalid_argument("cone accuracy: k must be >= 2");
  double a = std::ldexp(kPi, -k);
  double s = std::sin(0.5 * a);
  return 2.0 * s * s / std::cos(a);
}

struct ConeBlock : ConstraintBlock {
  std::vector<Affine> anchors;
  double accuracy = 0.0;
  int inequality_count = 0;
  int equality_count = 0;
};

namespace detail {

// Rotation angle of stage i. Stages 0 and 1 are quarter-turn folds that
// realize |x0| and |y0|; stage i >= 2 rotates by pi/2^i; the closing
// equality uses pi/2^k.
inline double stage_angle(int i) { return i <= 1 ? kPi / 2.0 : std::ldexp(kPi, -i); }

}  // namespace detail

// Lifted polyhedral approximation of the 3-D second-order cone
// sqrt(x0^2 + y0^2) <= r, reduced form: k - 1 new columns (the fold
// variables) and 2k inequality rows; the rotation chain and the closing
// equality are substituted out symbolically. The projection P onto
// (r, x0, y0) satisfies SOC p P p (1 + epsilon(k)) * SOC.
//
// r must be nonnegative wherever the block is used: a constant >= 0 or a
// column whose lower bound is >= 0 (the emitted rows then imply r >= 0).
inline ConeBlock soc3(const Affine& r, const Affine& x0, const Affine& y0, int k,
                      ColumnAllocator& alloc) {
  if (k < 2) throw std::invalid_argument("soc3: k must be >= 2");
  if (r.is_constant() && r.constant < 0.0)
    throw std::invalid_argument("soc3: constant radius must be nonnegative");

  ConeBlock blk;
  blk.anchors = {r, x0, y0};
  blk.accuracy = epsilon(k);

  Affine x_cur = x0;  // x_i, maintained symbolically
  Affine y_cur = y0;  // y_i; a plain column from stage 1 on

  for (int i = 0; i < k; ++i) {
    double c = std::cos(detail::stage_angle(i));
    double s = std::sin(detail::stage_angle(i));
    // fold expression E_i = y_i*cos - x_i*sin
    Affine fold = c * y_cur + (-s) * x_cur;
    Affine x_next = c * x_cur + s * y_cur;

    if (i < k - 1) {
      ColumnId yn = alloc.allocate();
      blk.new_columns.push_back({yn, {0.0, kInf}});
      for (double sign : {1.0, -1.0}) {
        RowDraft row = make_row(Relation::GreaterEqual, 0.0);
        row.add(Affine(yn));
        row.add(fold, -sign);
        blk.rows.push_back(std::move(row));
      }
      y_cur = Affine(yn);
    } else {
      // closing stage: y_k = (r - x_k*cos(pi/2^k))/sin(pi/2^k) substituted
      // into its two fold rows, scaled by sin > 0.
      double cf = std::cos(std::ldexp(kPi, -k));
      double sf = std::sin(std::ldexp(kPi, -k));
      for (double sign : {1.0, -1.0}) {
        RowDraft row = make_row(Relation::GreaterEqual, 0.0);
        row.add(r);
        row.add(x_next, -cf);
        row.add(fold, -sign * sf);
        blk.rows.push_back(std::move(row));
      }
    }
    x_cur = x_next;
  }
  blk.inequality_count = static_cast<int>(blk.rows.size());
  return blk;
}

// Lifted polyhedral approximation of the 4-D rotated cone
// x0^2 + y0^2 <= r1*r2 (r1, r2 >= 0): two soc3 blocks over the split
// radii coupled by three equalities,
//   rp  = (r1 + r2)/2,  yp0 = (r1 - r2)/2,  xp0 = u,
// where u bounds ||(x0, y0)|| and (rp, xp0, yp0) closes the product.
// 4k inequalities, 3 equalities, 2k + 2 new columns.
inline ConeBlock soc4_rotated(const Affine& r1, const Affine& r2, const Affine& x0,
                              const Affine& y0, int k, ColumnAllocator& alloc) {
  if (k < 2) throw std::invalid_argument("soc4_rotated: k must be >= 2");

  ConeBlock blk;
  blk.anchors = {r1, r2, x0, y0};
  blk.accuracy = epsilon(k);

  ColumnId u = alloc.allocate();
  ColumnId rp = alloc.allocate();
  ColumnId xp0 = alloc.allocate();
  ColumnId yp0 = alloc.allocate();
  blk.new_columns.push_back({u, {0.0, kInf}});
  blk.new_columns.push_back({rp, {0.0, kInf}});
  blk.new_columns.push_back({xp0, {0.0, kInf}});
  blk.new_columns.push_back({yp0, {-kInf, kInf}});

  auto couple = [&blk](const Affine& lhs, const Affine& rhs) {
    RowDraft row = make_row(Relation::Equal, 0.0);
    row.add(lhs);
    row.add(rhs, -1.0);
    blk.rows.push_back(std::move(row));
  };
  couple(Affine(rp), 0.5 * (r1 + r2));
  couple(Affine(yp0), 0.5 * (r1 + (-1.0) * r2));
  couple(Affine(xp0), Affine(u));
  blk.equality_count = 3;

  ConeBlock inner = soc3(Affine(u), x0, y0, k, alloc);
  ConeBlock outer = soc3(Affine(rp), Affine(xp0), Affine(yp0), k, alloc);
  blk.inequality_count = inner.inequality_count + outer.inequality_count;
  blk.append(std::move(inner));
  blk.append(std::move(outer));
  return blk;
}

}  // namespace opfbound::cones
