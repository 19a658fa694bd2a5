#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "opfbound/cones.hpp"

using namespace opfbound;

namespace {
constexpr double kPi = 3.14159265358979323846;

// Largest feasible radius multiplier in direction phi for a unit sample:
// the over-approximation ratio of the projected polyhedron.
double observed_ratio(const cones::ConeBlock& blk, ColumnId r, ColumnId x0, ColumnId y0,
                      double phi) {
  double g = testutil::soc3_required_radius(blk, r, {{x0, std::cos(phi)}, {y0, std::sin(phi)}});
  REQUIRE(g > 0.0);
  return 1.0 / g;
}

lp::LpProblem pin_soc3(const cones::ConeBlock& blk, double rv, double xv, double yv) {
  testutil::MiniLp m;
  m.fixed(rv);
  m.fixed(xv);
  m.fixed(yv);
  m.apply(blk);
  return m.p;
}

}  // namespace

TEST_CASE("cone accuracy closed form") {
  CHECK(cones::epsilon(2) == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-12));
  double e8 = cones::epsilon(8);
  CHECK(e8 > 7.52e-5);
  CHECK(e8 < 7.54e-5);
  double e16 = cones::epsilon(16);
  CHECK(e16 > 1.14e-9);
  CHECK(e16 < 1.16e-9);
  CHECK_THROWS_AS((void)cones::epsilon(1), std::invalid_argument);
  CHECK_THROWS_AS((void)cones::soc3(0, 1, 2, 1, *(new ColumnAllocator())), std::invalid_argument);
}

TEST_CASE("soc3 row and column budget, homogeneity") {
  for (int k : {2, 3, 5, 8, 16}) {
    ColumnAllocator alloc;
    ColumnId r = alloc.allocate(), x0 = alloc.allocate(), y0 = alloc.allocate();
    auto blk = cones::soc3(r, x0, y0, k, alloc);
    CHECK(blk.rows.size() == static_cast<size_t>(2 * k));
    CHECK(blk.new_columns.size() == static_cast<size_t>(k - 1));
    CHECK(blk.accuracy == doctest::Approx(cones::epsilon(k)));
    for (const auto& row : blk.rows) {
      CHECK(row.rhs == 0.0);  // homogeneous when r is a column
      CHECK(row.rel == Relation::GreaterEqual);
    }
  }
}

TEST_CASE("soc3 containment across quadrants, radii and k") {
  for (int k : {2, 3, 5, 8, 16}) {
    ColumnAllocator alloc;
    ColumnId r = alloc.allocate(), x0 = alloc.allocate(), y0 = alloc.allocate();
    auto blk = cones::soc3(r, x0, y0, k, alloc);

    // axis point on the cone boundary
    double g_axis = testutil::soc3_required_radius(blk, r, {{x0, 1.0}, {y0, 0.0}});
    CHECK(g_axis <= 1.0 + 1e-15);

    int infeasible = 0;
    for (int d = 0; d < 360; ++d) {
      double phi = 2 * kPi * d / 360.0;
      for (double rho : {0.1, 1.0, 10.0}) {
        double g = testutil::soc3_required_radius(
            blk, r, {{x0, rho * std::cos(phi)}, {y0, rho * std::sin(phi)}});
        if (g > rho * (1 + 1e-14)) ++infeasible;
      }
    }
    CHECK(infeasible == 0);
  }
}

TEST_CASE("soc3 tightness: observed ratio meets epsilon and nothing more") {
  for (int k : {2, 3, 4, 5, 8, 12, 16}) {
    ColumnAllocator alloc;
    ColumnId r = alloc.allocate(), x0 = alloc.allocate(), y0 = alloc.allocate();
    auto blk = cones::soc3(r, x0, y0, k, alloc);
    double eps = cones::epsilon(k);

    double max_ratio = 0.0;
    for (int d = 0; d < 1440; ++d) {
      double phi = 2 * kPi * d / 1440.0;
      max_ratio = std::max(max_ratio, observed_ratio(blk, r, x0, y0, phi));
    }
    // vertex directions attain the bound exactly
    max_ratio = std::max(max_ratio, observed_ratio(blk, r, x0, y0, 0.0));
    CHECK(max_ratio <= (1 + eps) * (1 + 1e-12));
    CHECK(max_ratio >= 1 + 0.999 * eps);

    // points pushed beyond (1 + 2 eps) are infeasible all around
    int escaped = 0;
    for (int d = 0; d < 360; ++d) {
      double phi = 2 * kPi * d / 360.0;
      double rho = 1 + 2 * eps;
      double g = testutil::soc3_required_radius(
          blk, r, {{x0, rho * std::cos(phi)}, {y0, rho * std::sin(phi)}});
      if (g <= 1.0) ++escaped;
    }
    CHECK(escaped == 0);
  }
}

TEST_CASE("minimal-fold walk agrees with LP feasibility") {
  for (int k : {2, 3, 4}) {
    ColumnAllocator alloc;
    ColumnId r = alloc.allocate(), x0 = alloc.allocate(), y0 = alloc.allocate();
    auto blk = cones::soc3(r, x0, y0, k, alloc);
    for (double phi : {0.0, 0.37, kPi / 4, 2.0, 4.5}) {
      double rho_star = observed_ratio(blk, r, x0, y0, phi);
      double inside = rho_star * (1 - 1e-4), outside = rho_star * (1 + 1e-4);
      double t_in = testutil::phase1_slack(
          pin_soc3(blk, 1.0, inside * std::cos(phi), inside * std::sin(phi)));
      double t_out = testutil::phase1_slack(
          pin_soc3(blk, 1.0, outside * std::cos(phi), outside * std::sin(phi)));
      CHECK(t_in <= 1e-7);
      CHECK(t_out > 1e-6);
    }
  }
}

TEST_CASE("soc3 with a constant radius") {
  const double cap = 1.7;
  ColumnAllocator alloc;
  ColumnId x0 = alloc.allocate(), y0 = alloc.allocate();
  auto blk = cones::soc3(Affine::value(cap), x0, y0, 6, alloc);
  CHECK(blk.new_columns.size() == 5);
  // feasible iff the walk's residual requirement stays nonpositive
  auto req = [&](double xv, double yv) {
    return testutil::min_fold_walk(blk.rows, 0, 6, blk.new_columns, 0, -1, {{x0, xv}, {y0, yv}})
        .required_radius;
  };
  CHECK(req(cap * 0.99, 0.0) <= 0.0);
  CHECK(req(0.0, -cap * 0.99) <= 0.0);
  CHECK(req(cap * 1.01, 0.0) > 0.0);
  CHECK_THROWS_AS((void)cones::soc3(Affine::value(-1.0), x0, y0, 4, alloc),
                  std::invalid_argument);
}

TEST_CASE("soc3 scaling invariance of witnesses") {
  ColumnAllocator alloc;
  ColumnId r = alloc.allocate(), x0 = alloc.allocate(), y0 = alloc.allocate();
  auto blk = cones::soc3(r, x0, y0, 5, alloc);
  auto walk = testutil::min_fold_walk(blk.rows, 0, 5, blk.new_columns, 0, r,
                                      {{x0, 0.6}, {y0, -0.4}});
  for (double lam : {0.001, 7.0, 4096.0}) {
    auto scaled = testutil::min_fold_walk(blk.rows, 0, 5, blk.new_columns, 0, r,
                                          {{x0, 0.6 * lam}, {y0, -0.4 * lam}});
    CHECK(scaled.required_radius ==
          doctest::Approx(walk.required_radius * lam).epsilon(1e-12));
  }
}

TEST_CASE("rotated cone budget and examples") {
  const int k = 16;
  ColumnAllocator alloc;
  ColumnId r1 = alloc.allocate(), r2 = alloc.allocate(), x0 = alloc.allocate(),
           y0 = alloc.allocate();
  auto blk = cones::soc4_rotated(r1, r2, x0, y0, k, alloc);
  CHECK(blk.inequality_count == 4 * k);
  CHECK(blk.equality_count == 3);
  CHECK(blk.new_columns.size() == static_cast<size_t>(2 * k + 2));

  // boundary point x0^2 + y0^2 = r1 r2
  CHECK(testutil::soc4_feasible(blk, k, 1.0, 1.0, 1.0, 0.0, x0, y0));
  // interior point 1.9^2 = 3.61 < 4
  CHECK(testutil::soc4_feasible(blk, k, 4.0, 1.0, 1.9, 0.0, x0, y0));
  // outside: 1.1^2 = 1.21 > (1+eps)^2
  CHECK(!testutil::soc4_feasible(blk, k, 1.0, 1.0, 1.1, 0.0, x0, y0));
}

TEST_CASE("rotated cone boundary sweep and composition accuracy") {
  for (int k : {3, 8, 16}) {
    ColumnAllocator alloc;
    ColumnId r1 = alloc.allocate(), r2 = alloc.allocate(), x0 = alloc.allocate(),
             y0 = alloc.allocate();
    auto blk = cones::soc4_rotated(r1, r2, x0, y0, k, alloc);
    double eps = cones::epsilon(k);

    int bad = 0;
    for (int d = 0; d < 180; ++d) {
      double phi = 2 * kPi * d / 180.0;
      for (double r1v : {0.5, 1.0, 3.0}) {
        for (double r2v : {0.5, 2.0}) {
          double rho = std::sqrt(r1v * r2v);
          if (!testutil::soc4_feasible(blk, k, r1v, r2v, rho * std::cos(phi),
                                       rho * std::sin(phi), x0, y0))
            ++bad;
          // provable outer bound: the inner chain admits (1+eps) times the
          // norm the outer chain admits for u, which itself cannot exceed
          // sqrt((1+eps)^2 rp^2 - yp0^2)
          double rp_v = 0.5 * (r1v + r2v), yp0_v = 0.5 * (r1v - r2v);
          double umax = std::sqrt((1 + eps) * (1 + eps) * rp_v * rp_v - yp0_v * yp0_v);
          double out = (1 + eps) * umax * (1 + 1e-6);
          if (testutil::soc4_feasible(blk, k, r1v, r2v, out * std::cos(phi),
                                      out * std::sin(phi), x0, y0))
            ++bad;
        }
      }
    }
    CHECK(bad == 0);
  }
}

TEST_CASE("rotated cone cross-checked against phase-I LP") {
  const int k = 4;
  ColumnAllocator alloc;
  ColumnId r1 = alloc.allocate(), r2 = alloc.allocate(), x0 = alloc.allocate(),
           y0 = alloc.allocate();
  auto blk = cones::soc4_rotated(r1, r2, x0, y0, k, alloc);
  for (double scale : {0.9, 1.3}) {
    testutil::MiniLp m;
    m.fixed(2.0);
    m.fixed(0.5);
    m.fixed(scale * std::cos(0.8));
    m.fixed(scale * std::sin(0.8));
    m.apply(blk);
    double t = testutil::phase1_slack(m.p);
    bool lp_feasible = t <= 1e-8;
    bool walk_feasible = testutil::soc4_feasible(blk, k, 2.0, 0.5, scale * std::cos(0.8),
                                                 scale * std::sin(0.8), x0, y0);
    CHECK(lp_feasible == walk_feasible);
    CHECK(lp_feasible == (scale < 1.0));
  }
}
