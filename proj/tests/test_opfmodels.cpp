#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "opfbound/barrier.hpp"
#include "opfbound/netdata.hpp"
#include "opfbound/opfmodels.hpp"
#include "opfbound/verify.hpp"

using namespace opfbound;
using models::ApproxConfig;

namespace {

netdata::Network load_case(const std::string& rel) {
  std::ifstream in(std::string(OPFBOUND_DATA_DIR) + "/" + rel);
  REQUIRE_MESSAGE(in.good(), "cannot open ", rel);
  std::ostringstream ss;
  ss << in.rdbuf();
  return netdata::parse_case(ss.str());
}

netdata::Branch line(double r, double x, double b = 0.0, double tap = 1.0, double shift = 0.0) {
  netdata::Branch br;
  br.from_bus = 1;
  br.to_bus = 2;
  br.series_admittance = 1.0 / std::complex<double>(r, x);
  br.shunt_susceptance = b;
  br.tap = tap;
  br.shift = shift;
  return br;
}

lp::Solution solve_model(const models::BuildResult& built, double tol = 1e-8) {
  lp::SolverOptions opt;
  opt.tol.feasibility = tol;
  opt.tol.optimality = tol;
  return lp::solve(built.problem, opt);
}

}  // namespace

TEST_CASE("flow coefficients of a lossless line") {
  auto f = models::flow_coefficients(line(0.0, 0.1));
  CHECK(f.a1 == doctest::Approx(0.0));
  CHECK(f.a2 == doctest::Approx(0.0));
  CHECK(f.a3 == doctest::Approx(10.0));
  CHECK(f.b1 == doctest::Approx(10.0));
  CHECK(f.b2 == doctest::Approx(-10.0));
  CHECK(f.b3 == doctest::Approx(0.0));
  CHECK(f.c1 == doctest::Approx(0.0));
  CHECK(f.c2 == doctest::Approx(0.0));
  CHECK(f.c3 == doctest::Approx(-10.0));
  CHECK(f.d1 == doctest::Approx(10.0));
  CHECK(f.d2 == doctest::Approx(-10.0));
  CHECK(f.d3 == doctest::Approx(0.0));
  // lossless: P_ij + P_ji vanishes identically
  CHECK(f.a1 + f.c1 == doctest::Approx(0.0));
  CHECK(f.a2 + f.c2 == doctest::Approx(0.0));
  CHECK(f.a3 + f.c3 == doctest::Approx(0.0));
}

TEST_CASE("flow coefficients of a lossy line keep losses nonnegative") {
  auto f = models::flow_coefficients(line(0.01, 0.1));
  CHECK(f.a1 == doctest::Approx(0.990099).epsilon(1e-5));
  double worst = 0.0;
  for (double wii : {0.81, 1.0, 1.21}) {
    for (double wjj : {0.81, 1.0, 1.21}) {
      for (int d = 0; d < 720; ++d) {
        double ang = 2 * 3.14159265358979 * d / 720.0;
        double wr = std::sqrt(wii * wjj) * std::cos(ang);
        double wi = std::sqrt(wii * wjj) * std::sin(ang);
        double loss = (f.a1 * wii + f.a2 * wr + f.a3 * wi) +
                      (f.c1 * wjj + f.c2 * wr + f.c3 * wi);
        worst = std::min(worst, loss);
      }
    }
  }
  CHECK(worst >= -1e-12);
}

TEST_CASE("tap ratio scales the from-side coefficients") {
  auto base = models::flow_coefficients(line(0.02, 0.15));
  auto tapped = models::flow_coefficients(line(0.02, 0.15, 0.0, 1.05));
  CHECK(tapped.a1 == doctest::Approx(base.a1 / (1.05 * 1.05)).epsilon(1e-12));
  CHECK(tapped.a2 == doctest::Approx(base.a2 / 1.05).epsilon(1e-12));
  CHECK(tapped.a3 == doctest::Approx(base.a3 / 1.05).epsilon(1e-12));
}

TEST_CASE("pi-model series symmetry invariant") {
  for (double r : {0.0, 0.01, 0.05}) {
    for (double x : {0.05, 0.2}) {
      auto f = models::flow_coefficients(line(r, x));
      CHECK(f.a1 == doctest::Approx(f.c1).epsilon(1e-14));
      CHECK(f.b1 == doctest::Approx(f.d1).epsilon(1e-14));
      CHECK(f.a3 == doctest::Approx(-f.c3).epsilon(1e-14));
    }
  }
}

TEST_CASE("generator pairing over quadratic-cost units") {
  netdata::Network net;
  net.base_mva = 100;
  net.buses.push_back({1, 0.9, 1.1, 0, 0, 0, 0, true});
  auto add_gen = [&](double c2) {
    netdata::Generator g;
    g.bus = 1;
    g.pmax = 1.0;
    g.c2 = c2;
    net.generators.push_back(g);
  };
  SUBCASE("three quadratic units make two pairs") {
    add_gen(1.0);
    add_gen(2.0);
    add_gen(3.0);
    auto plan = models::pair_generators(net);
    REQUIRE(plan.pairs.size() == 2);
    CHECK(plan.pairs[0] == std::pair<int, int>{0, 1});
    CHECK(plan.pairs[1] == std::pair<int, int>{2, -1});
  }
  SUBCASE("four quadratic units make two pairs") {
    for (int i = 0; i < 4; ++i) add_gen(1.0);
    CHECK(models::pair_generators(net).pairs.size() == 2);
  }
  SUBCASE("linear-only costs need no pairs") {
    add_gen(0.0);
    add_gen(0.0);
    auto plan = models::pair_generators(net);
    CHECK(plan.pairs.empty());
    CHECK(plan.quadratic_count == 0);
  }
}

TEST_CASE("lp0 column budget matches the closed form") {
  auto net = load_case("cases/twobus_a.m");
  for (int k : {8, 16}) {
    ApproxConfig cfg;
    cfg.k = k;
    auto built = models::build_lp0(net, cfg);
    // B + 6L + 2G + Gq + N semantic, two rotated blocks, two thermal chains
    CHECK(built.problem.num_cols() == 6 * k + 14);
    CHECK(built.vars.semantic_columns == 12);
    CHECK(built.vars.names.size() == static_cast<size_t>(built.problem.num_cols()));
  }
}

TEST_CASE("variable map is injective on columns") {
  auto net = load_case("cases/sixbus.m");
  ApproxConfig cfg;
  cfg.k = 4;
  auto built = models::build_lps(net, cfg);
  const auto& vm = built.vars;
  std::vector<int> seen(built.problem.num_cols(), 0);
  auto mark = [&](const std::vector<ColumnId>& cols) {
    for (ColumnId c : cols)
      if (c >= 0) ++seen[c];
  };
  mark(vm.w_ii);
  mark(vm.wr);
  mark(vm.wi);
  mark(vm.p_from);
  mark(vm.q_from);
  mark(vm.p_to);
  mark(vm.q_to);
  mark(vm.pg);
  mark(vm.qg);
  mark(vm.pg_scaled);
  mark(vm.alpha);
  mark(vm.v);
  mark(vm.theta);
  mark(vm.w_vv);
  mark(vm.x_c);
  mark(vm.x_s);
  for (int c = 0; c < vm.semantic_columns; ++c) CHECK(seen[c] == 1);
  for (int c = vm.semantic_columns; c < built.problem.num_cols(); ++c) CHECK(seen[c] == 0);
}

TEST_CASE("unvalidated network is rejected") {
  auto net = load_case("cases/twobus_a.m");
  net.buses[0].vmin = -0.5;
  ApproxConfig cfg;
  CHECK_THROWS_AS((void)models::build_lp0(net, cfg), std::invalid_argument);
}

TEST_CASE("no-load network costs exactly the constant term") {
  auto net = load_case("cases/twobus_a.m");
  net.buses[1].pd = 0.0;
  net.buses[1].qd = 0.0;
  ApproxConfig cfg;
  cfg.k = 8;
  auto built = models::build_lp0(net, cfg);
  auto sol = solve_model(built);
  REQUIRE(sol.status == lp::SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(50.0).epsilon(1e-6));
  CHECK(std::abs(sol.primal[built.vars.pg[0]]) <= 1e-5);
}

TEST_CASE("W^r stays inside the cone-implied bound") {
  auto net = load_case("cases/twobus_a.m");
  ApproxConfig cfg;
  cfg.k = 12;
  auto built = models::build_lp0(net, cfg);
  lp::LpProblem probe = built.problem;
  for (int j = 0; j < probe.num_cols(); ++j) probe.set_objective(j, 0.0);
  probe.add_objective_constant(-probe.objective_constant());
  probe.set_objective(built.vars.wr[0], -1.0);  // maximize W^r
  auto sol = lp::solve(probe);
  REQUIRE(sol.status == lp::SolveStatus::Optimal);
  CHECK(-sol.objective <= 1.05 * 1.05 * (1 + 3 * cones::epsilon(cfg.k)) + 1e-7);
}

TEST_CASE("deterministic builds are bit identical") {
  auto net = load_case("cases/threebus_ring.m");
  ApproxConfig cfg;
  cfg.k = 6;
  auto a = models::build_lp0(net, cfg);
  auto b = models::build_lp0(net, cfg);
  CHECK(lp::export_lp_text(a.problem) == lp::export_lp_text(b.problem));
  auto as = models::build_lps(net, cfg);
  auto bs = models::build_lps(net, cfg);
  CHECK(lp::export_lp_text(as.problem) == lp::export_lp_text(bs.problem));
}

TEST_CASE("lp0 rows are a prefix of lps rows under the lifted-column shift") {
  auto net = load_case("cases/threebus_ring.m");
  ApproxConfig cfg;
  cfg.k = 4;
  auto m0 = models::build_lp0(net, cfg);
  auto ms = models::build_lps(net, cfg);
  const int shift = ms.vars.semantic_columns - m0.vars.semantic_columns;
  REQUIRE(shift > 0);
  const auto& rows0 = m0.problem.rows();
  const auto& rowss = ms.problem.rows();
  REQUIRE(rows0.size() <= rowss.size());
  for (size_t i = 0; i < rows0.size(); ++i) {
    CHECK(rows0[i].rel == rowss[i].rel);
    CHECK(rows0[i].rhs == rowss[i].rhs);
    REQUIRE(rows0[i].coef.size() == rowss[i].coef.size());
    for (size_t t = 0; t < rows0[i].coef.size(); ++t) {
      ColumnId c0 = rows0[i].coef[t].first;
      ColumnId expect = c0 < m0.vars.semantic_columns ? c0 : c0 + shift;
      CHECK(expect == rowss[i].coef[t].first);
      CHECK(rows0[i].coef[t].second == rowss[i].coef[t].second);
    }
  }
}

TEST_CASE("relaxation order between the two models") {
  for (const char* name : {"cases/twobus_a.m", "cases/twobus_lossy.m"}) {
    auto net = load_case(name);
    ApproxConfig cfg;
    cfg.k = 10;
    auto s0 = solve_model(models::build_lp0(net, cfg));
    auto ss = solve_model(models::build_lps(net, cfg));
    REQUIRE(s0.status == lp::SolveStatus::Optimal);
    REQUIRE(ss.status == lp::SolveStatus::Optimal);
    CHECK(ss.objective >= s0.objective - 1e-6 * std::abs(s0.objective));
  }
}

TEST_CASE("monotone tightening in the cone stage count") {
  for (const char* name : {"cases/twobus_a.m", "cases/threebus_ring.m"}) {
    auto net = load_case(name);
    ApproxConfig c8, c16;
    c8.k = 8;
    c16.k = 16;
    auto s8 = solve_model(models::build_lp0(net, c8));
    auto s16 = solve_model(models::build_lp0(net, c16));
    REQUIRE(s8.status == lp::SolveStatus::Optimal);
    REQUIRE(s16.status == lp::SolveStatus::Optimal);
    CHECK(s16.objective >= s8.objective - 1e-9 * std::abs(s8.objective));
  }
}

TEST_CASE("lps solution respects the polar column boxes") {
  auto net = load_case("cases/twobus_a.m");
  ApproxConfig cfg;
  cfg.k = 10;
  auto built = models::build_lps(net, cfg);
  auto sol = solve_model(built);
  REQUIRE(sol.status == lp::SolveStatus::Optimal);
  double xbar = netdata::kDefaultAngleBound;
  double xc = sol.primal[built.vars.x_c[0]];
  double wv = sol.primal[built.vars.w_vv[0]];
  CHECK(xc >= std::cos(xbar) - 1e-7);
  CHECK(xc <= 1.0 + 1e-7);
  CHECK(wv >= 0.95 * 0.95 - 1e-7);
  CHECK(wv <= 1.05 * 1.05 + 1e-7);
}

TEST_CASE("optional quadratic-backed cosine envelope stays consistent") {
  auto net = load_case("cases/twobus_a.m");
  ApproxConfig cfg;
  cfg.k = 8;
  cfg.use_cosine_envelope = true;
  auto built = models::build_lps(net, cfg);  // budget self-check runs inside
  auto sol = solve_model(built);
  REQUIRE(sol.status == lp::SolveStatus::Optimal);
  ApproxConfig base = cfg;
  base.use_cosine_envelope = false;
  auto ref = solve_model(models::build_lps(net, base));
  // the extra envelope can only tighten the relaxation
  CHECK(sol.objective >= ref.objective - 1e-6 * std::abs(ref.objective));
}

TEST_CASE("six-bus system with mixed costs builds and solves") {
  auto net = load_case("cases/sixbus.m");
  ApproxConfig cfg;
  cfg.k = 8;
  auto plan = models::pair_generators(net);
  CHECK(plan.quadratic_count == 3);  // one linear unit
  CHECK(plan.pairs.size() == 2);
  auto s0 = solve_model(models::build_lp0(net, cfg));
  REQUIRE(s0.status == lp::SolveStatus::Optimal);
  auto ss = solve_model(models::build_lps(net, cfg));
  REQUIRE(ss.status == lp::SolveStatus::Optimal);
  CHECK(ss.objective >= s0.objective - 1e-6 * std::abs(s0.objective));
  CHECK(s0.objective > 0.0);
}

TEST_CASE("AC-feasible points embed into the lp0 rows") {
  // the oracle incumbent induces (W, P, Q, p, alpha); pin those columns and
  // ask phase-1 whether lifted witnesses exist within the grid residual
  for (const char* name : {"cases/twobus_a.m", "cases/threebus_ring.m"}) {
    auto net = load_case(name);
    auto oracle = verify::brute_force_opf(
        net, {std::string(name).find("threebus") != std::string::npos ? 1.25e-2 : 1e-3,
              std::string(name).find("threebus") != std::string::npos ? 5e-3 : 1e-3, 10});
    REQUIRE(oracle.has_value());
    const auto& pt = oracle->point;

    models::ApproxConfig cfg;
    cfg.k = 10;
    auto built = models::build_lp0(net, cfg);
    const auto& vm = built.vars;

    lp::LpProblem pinned;
    std::vector<double> val(built.problem.num_cols(), 0.0);
    auto pin = [&](ColumnId c, double v) { val[c] = v; };
    for (size_t b = 0; b < net.buses.size(); ++b) pin(vm.w_ii[b], pt.vm[b] * pt.vm[b]);
    for (size_t e = 0; e < net.branches.size(); ++e) {
      const auto& br = net.branches[e];
      int fi = net.index_of(br.from_bus), ti = net.index_of(br.to_bus);
      pin(vm.wr[e], pt.vm[fi] * pt.vm[ti] * std::cos(pt.va[fi] - pt.va[ti]));
      pin(vm.wi[e], pt.vm[fi] * pt.vm[ti] * std::sin(pt.va[fi] - pt.va[ti]));
      auto fl = verify::ac_branch_flow(br, pt.vm[fi], pt.va[fi], pt.vm[ti], pt.va[ti]);
      pin(vm.p_from[e], fl.p_from);
      pin(vm.q_from[e], fl.q_from);
      pin(vm.p_to[e], fl.p_to);
      pin(vm.q_to[e], fl.q_to);
    }
    auto plan = models::pair_generators(net);
    for (size_t g = 0; g < net.generators.size(); ++g) {
      pin(vm.pg[g], pt.pg[g]);
      pin(vm.qg[g], pt.qg[g]);
      if (vm.pg_scaled[g] >= 0)
        pin(vm.pg_scaled[g], std::sqrt(net.generators[g].c2) * pt.pg[g]);
    }
    for (size_t n2 = 0; n2 < plan.pairs.size(); ++n2) {
      auto [g1, g2] = plan.pairs[n2];
      double a = std::pow(std::sqrt(net.generators[g1].c2) * pt.pg[g1], 2);
      if (g2 >= 0) a += std::pow(std::sqrt(net.generators[g2].c2) * pt.pg[g2], 2);
      pin(vm.alpha[n2], a);
    }

    for (int j = 0; j < built.problem.num_cols(); ++j) {
      if (j < vm.semantic_columns)
        pinned.add_column({val[j], val[j]});
      else
        pinned.add_column({built.problem.lower_bound(j), built.problem.upper_bound(j)});
    }
    ColumnId t = pinned.add_column({-1.0, kInf}, 1.0);
    for (const auto& row : built.problem.rows()) {
      RowDraft r;
      r.rhs = row.rhs;
      r.coef.assign(row.coef.begin(), row.coef.end());
      if (row.rel == Relation::Equal) {
        RowDraft r2 = r;
        r2.rel = Relation::GreaterEqual;
        r2.coef.emplace_back(t, 1.0);
        pinned.add_row(r2);
        r.rel = Relation::LessEqual;
        r.coef.emplace_back(t, -1.0);
        pinned.add_row(r);
      } else {
        r.rel = row.rel;
        r.coef.emplace_back(t, row.rel == Relation::LessEqual ? -1.0 : 1.0);
        pinned.add_row(r);
      }
    }
    auto ph = lp::solve(pinned);
    REQUIRE(ph.status == lp::SolveStatus::Optimal);
    // violations no worse than the grid residual (plus cone accuracy slack)
    CHECK(ph.objective <= oracle->kcl_tolerance + 1e-9);

    // and the LP optimum stays below the (charged) AC objective
    auto sol = solve_model(built);
    REQUIRE(sol.status == lp::SolveStatus::Optimal);
    CHECK(sol.objective <=
          oracle->objective + oracle->grid_tolerance + 1e-6 * std::abs(oracle->objective));
  }
}
