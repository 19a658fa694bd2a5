#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "opfbound/barrier.hpp"
#include "opfbound/cones.hpp"
#include "opfbound/netdata.hpp"

namespace opfbound::verify {

struct AcPoint {
  std::vector<double> vm;  // per bus, p.u.
  std::vector<double> va;  // per bus, rad
  std::vector<double> pg;  // per generator, p.u.
  std::vector<double> qg;
};

struct ResidualReport {
  double max_kcl = 0.0;
  double max_bound_violation = 0.0;
  double max_thermal_violation = 0.0;
  double objective = 0.0;
};

namespace detail {

struct BranchY {
  std::complex<double> ff, ft, tf, tt;
};

inline BranchY branch_admittance(const netdata::Branch& br) {
  const std::complex<double> y = br.series_admittance;
  const std::complex<double> half(0.0, br.shunt_susceptance / 2.0);
  const std::complex<double> T = br.complex_tap();
  BranchY b;
  b.ff = (y + half) / std::norm(T);
  b.ft = -y / std::conj(T);
  b.tf = -y / T;
  b.tt = y + half;
  return b;
}

}  // namespace detail

// Branch flows out of both ends, computed from the complex pi-model.
struct BranchFlow {
  double p_from, q_from, p_to, q_to;
};

inline BranchFlow ac_branch_flow(const netdata::Branch& br, double vf, double thf, double vt,
                                 double tht) {
  detail::BranchY Y = detail::branch_admittance(br);
  std::complex<double> Vf = std::polar(vf, thf), Vt = std::polar(vt, tht);
  std::complex<double> Sf = Vf * std::conj(Y.ff * Vf + Y.ft * Vt);
  std::complex<double> St = Vt * std::conj(Y.tf * Vf + Y.tt * Vt);
  return {Sf.real(), Sf.imag(), St.real(), St.imag()};
}

// Residuals of every Model-1 constraint at the given operating point.
inline ResidualReport evaluate_ac(const netdata::Network& net, const AcPoint& pt) {
  if (pt.vm.size() != net.buses.size() || pt.va.size() != net.buses.size() ||
      pt.pg.size() != net.generators.size() || pt.qg.size() != net.generators.size())
    throw std::invalid_argument("evaluate_ac: point sizes do not match the network");

  ResidualReport rep;
  std::vector<double> pinj(net.buses.size(), 0.0), qinj(net.buses.size(), 0.0);

  for (size_t e = 0; e < net.branches.size(); ++e) {
    const auto& br = net.branches[e];
    int fi = net.index_of(br.from_bus), ti = net.index_of(br.to_bus);
    BranchFlow fl = ac_branch_flow(br, pt.vm[fi], pt.va[fi], pt.vm[ti], pt.va[ti]);
    pinj[fi] += fl.p_from;
    qinj[fi] += fl.q_from;
    pinj[ti] += fl.p_to;
    qinj[ti] += fl.q_to;

    double dth = pt.va[fi] - pt.va[ti];
    rep.max_bound_violation = std::max({rep.max_bound_violation, br.ang_min - dth,
                                        dth - br.ang_max});
    if (br.s_rating > 0.0) {
      rep.max_thermal_violation =
          std::max({rep.max_thermal_violation,
                    std::hypot(fl.p_from, fl.q_from) - br.s_rating,
                    std::hypot(fl.p_to, fl.q_to) - br.s_rating});
    }
  }

  for (size_t b = 0; b < net.buses.size(); ++b) {
    const auto& bus = net.buses[b];
    double v2 = pt.vm[b] * pt.vm[b];
    double pg_total = 0.0, qg_total = 0.0;
    for (size_t g = 0; g < net.generators.size(); ++g)
      if (net.index_of(net.generators[g].bus) == static_cast<int>(b)) {
        pg_total += pt.pg[g];
        qg_total += pt.qg[g];
      }
    double rp = pg_total - bus.pd - bus.gs * v2 - pinj[b];
    double rq = qg_total - bus.qd + bus.bs * v2 - qinj[b];
    rep.max_kcl = std::max({rep.max_kcl, std::abs(rp), std::abs(rq)});
    rep.max_bound_violation = std::max({rep.max_bound_violation, bus.vmin - pt.vm[b],
                                        pt.vm[b] - bus.vmax});
  }

  for (size_t g = 0; g < net.generators.size(); ++g) {
    const auto& gen = net.generators[g];
    rep.max_bound_violation =
        std::max({rep.max_bound_violation, gen.pmin - pt.pg[g], pt.pg[g] - gen.pmax,
                  gen.qmin - pt.qg[g], pt.qg[g] - gen.qmax});
    rep.objective += gen.c2 * pt.pg[g] * pt.pg[g] + gen.c1 * pt.pg[g] + gen.c0;
  }
  rep.max_bound_violation = std::max(rep.max_bound_violation, 0.0);
  return rep;
}

// ((S_ac - S_relaxed) / S_ac) * 100
inline double optimality_gap(double ac_objective, double relaxed_objective) {
  if (!(ac_objective > 0.0))
    throw std::invalid_argument("optimality_gap: AC objective must be positive");
  return (ac_objective - relaxed_objective) / ac_objective * 100.0;
}

// --- exhaustive tiny-network oracle ----------------------------------------

struct GridSpec {
  double v_step = 1e-3;
  double th_step = 1e-3;
  int refine_factor = 10;  // one refinement pass around the incumbent
};

struct OracleResult {
  AcPoint point;
  double objective = 0.0;       // includes the imbalance charge
  double raw_objective = 0.0;   // generation cost of the incumbent alone
  double imbalance = 0.0;       // total |KCL residual| at the incumbent, p.u.
  double kcl_tolerance = 0.0;   // residual gate at the final resolution, p.u.
  double grid_tolerance = 0.0;  // objective-units slack for comparisons, $
};

namespace detail {

struct Axis {
  double lo = 0.0, step = 1.0;
  int count = 1;
  double at(int i) const { return lo + step * i; }
};

// marginal-cost split of a bus's total P over one or two generators
inline bool split_p(const std::vector<const netdata::Generator*>& gens, double total,
                    double out[2]) {
  if (gens.size() == 1) {
    out[0] = total;
    return total >= gens[0]->pmin - 1e-12 && total <= gens[0]->pmax + 1e-12;
  }
  const auto &a = *gens[0], &b = *gens[1];
  double pa;
  if (a.c2 > 0.0 && b.c2 > 0.0) {
    pa = (2.0 * b.c2 * total + b.c1 - a.c1) / (2.0 * (a.c2 + b.c2));
  } else if (a.c2 == 0.0 && b.c2 == 0.0) {
    pa = a.c1 <= b.c1 ? total - b.pmin : a.pmin;  // cheaper linear unit first
  } else if (a.c2 == 0.0) {
    pa = a.c1 <= b.c1 ? total - b.pmin : a.pmin;
  } else {
    double pb = b.c1 <= a.c1 ? total - a.pmin : b.pmin;
    pa = total - pb;
  }
  pa = std::clamp(pa, a.pmin, a.pmax);
  double pb = total - pa;
  if (pb < b.pmin - 1e-12 || pb > b.pmax + 1e-12) {
    pb = std::clamp(pb, b.pmin, b.pmax);
    pa = total - pb;
    if (pa < a.pmin - 1e-12 || pa > a.pmax + 1e-12) return false;
  }
  out[0] = pa;
  out[1] = pb;
  return true;
}

}  // namespace detail

// Exhaustive grid search over voltage magnitudes and angles for networks
// with at most 3 buses and 2 generators. Generator injections are recovered
// from KCL at their buses; non-generator buses must balance to within a
// tolerance commensurate with the grid. One refinement pass tightens the
// grid around the incumbent.
inline std::optional<OracleResult> brute_force_opf(const netdata::Network& net,
                                                   const GridSpec& grid = {}) {
  const int B = static_cast<int>(net.buses.size());
  if (B > 3 || net.generators.size() > 2)
    throw std::invalid_argument("brute_force_opf: at most 3 buses and 2 generators");
  if (B == 0) return std::nullopt;

  // per-bus generators
  std::vector<std::vector<const netdata::Generator*>> gens(B);
  for (const auto& g : net.generators) gens[net.index_of(g.bus)].push_back(&g);

  int ref = 0;
  for (int b = 0; b < B; ++b)
    if (net.buses[b].is_reference) ref = b;

  // angle boxes from a breadth-first accumulation of branch angle bounds
  std::vector<double> th_span(B, 0.0);
  {
    std::vector<bool> seen(B, false);
    seen[ref] = true;
    std::vector<int> frontier{ref};
    while (!frontier.empty()) {
      std::vector<int> next;
      for (int b : frontier)
        for (const auto& inc : net.adjacency[b]) {
          const auto& br = net.branches[inc.branch];
          int other = net.index_of(inc.at_from ? br.to_bus : br.from_bus);
          if (seen[other]) continue;
          seen[other] = true;
          double w = std::max(std::abs(br.ang_min), std::abs(br.ang_max));
          th_span[other] = std::min(th_span[b] + w, 1.4);
          next.push_back(other);
        }
      frontier = std::move(next);
    }
  }

  // KCL Lipschitz estimates for the grid-commensurate tolerance
  double vmax_all = 0.0;
  for (const auto& bus : net.buses) vmax_all = std::max(vmax_all, bus.vmax);
  double lip_v = 0.0, lip_th = 0.0;
  for (int b = 0; b < B; ++b) {
    double acc = 0.0;
    for (const auto& inc : net.adjacency[b]) {
      auto Y = detail::branch_admittance(net.branches[inc.branch]);
      acc += std::abs(Y.ff) + std::abs(Y.ft) + std::abs(Y.tf) + std::abs(Y.tt);
    }
    acc += std::abs(net.buses[b].gs) + std::abs(net.buses[b].bs);
    lip_v = std::max(lip_v, 2.0 * acc * vmax_all);
    lip_th = std::max(lip_th, acc * vmax_all * vmax_all);
  }

  // The most expensive marginal unit prices grid imbalance: every p.u. of
  // KCL residual is charged at lambda, so discretization can only raise the
  // oracle objective, never subsidize it.
  double lambda = 0.0;
  for (const auto& g : net.generators)
    lambda = std::max(lambda, 2.0 * g.c2 * std::max(std::abs(g.pmin), std::abs(g.pmax)) + g.c1);
  lambda *= 1.25;

  struct Best {
    double objective = kInf;  // charged
    double raw = kInf;
    double imbalance = 0.0;
    std::vector<double> vm, va;
    std::vector<double> pg, qg;
  };

  auto sweep = [&](const std::vector<detail::Axis>& vax, const std::vector<detail::Axis>& tax,
                   double tol) -> std::optional<Best> {
    Best best;
    // branch cos/sin lookup over integer angle-index differences
    struct Trig {
      int fi, ti;
      std::vector<double> cs, sn;
      int offset;
    };
    std::vector<Trig> trig(net.branches.size());
    for (size_t e = 0; e < net.branches.size(); ++e) {
      const auto& br = net.branches[e];
      int fi = net.index_of(br.from_bus), ti = net.index_of(br.to_bus);
      trig[e].fi = fi;
      trig[e].ti = ti;
      trig[e].offset = tax[ti].count - 1;
      int span = tax[fi].count + tax[ti].count - 1;
      trig[e].cs.resize(span);
      trig[e].sn.resize(span);
      for (int d = 0; d < span; ++d) {
        double dth = (tax[fi].lo - tax[ti].lo) + tax[fi].step * (d - trig[e].offset);
        trig[e].cs[d] = std::cos(dth);
        trig[e].sn[d] = std::sin(dth);
      }
    }

    std::vector<double> vm(B), va(B);
    std::vector<detail::BranchY> Y;
    for (const auto& br : net.branches) Y.push_back(detail::branch_admittance(br));

    auto consider = [&](const std::vector<double>& vmv, const std::vector<double>& vav,
                        const std::vector<int>& idx) {
      // branch flows
      double pinj[3] = {0, 0, 0}, qinj[3] = {0, 0, 0};
      for (size_t e = 0; e < net.branches.size(); ++e) {
        const auto& br = net.branches[e];
        int fi = trig[e].fi, ti = trig[e].ti;
        double dth = vav[fi] - vav[ti];
        if (dth < br.ang_min - 1e-12 || dth > br.ang_max + 1e-12) return;
        int d = idx[B + fi] - idx[B + ti] + trig[e].offset;
        double c = trig[e].cs[d], s = trig[e].sn[d];
        double vf = vmv[fi], vt = vmv[ti];
        std::complex<double> cross(c, s);
        std::complex<double> Sf =
            std::conj(Y[e].ff) * vf * vf + std::conj(Y[e].ft) * vf * vt * cross;
        std::complex<double> St =
            std::conj(Y[e].tt) * vt * vt + std::conj(Y[e].tf) * vf * vt * std::conj(cross);
        if (br.s_rating > 0.0 &&
            (std::norm(Sf) > br.s_rating * br.s_rating + tol ||
             std::norm(St) > br.s_rating * br.s_rating + tol))
          return;
        pinj[fi] += Sf.real();
        qinj[fi] += Sf.imag();
        pinj[ti] += St.real();
        qinj[ti] += St.imag();
      }
      double obj = 0.0, imbalance = 0.0;
      double pg2[3][2], qg2[3][2];
      for (int b = 0; b < B; ++b) {
        const auto& bus = net.buses[b];
        double v2 = vmv[b] * vmv[b];
        double need_p = bus.pd + bus.gs * v2 + pinj[b];
        double need_q = bus.qd - bus.bs * v2 + qinj[b];
        if (gens[b].empty()) {
          if (std::abs(need_p) > tol || std::abs(need_q) > tol) return;
          imbalance += std::abs(need_p) + std::abs(need_q);
          continue;
        }
        double ps[2];
        if (!detail::split_p(gens[b], need_p, ps)) return;
        double qmin = 0.0, qmax = 0.0;
        for (const auto* g : gens[b]) {
          qmin += g->qmin;
          qmax += g->qmax;
        }
        if (need_q < qmin - tol || need_q > qmax + tol) return;
        double rem = need_q;
        for (size_t gi = 0; gi < gens[b].size(); ++gi) {
          double q = std::clamp(rem - (gi + 1 < gens[b].size() ? gens[b][gi + 1]->qmin : 0.0),
                                gens[b][gi]->qmin, gens[b][gi]->qmax);
          qg2[b][gi] = q;
          rem -= q;
        }
        imbalance += std::abs(rem);  // reactive shortfall left after clamping
        for (size_t gi = 0; gi < gens[b].size(); ++gi) {
          const auto* g = gens[b][gi];
          pg2[b][gi] = ps[gi];
          obj += g->c2 * ps[gi] * ps[gi] + g->c1 * ps[gi] + g->c0;
        }
      }
      double charged = obj + lambda * imbalance;
      if (charged < best.objective) {
        best.objective = charged;
        best.raw = obj;
        best.imbalance = imbalance;
        best.vm = vmv;
        best.va = vav;
        best.pg.clear();
        best.qg.clear();
        for (int b = 0; b < B; ++b)
          for (size_t gi = 0; gi < gens[b].size(); ++gi) {
            best.pg.push_back(pg2[b][gi]);
            best.qg.push_back(qg2[b][gi]);
          }
      }
    };

    // nested loops over the axes
    std::vector<int> idx(2 * B, 0);
    while (true) {
      for (int b = 0; b < B; ++b) {
        vm[b] = vax[b].at(idx[b]);
        va[b] = tax[b].at(idx[B + b]);
      }
      consider(vm, va, idx);
      int d = 0;
      for (; d < 2 * B; ++d) {
        int cap = d < B ? vax[d].count : tax[d - B].count;
        if (++idx[d] < cap) break;
        idx[d] = 0;
      }
      if (d == 2 * B) break;
    }
    if (!std::isfinite(best.objective)) return std::nullopt;
    return best;
  };

  auto make_axes = [&](double v_step, double th_step, const Best* center, double window_v,
                       double window_th) {
    std::vector<detail::Axis> vax(B), tax(B);
    for (int b = 0; b < B; ++b) {
      double lo = net.buses[b].vmin, hi = net.buses[b].vmax;
      if (center) {
        lo = std::max(lo, center->vm[b] - window_v);
        hi = std::min(hi, center->vm[b] + window_v);
      }
      int cnt = std::max(1, static_cast<int>(std::floor((hi - lo) / v_step + 1e-9)) + 1);
      vax[b] = {lo, v_step, cnt};
      double tlo = -th_span[b], thi = th_span[b];
      if (center) {
        tlo = std::max(tlo, center->va[b] - window_th);
        thi = std::min(thi, center->va[b] + window_th);
      }
      if (b == ref) {
        tax[b] = {0.0, th_step, 1};
      } else if (!center) {
        // symmetric grid snapped so that zero is always a grid point
        int half = static_cast<int>(std::floor(thi / th_step + 1e-9));
        tax[b] = {-half * th_step, th_step, 2 * half + 1};
      } else {
        int tcnt = std::max(1, static_cast<int>(std::floor((thi - tlo) / th_step + 1e-9)) + 1);
        tax[b] = {tlo, th_step, tcnt};
      }
    }
    return std::pair(vax, tax);
  };

  double tol = lip_v * grid.v_step + lip_th * grid.th_step;
  auto [vax, tax] = make_axes(grid.v_step, grid.th_step, nullptr, 0, 0);
  auto coarse = sweep(vax, tax, tol);
  if (!coarse) return std::nullopt;

  double v2 = grid.v_step / grid.refine_factor, t2 = grid.th_step / grid.refine_factor;
  double tol2 = lip_v * v2 + lip_th * t2;
  auto [vax2, tax2] = make_axes(v2, t2, &*coarse, grid.v_step, grid.th_step);
  auto fine = sweep(vax2, tax2, tol2);
  const Best& win = fine ? *fine : *coarse;
  double win_tol = fine ? tol2 : tol;

  OracleResult res;
  res.objective = win.objective;
  res.raw_objective = win.raw;
  res.imbalance = win.imbalance;
  res.kcl_tolerance = win_tol;
  res.grid_tolerance = lambda * win.imbalance + 2e-3 * std::abs(win.objective);
  res.point.vm = win.vm;
  res.point.va = win.va;
  res.point.pg = win.pg;
  res.point.qg = win.qg;
  return res;
}

// --- cone accuracy certification -------------------------------------------

struct ConeCertificate {
  int k = 0;
  double epsilon_theory = 0.0;
  double observed = 0.0;       // max relative over-approximation across samples
  int containment_violations = 0;
  int tightness_failures = 0;
  int lp_disagreements = 0;
  bool pass = false;
};

namespace detail {

// smallest radius the emitted rows admit for the anchor values, by the
// minimal-fold walk (exact row arithmetic)
inline double required_radius(const cones::ConeBlock& blk, ColumnId r_col, double x0v,
                              double y0v, ColumnId x0, ColumnId y0) {
  std::map<ColumnId, double> vals{{x0, x0v}, {y0, y0v}};
  size_t stages = blk.rows.size() / 2;
  for (size_t i = 0; i + 1 < stages; ++i) {
    ColumnId yc = blk.new_columns[i].id;
    double lb = 0.0;
    for (size_t t = 0; t < 2; ++t) {
      const RowDraft& row = blk.rows[2 * i + t];
      double rest = 0.0, cy = 0.0;
      for (const auto& [c, v] : row.coef) {
        if (c == yc)
          cy += v;
        else
          rest += v * vals.at(c);
      }
      lb = std::max(lb, (row.rhs - rest) / cy);
    }
    vals[yc] = lb;
  }
  double req = -kInf;
  for (size_t t = 0; t < 2; ++t) {
    const RowDraft& row = blk.rows[2 * (stages - 1) + t];
    double rest = 0.0, cr = 0.0;
    for (const auto& [c, v] : row.coef) {
      if (c == r_col)
        cr += v;
      else
        rest += v * vals.at(c);
    }
    req = std::max(req, (row.rhs - rest) / cr);
  }
  return req;
}

inline bool lp_feasible(const cones::ConeBlock& blk, double rv, double xv, double yv) {
  lp::LpProblem q;
  q.add_column({rv, rv});
  q.add_column({xv, xv});
  q.add_column({yv, yv});
  for (const auto& nc : blk.new_columns) q.add_column(nc.bounds);
  ColumnId t = q.add_column({-1.0, kInf}, 1.0);
  for (const auto& row : blk.rows) {
    RowDraft r;
    r.rel = row.rel;
    r.rhs = row.rhs;
    r.coef = row.coef;
    r.coef.emplace_back(t, row.rel == Relation::LessEqual ? -1.0 : 1.0);
    q.add_row(r);
  }
  lp::SolverOptions opt;
  opt.tol.feasibility = 1e-9;
  opt.tol.optimality = 1e-9;
  auto sol = lp::solve(q, opt);
  if (sol.status != lp::SolveStatus::Optimal)
    throw std::runtime_error("cone certification phase-1 did not solve");
  return sol.objective <= 1e-8;
}

}  // namespace detail

// Sweeps the projected cone over four-quadrant directions: containment of
// boundary points, infeasibility beyond (1 + 2 eps), and the maximal
// admitted radius per direction (the observed over-approximation). A small
// set of phase-1 LP solves cross-checks the row walk.
inline ConeCertificate certify_cone(int k, int samples = 10000) {
  ConeCertificate cert;
  cert.k = k;
  cert.epsilon_theory = cones::epsilon(k);

  ColumnAllocator alloc;
  ColumnId r = alloc.allocate(), x0 = alloc.allocate(), y0 = alloc.allocate();
  auto blk = cones::soc3(r, x0, y0, k, alloc);

  const double two_pi = 2.0 * 3.14159265358979323846;
  for (int i = 0; i < samples; ++i) {
    double phi = two_pi * i / samples;
    double c = std::cos(phi), s = std::sin(phi);
    for (double rho : {1.0, 0.1, 10.0}) {
      double g = detail::required_radius(blk, r, rho * c, rho * s, x0, y0);
      if (i % 4 == 0 || rho == 1.0) {
        if (g > rho * (1 + 1e-14)) ++cert.containment_violations;
      }
      if (rho == 1.0) {
        cert.observed = std::max(cert.observed, 1.0 / g - 1.0);
        double gout = detail::required_radius(blk, r, (1 + 2 * cert.epsilon_theory) * c,
                                              (1 + 2 * cert.epsilon_theory) * s, x0, y0);
        if (gout <= 1.0) ++cert.tightness_failures;
      }
    }
  }

  // LP cross-check at a handful of directions, at margins the phase-1 LP
  // resolves regardless of k
  for (int i = 0; i < 8; ++i) {
    double phi = two_pi * (i + 0.37) / 8.0;
    double c = std::cos(phi), s = std::sin(phi);
    double rho_star = 1.0 / detail::required_radius(blk, r, c, s, x0, y0);
    if (detail::lp_feasible(blk, 1.0, rho_star * (1 - 1e-4) * c, rho_star * (1 - 1e-4) * s) !=
        true)
      ++cert.lp_disagreements;
    if (detail::lp_feasible(blk, 1.0, rho_star * (1 + 1e-4) * c, rho_star * (1 + 1e-4) * s) !=
        false)
      ++cert.lp_disagreements;
  }

  cert.pass = cert.observed <= cert.epsilon_theory * (1 + 1e-6) &&
              cert.containment_violations == 0 && cert.tightness_failures == 0 &&
              cert.lp_disagreements == 0;
  return cert;
}

// --- AC reference fixtures ---------------------------------------------------

struct Fixture {
  std::string case_name;
  std::string source;  // paper | derived-external | derived-bruteforce
  double ac_objective = 0.0;
  std::string notes;
};

inline std::map<std::string, Fixture> load_fixtures(const std::string& json_text) {
  std::map<std::string, Fixture> out;
  auto j = nlohmann::json::parse(json_text);
  for (const auto& e : j.at("fixtures")) {
    Fixture f;
    f.case_name = e.at("case").get<std::string>();
    f.source = e.at("source").get<std::string>();
    f.ac_objective = e.at("ac_objective").get<double>();
    f.notes = e.value("notes", "");
    out[f.case_name] = f;
  }
  return out;
}

}  // namespace opfbound::verify
