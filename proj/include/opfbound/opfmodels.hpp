#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "opfbound/cones.hpp"
#include "opfbound/core.hpp"
#include "opfbound/hulls.hpp"
#include "opfbound/lp.hpp"
#include "opfbound/netdata.hpp"

namespace opfbound::models {

struct ApproxConfig {
  int k = 16;  // cone stages
  int l = 20;  // square tangents
  int s = 20;  // cosine tangents
  double feasibility_tol = 1e-8;
  double optimality_tol = 1e-8;
  // quadratic-backed cosine envelope in addition to the tangent polyhedron
  bool use_cosine_envelope = false;

  void check() const {
    if (k < 2) throw std::invalid_argument("ApproxConfig: k must be >= 2");
    if (l < 1) throw std::invalid_argument("ApproxConfig: l must be >= 1");
    if (s < 1) throw std::invalid_argument("ApproxConfig: s must be >= 1");
  }
};

// Real coefficients of the four branch flow equations over
// (W_ii, W^r, W^i) and (W_jj, W^r, W^i).
struct FlowCoeffs {
  double a1, a2, a3;  // P_ij
  double b1, b2, b3;  // Q_ij
  double c1, c2, c3;  // P_ji
  double d1, d2, d3;  // Q_ji
};

inline FlowCoeffs flow_coefficients(const netdata::Branch& br) {
  const std::complex<double> ys = std::conj(br.series_admittance);
  const std::complex<double> T = br.complex_tap();
  const std::complex<double> half_sh(0.0, br.shunt_susceptance / 2.0);
  const double t2 = std::norm(T);

  const std::complex<double> from_self = (ys - half_sh) / t2;
  const std::complex<double> from_cross = ys / T;
  const std::complex<double> to_self = ys - half_sh;
  const std::complex<double> to_cross = ys / std::conj(T);

  FlowCoeffs f;
  f.a1 = from_self.real();
  f.a2 = -from_cross.real();
  f.a3 = from_cross.imag();
  f.b1 = from_self.imag();
  f.b2 = -from_cross.imag();
  f.b3 = -from_cross.real();
  f.c1 = to_self.real();
  f.c2 = -to_cross.real();
  f.c3 = -to_cross.imag();
  f.d1 = to_self.imag();
  f.d2 = -to_cross.imag();
  f.d3 = to_cross.real();
  return f;
}

// Pairs of quadratic-cost generators (by generator index); the second slot
// of the last pair is -1 when the count is odd.
struct PairingPlan {
  std::vector<std::pair<int, int>> pairs;
  int quadratic_count = 0;
};

inline PairingPlan pair_generators(const netdata::Network& net) {
  PairingPlan plan;
  std::vector<int> quads;
  for (int g = 0; g < static_cast<int>(net.generators.size()); ++g)
    if (net.generators[g].c2 > 0.0) quads.push_back(g);
  plan.quadratic_count = static_cast<int>(quads.size());
  for (size_t i = 0; i < quads.size(); i += 2)
    plan.pairs.emplace_back(quads[i], i + 1 < quads.size() ? quads[i + 1] : -1);
  return plan;
}

enum class ModelKind { Lp0, LpS };

// Column layout shared by both models: semantic columns first (identical
// indices across LP-0 and LP-S up to alpha), LP-S structural extras next,
// lifted cone/hull columns last, in block emission order.
struct VariableMap {
  ModelKind model = ModelKind::Lp0;
  std::vector<ColumnId> w_ii;                      // per bus
  std::vector<ColumnId> wr, wi;                    // per branch
  std::vector<ColumnId> p_from, q_from, p_to, q_to;  // per branch
  std::vector<ColumnId> pg, qg;                    // per generator
  std::vector<ColumnId> pg_scaled;                 // per generator, -1 if linear cost
  std::vector<ColumnId> alpha;                     // per pair
  // LP-S extras (empty for LP-0)
  std::vector<ColumnId> v, theta;        // per bus
  std::vector<ColumnId> w_vv, x_c, x_s;  // per branch
  int semantic_columns = 0;  // column count before any lifted cone/hull column
  int total_columns = 0;
  std::vector<std::string> names;  // one entry per column

  const std::string& name(ColumnId c) const { return names.at(c); }
};

struct BuildResult {
  lp::LpProblem problem;
  VariableMap vars;
  int cone_rows = 0;  // rows emitted by cone blocks (inequalities + couplings)
  int hull_rows = 0;  // rows emitted by hull blocks (LP-S)
};

namespace detail {

class Builder {
 public:
  Builder(const netdata::Network& net, const ApproxConfig& cfg, ModelKind kind)
      : net_(net), cfg_(cfg), plan_(pair_generators(net)) {
    cfg.check();
    auto violations = netdata::validate(net);
    if (!violations.empty())
      throw std::invalid_argument("network failed validation: " + violations.front());
    out_.vars.model = kind;
  }

  // Emission order: the LP-0 rows come first in both models, so the LP-S
  // row list extends the LP-0 one (lifted column ids shifted by the extra
  // structural columns).
  BuildResult build(bool lps) {
    add_semantic_columns(lps);
    add_shared_rows();
    add_shared_cones();
    if (lps) {
      add_polar_rows();
      add_hull_blocks();
    }
    out_.vars.total_columns = p_.num_cols();
    set_objective();
    check_budget(lps);
    out_.problem = std::move(p_);
    return std::move(out_);
  }

 private:
  const netdata::Network& net_;
  const ApproxConfig& cfg_;
  PairingPlan plan_;
  lp::LpProblem p_;
  ColumnAllocator alloc_;
  BuildResult out_;

  VariableMap& vm() { return out_.vars; }

  ColumnId col(VarBounds b, std::string name) {
    ColumnId c = p_.add_column(b);
    ColumnId a = alloc_.allocate();
    if (a != c) throw std::logic_error("allocator out of sync");
    vm().names.push_back(std::move(name));
    return c;
  }

  void apply_block(const ConstraintBlock& blk, const std::string& prefix) {
    p_.apply(blk);
    for (size_t i = vm().names.size(); i < static_cast<size_t>(p_.num_cols()); ++i)
      vm().names.push_back(prefix + "#" + std::to_string(i));
    while (alloc_.peek() < p_.num_cols()) alloc_.allocate();
  }

  double sym_angle_bound(const netdata::Branch& br) const {
    return std::max(std::abs(br.ang_min), std::abs(br.ang_max));
  }

  void add_semantic_columns(bool lps) {
    const auto& net = net_;
    for (const auto& bus : net.buses)
      vm().w_ii.push_back(col({bus.vmin * bus.vmin, bus.vmax * bus.vmax},
                              "Wii[" + std::to_string(bus.id) + "]"));
    for (size_t e = 0; e < net.branches.size(); ++e) {
      std::string tag = std::to_string(e);
      vm().wr.push_back(col({-kInf, kInf}, "Wr[" + tag + "]"));
      vm().wi.push_back(col({-kInf, kInf}, "Wi[" + tag + "]"));
      vm().p_from.push_back(col({-kInf, kInf}, "Pij[" + tag + "]"));
      vm().q_from.push_back(col({-kInf, kInf}, "Qij[" + tag + "]"));
      vm().p_to.push_back(col({-kInf, kInf}, "Pji[" + tag + "]"));
      vm().q_to.push_back(col({-kInf, kInf}, "Qji[" + tag + "]"));
    }
    for (size_t g = 0; g < net.generators.size(); ++g) {
      const auto& gen = net.generators[g];
      std::string tag = std::to_string(g);
      vm().pg.push_back(col({gen.pmin, gen.pmax}, "Pg[" + tag + "]"));
      vm().qg.push_back(col({gen.qmin, gen.qmax}, "Qg[" + tag + "]"));
    }
    for (size_t g = 0; g < net.generators.size(); ++g) {
      const auto& gen = net.generators[g];
      if (gen.c2 > 0.0) {
        double sq = std::sqrt(gen.c2);
        vm().pg_scaled.push_back(
            col({sq * gen.pmin, sq * gen.pmax}, "pg[" + std::to_string(g) + "]"));
      } else {
        vm().pg_scaled.push_back(-1);
      }
    }
    for (size_t n = 0; n < plan_.pairs.size(); ++n)
      vm().alpha.push_back(col({0.0, kInf}, "alpha[" + std::to_string(n) + "]"));

    if (lps) {
      for (const auto& bus : net.buses) {
        std::string tag = std::to_string(bus.id);
        vm().v.push_back(col({bus.vmin, bus.vmax}, "v[" + tag + "]"));
        bool ref = bus.is_reference;
        vm().theta.push_back(col(ref ? VarBounds{0.0, 0.0} : VarBounds{-kInf, kInf},
                                 "theta[" + tag + "]"));
      }
      for (size_t e = 0; e < net.branches.size(); ++e) {
        const auto& br = net.branches[e];
        std::string tag = std::to_string(e);
        int fi = net.index_of(br.from_bus), ti = net.index_of(br.to_bus);
        double wlo = net.buses[fi].vmin * net.buses[ti].vmin;
        double whi = net.buses[fi].vmax * net.buses[ti].vmax;
        double xbar = sym_angle_bound(br);
        vm().w_vv.push_back(col({wlo, whi}, "w[" + tag + "]"));
        vm().x_c.push_back(col({std::cos(xbar), 1.0}, "xc[" + tag + "]"));
        vm().x_s.push_back(
            col({std::sin(br.ang_min), std::sin(br.ang_max)}, "xs[" + tag + "]"));
      }
    }
    vm().semantic_columns = p_.num_cols();
  }

  // KCL, flow definitions, W-space angle rows, epigraph coupling
  void add_shared_rows() {
    const auto& net = net_;
    for (size_t b = 0; b < net.buses.size(); ++b) {
      const auto& bus = net.buses[b];
      RowDraft prow = make_row(Relation::Equal, bus.pd);
      RowDraft qrow = make_row(Relation::Equal, bus.qd);
      for (size_t g = 0; g < net.generators.size(); ++g) {
        if (net.index_of(net.generators[g].bus) != static_cast<int>(b)) continue;
        prow.coef.emplace_back(vm().pg[g], 1.0);
        qrow.coef.emplace_back(vm().qg[g], 1.0);
      }
      for (const auto& inc : net.adjacency[b]) {
        prow.coef.emplace_back(inc.at_from ? vm().p_from[inc.branch] : vm().p_to[inc.branch],
                               -1.0);
        qrow.coef.emplace_back(inc.at_from ? vm().q_from[inc.branch] : vm().q_to[inc.branch],
                               -1.0);
      }
      if (bus.gs != 0.0) prow.coef.emplace_back(vm().w_ii[b], -bus.gs);
      if (bus.bs != 0.0) qrow.coef.emplace_back(vm().w_ii[b], bus.bs);
      p_.add_row(prow);
      p_.add_row(qrow);
    }

    for (size_t e = 0; e < net.branches.size(); ++e) {
      const auto& br = net.branches[e];
      FlowCoeffs f = flow_coefficients(br);
      int fi = net.index_of(br.from_bus), ti = net.index_of(br.to_bus);
      auto def = [&](ColumnId flow, ColumnId wself, double s1, double s2, double s3) {
        RowDraft r = make_row(Relation::Equal, 0.0);
        r.coef = {{flow, 1.0}, {wself, -s1}, {vm().wr[e], -s2}, {vm().wi[e], -s3}};
        p_.add_row(r);
      };
      def(vm().p_from[e], vm().w_ii[fi], f.a1, f.a2, f.a3);
      def(vm().q_from[e], vm().w_ii[fi], f.b1, f.b2, f.b3);
      def(vm().p_to[e], vm().w_ii[ti], f.c1, f.c2, f.c3);
      def(vm().q_to[e], vm().w_ii[ti], f.d1, f.d2, f.d3);

      // tan(ang_min) W^r <= W^i <= tan(ang_max) W^r
      RowDraft lo = make_row(Relation::GreaterEqual, 0.0);
      lo.coef = {{vm().wi[e], 1.0}, {vm().wr[e], -std::tan(br.ang_min)}};
      p_.add_row(lo);
      RowDraft hi = make_row(Relation::LessEqual, 0.0);
      hi.coef = {{vm().wi[e], 1.0}, {vm().wr[e], -std::tan(br.ang_max)}};
      p_.add_row(hi);
    }

    for (size_t g = 0; g < net.generators.size(); ++g) {
      if (vm().pg_scaled[g] < 0) continue;
      RowDraft r = make_row(Relation::Equal, 0.0);
      r.coef = {{vm().pg_scaled[g], 1.0}, {vm().pg[g], -std::sqrt(net.generators[g].c2)}};
      p_.add_row(r);
    }
  }

  // angle boxes, voltage/cosine/sine linking rows (LP-S only)
  void add_polar_rows() {
    const auto& net = net_;
    for (size_t e = 0; e < net.branches.size(); ++e) {
      const auto& br = net.branches[e];
      int fi = net.index_of(br.from_bus), ti = net.index_of(br.to_bus);
      Affine dtheta = Affine::diff(vm().theta[fi], vm().theta[ti]);
      RowDraft lo = make_row(Relation::GreaterEqual, br.ang_min);
      lo.add(dtheta);
      p_.add_row(lo);
      RowDraft hi = make_row(Relation::LessEqual, br.ang_max);
      hi.add(dtheta);
      p_.add_row(hi);
    }
  }

  void add_shared_cones() {
    const auto& net = net_;
    const int k = cfg_.k;
    for (size_t e = 0; e < net.branches.size(); ++e) {
      const auto& br = net.branches[e];
      int fi = net.index_of(br.from_bus), ti = net.index_of(br.to_bus);
      auto blk = cones::soc4_rotated(vm().w_ii[fi], vm().w_ii[ti], vm().wr[e], vm().wi[e], k,
                                     alloc_);
      out_.cone_rows += static_cast<int>(blk.rows.size());
      apply_block(blk, "Wcone[" + std::to_string(e) + "]");
    }
    for (size_t n = 0; n < plan_.pairs.size(); ++n) {
      auto [g1, g2] = plan_.pairs[n];
      Affine second = g2 >= 0 ? Affine(vm().pg_scaled[g2]) : Affine::value(0.0);
      auto blk = cones::soc4_rotated(vm().alpha[n], Affine::value(1.0),
                                     Affine(vm().pg_scaled[g1]), second, k, alloc_);
      out_.cone_rows += static_cast<int>(blk.rows.size());
      apply_block(blk, "ObjCone[" + std::to_string(n) + "]");
    }
    for (size_t e = 0; e < net.branches.size(); ++e) {
      const auto& br = net.branches[e];
      if (br.s_rating <= 0.0) continue;  // unlimited
      auto from_blk = cones::soc3(Affine::value(br.s_rating), vm().p_from[e], vm().q_from[e], k,
                                  alloc_);
      out_.cone_rows += static_cast<int>(from_blk.rows.size());
      apply_block(from_blk, "Thermal_f[" + std::to_string(e) + "]");
      auto to_blk =
          cones::soc3(Affine::value(br.s_rating), vm().p_to[e], vm().q_to[e], k, alloc_);
      out_.cone_rows += static_cast<int>(to_blk.rows.size());
      apply_block(to_blk, "Thermal_t[" + std::to_string(e) + "]");
    }
  }

  void add_hull_blocks() {
    const auto& net = net_;
    for (size_t b = 0; b < net.buses.size(); ++b) {
      const auto& bus = net.buses[b];
      auto blk = hulls::square_polyhedron(vm().w_ii[b], vm().v[b], {bus.vmin, bus.vmax}, cfg_.l);
      out_.hull_rows += static_cast<int>(blk.rows.size());
      apply_block(blk, "Vsq[" + std::to_string(b) + "]");
    }
    for (size_t e = 0; e < net.branches.size(); ++e) {
      const auto& br = net.branches[e];
      int fi = net.index_of(br.from_bus), ti = net.index_of(br.to_bus);
      Affine dtheta = Affine::diff(vm().theta[fi], vm().theta[ti]);
      double xbar = sym_angle_bound(br);
      std::string tag = std::to_string(e);

      auto cospoly =
          hulls::cosine_polyhedron(vm().x_c[e], dtheta, br.ang_min, br.ang_max, cfg_.s);
      out_.hull_rows += static_cast<int>(cospoly.rows.size());
      apply_block(cospoly, "CosP[" + tag + "]");

      if (cfg_.use_cosine_envelope) {
        auto cosenv = hulls::cosine_envelope(vm().x_c[e], dtheta, xbar, alloc_, cfg_.l);
        out_.hull_rows += static_cast<int>(cosenv.rows.size());
        apply_block(cosenv, "CosEnv[" + tag + "]");
      }

      auto sinenv = hulls::sine_envelope(vm().x_s[e], dtheta, xbar);
      out_.hull_rows += static_cast<int>(sinenv.rows.size());
      apply_block(sinenv, "SinEnv[" + tag + "]");

      const auto& fb = net.buses[fi];
      const auto& tb = net.buses[ti];
      VarBounds vb_f{fb.vmin, fb.vmax}, vb_t{tb.vmin, tb.vmax};
      VarBounds wb{fb.vmin * tb.vmin, fb.vmax * tb.vmax};
      auto mc_w = hulls::mccormick(vm().w_vv[e], vm().v[fi], vm().v[ti], vb_f, vb_t);
      out_.hull_rows += static_cast<int>(mc_w.rows.size());
      apply_block(mc_w, "McW[" + tag + "]");

      auto mc_wr = hulls::mccormick(vm().wr[e], vm().w_vv[e], vm().x_c[e], wb,
                                    {std::cos(xbar), 1.0});
      out_.hull_rows += static_cast<int>(mc_wr.rows.size());
      apply_block(mc_wr, "McWr[" + tag + "]");

      auto mc_wi = hulls::mccormick(vm().wi[e], vm().w_vv[e], vm().x_s[e], wb,
                                    {std::sin(br.ang_min), std::sin(br.ang_max)});
      out_.hull_rows += static_cast<int>(mc_wi.rows.size());
      apply_block(mc_wi, "McWi[" + tag + "]");
    }
  }

  void set_objective() {
    for (ColumnId a : vm().alpha) p_.set_objective(a, 1.0);
    for (size_t g = 0; g < net_.generators.size(); ++g) {
      p_.set_objective(vm().pg[g], net_.generators[g].c1);
      p_.add_objective_constant(net_.generators[g].c0);
    }
  }

  // closed-form row/column budget check
  void check_budget(bool lps) {
    const int k = cfg_.k;
    const auto B = static_cast<int>(net_.buses.size());
    const auto L = static_cast<int>(net_.branches.size());
    const auto G = static_cast<int>(net_.generators.size());
    const int Gq = plan_.quadratic_count;
    const int N = static_cast<int>(plan_.pairs.size());
    int rated = 0;
    for (const auto& br : net_.branches) rated += br.s_rating > 0.0 ? 1 : 0;

    int cols = B + 6 * L + 2 * G + Gq + N;
    int rows = 2 * B + 4 * L + 2 * L + Gq;
    cols += (L + N) * (2 * k + 2) + 2 * rated * (k - 1);
    rows += (L + N) * (4 * k + 3) + 2 * rated * 2 * k;
    if (lps) {
      cols += 2 * B + 3 * L;
      rows += 2 * L;                        // angle boxes
      rows += B * (cfg_.l + 1);             // voltage square polyhedra
      rows += L * (cfg_.s + 1);             // cosine polyhedra
      rows += L * 2;                        // sine envelopes
      rows += L * 12;                       // three McCormick blocks
      if (cfg_.use_cosine_envelope) {
        cols += L;
        rows += L * (cfg_.l + 3);
      }
    }
    if (p_.num_cols() != cols)
      throw std::logic_error("column budget mismatch: built " + std::to_string(p_.num_cols()) +
                             ", expected " + std::to_string(cols));
    if (p_.num_rows() != rows)
      throw std::logic_error("row budget mismatch: built " + std::to_string(p_.num_rows()) +
                             ", expected " + std::to_string(rows));
  }
};

}  // namespace detail

inline BuildResult build_lp0(const netdata::Network& net, const ApproxConfig& cfg) {
  return detail::Builder(net, cfg, ModelKind::Lp0).build(false);
}

inline BuildResult build_lps(const netdata::Network& net, const ApproxConfig& cfg) {
  return detail::Builder(net, cfg, ModelKind::LpS).build(true);
}

}  // namespace opfbound::models
