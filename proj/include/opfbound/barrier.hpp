#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include "opfbound/lp.hpp"

namespace opfbound::lp {

struct SolverOptions {
  Tolerances tol;
  int max_iter = 200;
  // Columns denser than this fraction of the rows are split into chained
  // copies; with the augmented system this is a safeguard, not a need.
  double dense_split_fraction = 0.30;
  int dense_split_min_rows = 200;
  bool verbose = false;
};

namespace ipm {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

// Internal equality form: min c'x, Ax = b with x >= 0, x in [0, u] or x
// free, column-wise. Kept equilibrated; unscaled copies feed the
// certificates.
struct Internal {
  int n = 0, m = 0;
  SpMat A;
  Vec b, c, upper;
  Vec b_un, c_un, upper_un;
  Vec row_eq, col_eq;  // Ruiz scales: A = diag(row_eq) * A_un * diag(col_eq)
  std::vector<bool> boxed;   // has an upper bound
  std::vector<bool> lower;   // has the zero lower bound (false: free)
  std::vector<int> std_col;  // std col -> internal col
  int num_std_rows = 0;
};

inline Internal build_internal(const StandardForm& sf, const SolverOptions& opt) {
  Internal in;
  in.num_std_rows = sf.m;
  std::vector<std::vector<std::pair<int, double>>> cols;
  std::vector<double> upper, cost;
  std::vector<bool> boxed, lower;

  auto push_col = [&](double cst, bool low, bool box, double up) {
    cols.emplace_back();
    cost.push_back(cst);
    lower.push_back(low);
    boxed.push_back(box);
    upper.push_back(up);
    return static_cast<int>(cols.size()) - 1;
  };

  in.std_col.assign(sf.n, -1);
  for (int j = 0; j < sf.n; ++j) {
    bool box = sf.kind[j] == ColKind::Boxed;
    bool low = sf.kind[j] != ColKind::Free;
    in.std_col[j] = push_col(sf.c[j], low, box, box ? sf.upper[j] : kInf);
    for (int t = sf.col_ptr[j]; t < sf.col_ptr[j + 1]; ++t)
      cols[in.std_col[j]].emplace_back(sf.row_ind[t], sf.val[t]);
  }

  std::vector<double> b(sf.b.begin(), sf.b.end());

  // dense-column splitting: chunk the column and chain the copies with
  // equality rows x_k - x_{k+1} = 0
  if (sf.m >= opt.dense_split_min_rows) {
    const size_t limit = static_cast<size_t>(opt.dense_split_fraction * sf.m);
    const size_t ncols0 = cols.size();
    for (size_t j = 0; j < ncols0 && limit > 0; ++j) {
      if (cols[j].size() <= limit) continue;
      std::vector<std::pair<int, double>> entries;
      entries.swap(cols[j]);
      size_t chunks = (entries.size() + limit - 1) / limit;
      int prev = static_cast<int>(j);
      for (size_t k = 0; k < chunks; ++k) {
        int cur = k == 0 ? prev : push_col(0.0, lower[j], boxed[j], upper[j]);
        for (size_t t = k * limit; t < std::min(entries.size(), (k + 1) * limit); ++t)
          cols[cur].push_back(entries[t]);
        if (k > 0) {
          int chain_row = static_cast<int>(b.size());
          b.push_back(0.0);
          cols[prev].emplace_back(chain_row, 1.0);
          cols[cur].emplace_back(chain_row, -1.0);
        }
        prev = cur;
      }
    }
  }

  in.n = static_cast<int>(cols.size());
  in.m = static_cast<int>(b.size());
  in.b_un = Eigen::Map<Vec>(b.data(), in.m);
  in.c_un = Eigen::Map<Vec>(cost.data(), in.n);
  in.upper_un = Eigen::Map<Vec>(upper.data(), in.n);
  in.boxed = std::move(boxed);
  in.lower = std::move(lower);

  std::vector<Eigen::Triplet<double>> trips;
  for (int j = 0; j < in.n; ++j)
    for (const auto& [r, v] : cols[j]) trips.emplace_back(r, j, v);
  in.A.resize(in.m, in.n);
  in.A.setFromTriplets(trips.begin(), trips.end());
  in.A.makeCompressed();

  // Ruiz equilibration
  in.row_eq = Vec::Ones(in.m);
  in.col_eq = Vec::Ones(in.n);
  for (int pass = 0; pass < 8; ++pass) {
    Vec rmax = Vec::Zero(in.m), cmax = Vec::Zero(in.n);
    for (int j = 0; j < in.A.outerSize(); ++j)
      for (SpMat::InnerIterator it(in.A, j); it; ++it) {
        double a = std::abs(it.value());
        rmax[it.row()] = std::max(rmax[it.row()], a);
        cmax[j] = std::max(cmax[j], a);
      }
    bool done = true;
    Vec rs(in.m), cs(in.n);
    for (int i = 0; i < in.m; ++i) {
      rs[i] = rmax[i] > 0 ? 1.0 / std::sqrt(rmax[i]) : 1.0;
      if (rmax[i] > 0 && (rmax[i] > 1.9 || rmax[i] < 0.52)) done = false;
    }
    for (int j = 0; j < in.n; ++j) {
      cs[j] = cmax[j] > 0 ? 1.0 / std::sqrt(cmax[j]) : 1.0;
      if (cmax[j] > 0 && (cmax[j] > 1.9 || cmax[j] < 0.52)) done = false;
    }
    in.A = rs.asDiagonal() * in.A * cs.asDiagonal();
    in.row_eq = in.row_eq.cwiseProduct(rs);
    in.col_eq = in.col_eq.cwiseProduct(cs);
    if (done) break;
  }
  in.A.makeCompressed();
  in.b = in.row_eq.cwiseProduct(in.b_un);
  in.c = in.col_eq.cwiseProduct(in.c_un);
  in.upper = Vec(in.n);
  for (int j = 0; j < in.n; ++j)
    in.upper[j] = in.boxed[j] ? in.upper_un[j] / in.col_eq[j] : kInf;
  return in;
}

struct Iterate {
  Vec x, w, y, z, s;  // w, s on boxed columns; z on lower-bounded ones
};

inline double max_step(const Vec& v, const Vec& dv, const std::vector<bool>& mask) {
  double a = 1.0;
  for (int j = 0; j < v.size(); ++j) {
    if (!mask[j]) continue;
    if (dv[j] < 0.0) a = std::min(a, -v[j] / dv[j]);
  }
  return a;
}

// Regularized augmented (KKT) system
//   [ -(Theta^-1 + rho I)    A'     ] [dx]   [ g  ]
//   [   A                  delta I  ] [dy] = [ rb ],
// factored by no-pivot LDL' with a fill-reducing ordering computed once;
// solves are refined against the unregularized system. Free columns carry
// Theta^-1 = 0 exactly, so no splitting is needed.
class KktSolver {
 public:
  void setup(const Internal& in) {
    in_ = &in;
    nm_ = in.n + in.m;
    K_.resize(nm_, nm_);
    trips_.reserve(nm_ + in.A.nonZeros());
  }

  bool factorize(const Vec& theta_inv, double rho, double delta) {
    trips_.clear();
    const Internal& in = *in_;
    for (int j = 0; j < in.n; ++j) trips_.emplace_back(j, j, -(theta_inv[j] + rho));
    for (int j = 0; j < in.A.outerSize(); ++j)
      for (SpMat::InnerIterator it(in.A, j); it; ++it)
        trips_.emplace_back(in.n + static_cast<int>(it.row()), j, it.value());
    for (int i = 0; i < in.m; ++i) trips_.emplace_back(in.n + i, in.n + i, delta);
    K_.setFromTriplets(trips_.begin(), trips_.end());
    if (!analyzed_) {
      chol_.analyzePattern(K_);
      analyzed_ = true;
    }
    chol_.factorize(K_);
    theta_inv_ = theta_inv;
    return chol_.info() == Eigen::Success;
  }

  // solve for (dx, dy) given the dual rhs g and primal rhs rb
  void solve(const Vec& g, const Vec& rb, Vec& dx, Vec& dy) const {
    const Internal& in = *in_;
    Vec rhs(nm_);
    rhs.head(in.n) = g;
    rhs.tail(in.m) = rb;
    Vec sol = chol_.solve(rhs);
    Vec best = sol;
    double best_rn = kInf, prev_rn = kInf;
    const double rhs_norm = rhs.cwiseAbs().maxCoeff() + 1e-300;
    for (int pass = 0; pass <= 10; ++pass) {
      Vec r = residual(rhs, sol);
      double rn = r.cwiseAbs().maxCoeff();
      if (rn < best_rn) {
        best_rn = rn;
        best = sol;
      }
      if (rn <= 1e-14 * rhs_norm) break;
      if (pass > 0 && rn > 0.5 * prev_rn) break;  // stagnating
      prev_rn = rn;
      sol += chol_.solve(r);
    }
    dx = best.head(in.n);
    dy = best.tail(in.m);
  }

 private:
  Vec residual(const Vec& rhs, const Vec& sol) const {
    const Internal& in = *in_;
    Vec dx = sol.head(in.n), dy = sol.tail(in.m);
    Vec r(nm_);
    r.head(in.n) = rhs.head(in.n) + theta_inv_.cwiseProduct(dx) - in.A.transpose() * dy;
    r.tail(in.m) = rhs.tail(in.m) - in.A * dx;
    return r;
  }

  const Internal* in_ = nullptr;
  int nm_ = 0;
  SpMat K_;
  std::vector<Eigen::Triplet<double>> trips_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> chol_;
  bool analyzed_ = false;
  Vec theta_inv_;
};

}  // namespace ipm

// Deterministic primal-dual barrier solve: Mehrotra predictor-corrector
// steps on the regularized augmented system, ordering computed once, Ruiz
// equilibration before the loop and unscaled certificates after it.
inline Solution solve(const LpProblem& p, const SolverOptions& opt = {}) {
  using ipm::SpMat;
  using ipm::Vec;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  const Tolerances& tol = opt.tol;
  auto finish = [&](SolveStatus st, double obj, std::vector<double> x, std::vector<double> y,
                    int iters, double rp, double rd, double gap) {
    return Solution(st, obj, std::move(x), std::move(y), iters, elapsed(), rp, rd, gap, tol);
  };
  auto fail = [&](SolveStatus st, int iters) {
    return finish(st, 0.0, std::vector<double>(p.num_cols(), 0.0),
                  std::vector<double>(p.num_rows(), 0.0), iters, kInf, kInf, kInf);
  };

  // deterministic prechecks: crossing bounds and singleton-row implied
  // bounds give an immediate Infeasible
  {
    std::vector<double> lo(p.num_cols()), hi(p.num_cols());
    for (int j = 0; j < p.num_cols(); ++j) {
      lo[j] = p.lower_bound(j);
      hi[j] = p.upper_bound(j);
      if (lo[j] > hi[j]) return fail(SolveStatus::Infeasible, 0);
    }
    for (int pass = 0; pass < 4; ++pass) {
      bool changed = false;
      for (const auto& row : p.rows()) {
        int nz = 0;
        ColumnId col = 0;
        double a = 0.0;
        for (const auto& [c, v] : row.coef)
          if (v != 0.0) {
            ++nz;
            col = c;
            a = v;
          }
        if (nz != 1) continue;
        double v = row.rhs / a;
        bool up = (row.rel == Relation::LessEqual) == (a > 0.0);
        if (row.rel == Relation::Equal) {
          if (v > lo[col]) lo[col] = v, changed = true;
          if (v < hi[col]) hi[col] = v, changed = true;
        } else if (up) {
          if (v < hi[col]) hi[col] = v, changed = true;
        } else {
          if (v > lo[col]) lo[col] = v, changed = true;
        }
        if (lo[col] > hi[col]) return fail(SolveStatus::Infeasible, 0);
      }
      if (!changed) break;
    }
  }

  StandardForm sf;
  try {
    sf = to_standard_form(p);
  } catch (const BoundsInfeasibleError&) {
    return fail(SolveStatus::Infeasible, 0);
  }

  // bounds-only problem: rows may still exist if all their columns were
  // fixed; verify them directly
  if (sf.n == 0 || sf.m == 0) {
    for (int i = 0; i < sf.m; ++i)
      if (std::abs(sf.b[i]) > tol.feasibility * (1.0 + std::abs(sf.b[i])))
        return fail(SolveStatus::Infeasible, 0);
    std::vector<double> xs(sf.n, 0.0);
    double obj = sf.c0;
    for (int j = 0; j < sf.n; ++j) {
      double cj = sf.c[j];
      if (cj > 0.0) {
        xs[j] = 0.0;
        if (sf.kind[j] == ColKind::Free) return fail(SolveStatus::Unbounded, 0);
      } else if (cj < 0.0) {
        if (sf.kind[j] != ColKind::Boxed) return fail(SolveStatus::Unbounded, 0);
        xs[j] = sf.upper[j];
      }
      obj += cj * xs[j];
    }
    return finish(SolveStatus::Optimal, obj, sf.to_original_point(xs),
                  std::vector<double>(p.num_rows(), 0.0), 0, 0.0, 0.0, 0.0);
  }

  ipm::Internal in = ipm::build_internal(sf, opt);
  const int n = in.n, m = in.m;
  const std::vector<bool>& boxed = in.boxed;
  const std::vector<bool>& lower = in.lower;
  int comp_terms = 0;
  for (int j = 0; j < n; ++j) comp_terms += (lower[j] ? 1 : 0) + (boxed[j] ? 1 : 0);
  if (comp_terms == 0) comp_terms = 1;

  SpMat AT = in.A.transpose();
  ipm::KktSolver kkt;
  kkt.setup(in);

  // regularization follows the path: strong while centering, relaxed near
  // convergence so it stops limiting the achievable gap
  double reg_scale = 1e-8;
  auto factorize = [&](const Vec& theta_inv) {
    for (int attempt = 0; attempt < 4; ++attempt) {
      double reg = reg_scale * std::pow(100.0, attempt);
      if (kkt.factorize(theta_inv, reg, reg)) return true;
    }
    return false;
  };

  // --- starting point: least-squares anchors, Mehrotra-style shifts ---
  ipm::Iterate it;
  {
    if (!factorize(Vec::Ones(n))) return fail(SolveStatus::NumericalFailure, 0);
    Vec dx, dy;
    kkt.solve(Vec::Zero(n), in.b, dx, dy);
    Vec x0 = dx;
    kkt.solve(-in.c, Vec::Zero(m), dx, dy);
    it.y = -dy;
    Vec z0 = dx;  // equals c - A'y for this rhs

    double dxs = 0.0, dzs = 0.0;
    for (int j = 0; j < n; ++j) {
      if (!lower[j]) continue;
      dxs = std::max(dxs, -1.5 * x0[j]);
      dzs = std::max(dzs, -1.5 * z0[j]);
    }
    it.x = x0;
    it.z = Vec::Zero(n);
    it.w = Vec::Ones(n);
    it.s = Vec::Zero(n);
    for (int j = 0; j < n; ++j) {
      if (!lower[j]) continue;  // free columns stay at the least-squares value
      it.x[j] = x0[j] + dxs + 0.1;
      it.z[j] = z0[j] + dzs + 0.1;
    }
    double cross = 0.0, xsum = 0.0, zsum = 0.0;
    for (int j = 0; j < n; ++j)
      if (lower[j]) {
        cross += it.x[j] * it.z[j];
        xsum += it.x[j];
        zsum += it.z[j];
      }
    double dxp = 0.5 * cross / (zsum + 1e-300), dzp = 0.5 * cross / (xsum + 1e-300);
    for (int j = 0; j < n; ++j) {
      if (!lower[j]) continue;
      it.x[j] += dxp;
      it.z[j] += dzp;
      if (boxed[j]) {
        double u = in.upper[j];
        double margin = std::min(0.49 * u, std::max(1e-4 * u, 1e-2));
        it.x[j] = std::min(std::max(it.x[j], margin), u - margin);
        it.w[j] = u - it.x[j];
        it.s[j] = 0.5 * it.z[j] + 0.1;
      }
    }
  }

  auto mu_of = [&](const ipm::Iterate& q) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      if (lower[j]) acc += q.x[j] * q.z[j];
      if (boxed[j]) acc += q.w[j] * q.s[j];
    }
    return acc / comp_terms;
  };
  double mu = mu_of(it);
  double mu0 = mu;

  int iter = 0;
  int slow_steps = 0;

  auto unscaled_report = [&](double& rp, double& rd, double& gap, double& pobj, double& dobj) {
    Vec rb = in.b - in.A * it.x;
    Vec rc = in.c - AT * it.y - it.z + it.s;
    double bn = 1.0 + in.b_un.cwiseAbs().maxCoeff();
    double cn = 1.0 + in.c_un.cwiseAbs().maxCoeff();
    rp = 0.0;
    for (int i = 0; i < m; ++i) rp = std::max(rp, std::abs(rb[i] / in.row_eq[i]));
    double ru = 0.0;
    for (int j = 0; j < n; ++j)
      if (boxed[j]) ru = std::max(ru, std::abs((in.upper[j] - it.x[j] - it.w[j]) * in.col_eq[j]));
    rp = std::max(rp, ru) / bn;
    rd = 0.0;
    for (int j = 0; j < n; ++j) rd = std::max(rd, std::abs(rc[j] / in.col_eq[j]));
    rd /= cn;
    pobj = 0.0;
    dobj = 0.0;
    for (int i = 0; i < m; ++i) dobj += in.b_un[i] * it.y[i] * in.row_eq[i];
    for (int j = 0; j < n; ++j) {
      pobj += in.c_un[j] * it.x[j] * in.col_eq[j];
      if (boxed[j]) dobj -= in.upper_un[j] * (it.s[j] / in.col_eq[j]);
    }
    // complementarity gap; the scaled pairwise products are scale invariant
    double comp = 0.0;
    for (int j = 0; j < n; ++j) {
      if (lower[j]) comp += it.x[j] * it.z[j];
      if (boxed[j]) comp += it.w[j] * it.s[j];
    }
    gap = comp / (1.0 + std::abs(pobj));
  };

  auto extract_solution = [&](const ipm::Iterate& pt, SolveStatus st, int iters, double rp,
                              double rd, double gap, double pobj) {
    std::vector<double> xs(sf.n, 0.0);
    for (int j = 0; j < sf.n; ++j) xs[j] = pt.x[in.std_col[j]] * in.col_eq[in.std_col[j]];
    std::vector<double> y(p.num_rows(), 0.0);
    for (int i = 0; i < sf.num_orig_rows && i < in.num_std_rows; ++i)
      y[i] = sf.row_scale[i] * pt.y[i] * in.row_eq[i];
    return finish(st, pobj + sf.c0, sf.to_original_point(xs), std::move(y), iters, rp, rd, gap);
  };

  struct Best {
    double score = kInf;
    ipm::Iterate it;
    double rp = kInf, rd = kInf, gap = kInf, pobj = 0.0;
  } best;
  auto finish_best = [&](SolveStatus fallback, int iters) {
    bool ok = best.rp <= tol.feasibility && best.rd <= tol.feasibility &&
              best.gap <= tol.optimality;
    return extract_solution(best.it, ok ? SolveStatus::Optimal : fallback, iters, best.rp,
                            best.rd, best.gap, best.pobj);
  };

  Vec theta_inv = Vec::Ones(n);

  while (true) {
    double rp, rd, gap, pobj, dobj;
    unscaled_report(rp, rd, gap, pobj, dobj);
    if (opt.verbose)
      std::fprintf(stderr, "iter %3d  mu %9.2e  rp %9.2e  rd %9.2e  gap %9.2e  obj %.10e\n",
                   iter, mu, rp, rd, gap, pobj + sf.c0);

    if (!std::isfinite(mu) || !std::isfinite(rp) || !std::isfinite(rd))
      return fail(SolveStatus::NumericalFailure, iter);

    if (std::max({rp, rd, gap}) < best.score) {
      best.score = std::max({rp, rd, gap});
      best.it = it;
      best.rp = rp;
      best.rd = rd;
      best.gap = gap;
      best.pobj = pobj;
    }

    if (rp <= tol.feasibility && rd <= tol.feasibility && gap <= tol.optimality) {
      // weak duality at termination (minimization): primal >= dual - slack
      if (pobj < dobj - 1e3 * tol.optimality * (1.0 + std::abs(pobj)))
        return fail(SolveStatus::NumericalFailure, iter);
      return extract_solution(it, SolveStatus::Optimal, iter, rp, rd, gap, pobj);
    }

    // divergence heuristics (documented best effort)
    if (dobj > 1e10 * std::max(1.0, std::abs(pobj)) && rd <= 1e-6)
      return fail(SolveStatus::Infeasible, iter);
    if (pobj < -1e10 * std::max(1.0, std::abs(dobj)) && rp <= 1e-6)
      return fail(SolveStatus::Unbounded, iter);
    // stuck primal residual well above the numerical noise floor while the
    // path parameter collapsed: no feasible point exists
    if (mu < 1e-12 * mu0 && best.rp > 1e-5) return fail(SolveStatus::Infeasible, iter);
    if (mu < 1e-12 * mu0) return finish_best(SolveStatus::NumericalFailure, iter);

    if (iter >= opt.max_iter) return finish_best(SolveStatus::IterationLimit, iter);
    ++iter;

    for (int j = 0; j < n; ++j) {
      double d = 0.0;
      if (lower[j]) d += it.z[j] / it.x[j];
      if (boxed[j]) d += it.s[j] / it.w[j];
      theta_inv[j] = d;
    }
    reg_scale = std::clamp(1e-2 * mu / mu0, 1e-12, 1e-8);
    if (!factorize(theta_inv)) return finish_best(SolveStatus::NumericalFailure, iter);

    Vec rb = in.b - in.A * it.x;
    Vec rc = in.c - AT * it.y - it.z + it.s;
    Vec ru = Vec::Zero(n);
    for (int j = 0; j < n; ++j)
      if (boxed[j]) ru[j] = in.upper[j] - it.x[j] - it.w[j];

    auto direction = [&](const Vec& txz, const Vec& tws, ipm::Iterate& d) {
      Vec g(n);
      for (int j = 0; j < n; ++j) {
        g[j] = rc[j];
        if (lower[j]) g[j] -= txz[j] / it.x[j];
        if (boxed[j]) g[j] += (tws[j] - it.s[j] * ru[j]) / it.w[j];
      }
      kkt.solve(g, rb, d.x, d.y);
      d.z = Vec::Zero(n);
      d.s = Vec::Zero(n);
      d.w = Vec::Zero(n);
      for (int j = 0; j < n; ++j) {
        if (lower[j]) d.z[j] = (txz[j] - it.z[j] * d.x[j]) / it.x[j];
        if (boxed[j]) {
          d.w[j] = ru[j] - d.x[j];
          d.s[j] = (tws[j] - it.s[j] * d.w[j]) / it.w[j];
        }
      }
    };

    // predictor
    ipm::Iterate da;
    {
      Vec txz = Vec::Zero(n), tws = Vec::Zero(n);
      for (int j = 0; j < n; ++j) {
        if (lower[j]) txz[j] = -it.x[j] * it.z[j];
        if (boxed[j]) tws[j] = -it.w[j] * it.s[j];
      }
      direction(txz, tws, da);
      double y_scale = 1.0 + it.y.cwiseAbs().maxCoeff();
      if (da.y.cwiseAbs().maxCoeff() > 1e4 * y_scale) {
        // ill factor at this regularization level; redo with a stronger one
        reg_scale = std::min(1e-6, reg_scale * 1e3);
        if (!factorize(theta_inv)) return finish_best(SolveStatus::NumericalFailure, iter);
        direction(txz, tws, da);
      }
    }
    double ap = std::min(ipm::max_step(it.x, da.x, lower), ipm::max_step(it.w, da.w, boxed));
    double ad = std::min(ipm::max_step(it.z, da.z, lower), ipm::max_step(it.s, da.s, boxed));
    double mu_aff = 0.0;
    for (int j = 0; j < n; ++j) {
      if (lower[j]) mu_aff += (it.x[j] + ap * da.x[j]) * (it.z[j] + ad * da.z[j]);
      if (boxed[j]) mu_aff += (it.w[j] + ap * da.w[j]) * (it.s[j] + ad * da.s[j]);
    }
    mu_aff /= comp_terms;
    double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);
    // keep the target above the numerical floor so late steps stay sane
    sigma = std::max(sigma, std::min(0.5, 1e-13 / mu));

    // corrector (combined direction)
    ipm::Iterate dc;
    {
      Vec txz = Vec::Zero(n), tws = Vec::Zero(n);
      for (int j = 0; j < n; ++j) {
        if (lower[j]) txz[j] = sigma * mu - it.x[j] * it.z[j] - da.x[j] * da.z[j];
        if (boxed[j]) tws[j] = sigma * mu - it.w[j] * it.s[j] - da.w[j] * da.s[j];
      }
      direction(txz, tws, dc);
    }

    double eta = 0.99995;
    ap = std::min(
        eta * std::min(ipm::max_step(it.x, dc.x, lower), ipm::max_step(it.w, dc.w, boxed)), 1.0);
    ad = std::min(
        eta * std::min(ipm::max_step(it.z, dc.z, lower), ipm::max_step(it.s, dc.s, boxed)), 1.0);

    it.x += ap * dc.x;
    it.y += ad * dc.y;
    for (int j = 0; j < n; ++j) {
      if (lower[j]) it.z[j] += ad * dc.z[j];
      if (boxed[j]) {
        it.w[j] += ap * dc.w[j];
        it.s[j] += ad * dc.s[j];
      }
    }
    mu = mu_of(it);

    if (ap < 1e-8 && ad < 1e-8) {
      if (++slow_steps >= 3) return finish_best(SolveStatus::NumericalFailure, iter);
    } else {
      slow_steps = 0;
    }
  }
}

inline Solution solve(const LpProblem& p, const Tolerances& tol) {
  SolverOptions opt;
  opt.tol = tol;
  return solve(p, opt);
}

}  // namespace opfbound::lp
