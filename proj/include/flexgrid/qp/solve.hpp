#pragma once

// Deterministic convex QP/LP solver.
//
// Method: Mehrotra predictor-corrector interior point on the augmented KKT
// system, factored with a sparse LDLT under static regularization plus one
// round of iterative refinement. A crossover polish recovers an exactly
// complementary vertex/face solution whenever the final active set is
// identifiable, which is what downstream complementarity certificates rely
// on. Infeasibility and unboundedness are decided by Farkas/ray
// certificates, with an elastic phase-1 LP as the fallback arbiter.
//
// The algorithm contains no randomized or order-dependent choices, so a
// repeated solve of the same instance returns bit-identical output.

#include "flexgrid/qp/problem.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace flexgrid::qp {

enum class QpStatus { kOptimal, kInfeasible, kUnbounded, kMaxIterations };

inline const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::kOptimal: return "optimal";
    case QpStatus::kInfeasible: return "infeasible";
    case QpStatus::kUnbounded: return "unbounded";
    case QpStatus::kMaxIterations: return "max-iterations";
  }
  return "?";
}

struct QpSolution {
  QpStatus status = QpStatus::kMaxIterations;
  Vec x;             // primal point
  Vec y;             // equality duals: Qx + c + E'y + A'z = 0
  Vec z;             // inequality duals, >= 0
  double objective = std::numeric_limits<double>::quiet_NaN();
  double kkt_residual = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;

  double dual_objective(const QuadraticProgram& p) const {
    return -0.5 * x.dot(p.Q * x) - p.e.dot(y) - p.b.dot(z);
  }
};

struct QpOptions {
  double tol_feas = 1e-9;   // relative primal/dual residual target
  double tol_gap = 1e-11;   // relative complementarity target
  int max_iter = 120;
  double reg = 1e-8;        // static KKT regularization
  bool polish = true;
};

namespace detail {

inline double kkt_residual_of(const QuadraticProgram& p, const Vec& x,
                              const Vec& y, const Vec& z) {
  double r = 0.0;
  Vec stat = p.Q * x + p.c;
  if (p.n_eq() > 0) stat += p.E.transpose() * y;
  if (p.n_in() > 0) stat += p.A.transpose() * z;
  if (stat.size() > 0) r = stat.cwiseAbs().maxCoeff();
  if (p.n_eq() > 0) r = std::max(r, (p.E * x - p.e).cwiseAbs().maxCoeff());
  if (p.n_in() > 0) {
    Vec slack = p.b - p.A * x;
    r = std::max(r, std::max(0.0, -slack.minCoeff()));
    r = std::max(r, std::max(0.0, -z.minCoeff()));
    r = std::max(r, z.cwiseProduct(slack).cwiseAbs().maxCoeff());
  }
  return r;
}

// Core interior-point loop. Assumes at least one inequality row. `x0`, when
// given, seeds the primal iterate (feasibility-restoration restart).
inline QpSolution ipm(const QuadraticProgram& p, const QpOptions& opt,
                      const Vec* x0 = nullptr) {
  const int n = p.n, me = p.n_eq(), mi = p.n_in();
  QpSolution sol;

  Vec x = x0 ? *x0 : Vec::Zero(n), y = Vec::Zero(me);
  Vec z = Vec::Ones(mi), s = Vec::Ones(mi);
  if (x0) {
    Vec slack = p.b - p.A * x;
    for (int i = 0; i < mi; ++i)
      s[i] = std::max(slack[i], 1e-4 * (1.0 + std::abs(p.b[i])));
  } else {
    for (int i = 0; i < mi; ++i) s[i] = std::max(1.0, std::abs(p.b[i]));
  }

  const double cnorm = p.c.size() ? p.c.cwiseAbs().maxCoeff() : 0.0;
  const double bnorm = std::max(mi ? p.b.cwiseAbs().maxCoeff() : 0.0,
                                me ? p.e.cwiseAbs().maxCoeff() : 0.0);

  Eigen::SimplicialLDLT<SpMat, Eigen::Upper> ldlt;
  bool analyzed = false;
  double reg = opt.reg;

  const int dim = n + me;
  SpMat K(dim, dim), K0(dim, dim);
  std::vector<Triplet> trip;

  auto assemble = [&](const Vec& d, double delta, SpMat& out) {
    trip.clear();
    SpMat AtDA;
    if (mi > 0) {
      SpMat Ad = d.asDiagonal() * p.A;
      AtDA = SpMat(p.A.transpose()) * Ad;
    }
    auto push_upper = [&](const SpMat& m, int r0, int c0) {
      for (int k = 0; k < m.outerSize(); ++k)
        for (SpMat::InnerIterator it(m, k); it; ++it) {
          int r = static_cast<int>(it.row()) + r0;
          int c = static_cast<int>(it.col()) + c0;
          if (r <= c) trip.emplace_back(r, c, it.value());
        }
    };
    push_upper(p.Q, 0, 0);
    if (mi > 0) push_upper(AtDA, 0, 0);
    if (me > 0) {
      for (int k = 0; k < p.E.outerSize(); ++k)
        for (SpMat::InnerIterator it(p.E, k); it; ++it)
          trip.emplace_back(static_cast<int>(it.col()),
                            n + static_cast<int>(it.row()), it.value());
    }
    for (int i = 0; i < n; ++i) trip.emplace_back(i, i, delta);
    for (int i = 0; i < me; ++i) trip.emplace_back(n + i, n + i, -delta);
    out.resize(dim, dim);
    out.setFromTriplets(trip.begin(), trip.end());
  };

  auto factorize = [&](const Vec& d) -> bool {
    assemble(d, reg, K);
    if (!analyzed) {
      ldlt.analyzePattern(K);
      analyzed = true;
    }
    ldlt.factorize(K);
    int guard = 0;
    while (ldlt.info() != Eigen::Success && guard++ < 12) {
      reg *= 10.0;
      assemble(d, reg, K);
      ldlt.factorize(K);
    }
    return ldlt.info() == Eigen::Success;
  };

  // One refinement pass against the unregularized system.
  auto solve_kkt = [&](const Vec& rhs) -> Vec {
    Vec u = ldlt.solve(rhs);
    Vec resid = rhs - K0 * u;
    u += ldlt.solve(resid);
    return u;
  };

  // Best iterate by scaled residual merit: late-stage barrier collapse can
  // push the factorization into escalating regularization and destroy an
  // iterate that was already at its accuracy floor.
  double best_merit = std::numeric_limits<double>::infinity();
  Vec best_x = x, best_y = y, best_z = z;
  int best_iters = 0;

  auto step_len = [](const Vec& v, const Vec& dv) {
    double a = 1.0;
    for (int i = 0; i < v.size(); ++i)
      if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
    return a;
  };

  for (int iter = 0; iter < opt.max_iter; ++iter) {
    Vec rd = p.Q * x + p.c;
    if (me > 0) rd += p.E.transpose() * y;
    if (mi > 0) rd += p.A.transpose() * z;
    Vec rp = me > 0 ? Vec(p.E * x - p.e) : Vec();
    Vec rg = p.A * x + s - p.b;
    double mu = s.dot(z) / mi;

    double obj = p.objective(x);
    double rdn = rd.size() ? rd.cwiseAbs().maxCoeff() : 0.0;
    double rpn = std::max(me > 0 ? rp.cwiseAbs().maxCoeff() : 0.0,
                          rg.cwiseAbs().maxCoeff());
    double dscale = 1.0 + cnorm + (p.Q * x).cwiseAbs().maxCoeff();
    double pscale = 1.0 + bnorm + x.cwiseAbs().maxCoeff();

    sol.iterations = iter;
    double merit = std::max({rdn / dscale, rpn / pscale,
                             mu / (1.0 + std::abs(obj))});
    if (!std::isfinite(merit)) break;  // numerical breakdown; keep the best
    if (merit < best_merit) {
      best_merit = merit;
      best_x = x;
      best_y = y;
      best_z = z;
      best_iters = iter;
    }
    if (rdn <= opt.tol_feas * dscale && rpn <= opt.tol_feas * pscale &&
        mu <= opt.tol_gap * (1.0 + std::abs(obj))) {
      sol.status = QpStatus::kOptimal;
      break;
    }

    // Farkas-type infeasibility certificate: z >= 0, E'y + A'z ~ 0 and
    // e'y + b'z < 0. Only consulted while the iterate is primal-infeasible:
    // degenerate instances grow equally large duals next to a feasible
    // iterate, and the certificate test cannot tell the two apart.
    double dualn = (me > 0 ? y.cwiseAbs().maxCoeff() : 0.0) +
                   z.cwiseAbs().maxCoeff();
    if (dualn > 1e7 && rpn > 1e-6 * pscale) {
      Vec at = mi > 0 ? Vec(p.A.transpose() * z) : Vec::Zero(n);
      if (me > 0) at += p.E.transpose() * y;
      double lhs = at.size() ? at.cwiseAbs().maxCoeff() : 0.0;
      double val = (me > 0 ? p.e.dot(y) : 0.0) + p.b.dot(z);
      if (lhs <= 1e-8 * dualn && val < -1e-8 * dualn) {
        sol.status = QpStatus::kInfeasible;
        break;
      }
    }
    // Ray certificate for unboundedness.
    double xn = x.cwiseAbs().maxCoeff();
    if (xn > 1e8) {
      Vec d = x / xn;
      double qd = (p.Q * d).cwiseAbs().maxCoeff();
      double ed = me > 0 ? (p.E * d).cwiseAbs().maxCoeff() : 0.0;
      double ad = mi > 0 ? (p.A * d).maxCoeff() : 0.0;
      if (qd <= 1e-7 && ed <= 1e-7 && ad <= 1e-7 && p.c.dot(d) < -1e-7) {
        sol.status = QpStatus::kUnbounded;
        break;
      }
    }

    Vec dvec = z.cwiseQuotient(s);
    if (!factorize(dvec)) break;
    assemble(dvec, 0.0, K0);
    K0 = SpMat(K0.selfadjointView<Eigen::Upper>());

    auto direction = [&](const Vec& rc) {
      Vec rhs(dim);
      Vec tmp = rc - z.cwiseProduct(rg);  // s^{-1}(rc - z.*rg) folded below
      rhs.head(n) = -rd + p.A.transpose() * (tmp.cwiseQuotient(s));
      if (me > 0) rhs.tail(me) = -rp;
      Vec u = solve_kkt(rhs);
      Vec dx = u.head(n);
      Vec dy = me > 0 ? Vec(u.tail(me)) : Vec();
      Vec ds = -rg - p.A * dx;
      Vec dz = (-rc - z.cwiseProduct(ds)).cwiseQuotient(s);
      return std::make_tuple(dx, dy, ds, dz);
    };

    // Predictor.
    Vec rc_aff = s.cwiseProduct(z);
    auto [dx_a, dy_a, ds_a, dz_a] = direction(rc_aff);
    double ap = step_len(s, ds_a), ad = step_len(z, dz_a);
    double mu_aff = (s + ap * ds_a).dot(z + ad * dz_a) / mi;
    double sigma = std::pow(std::max(mu_aff, 0.0) / mu, 3);
    sigma = std::clamp(sigma, 1e-10, 1.0);

    // Corrector.
    Vec rc = s.cwiseProduct(z) + ds_a.cwiseProduct(dz_a) -
             Vec::Constant(mi, sigma * mu);
    auto [dx, dy, ds, dz] = direction(rc);

    double gamma = std::max(0.99, 1.0 - 1e2 * mu / (1.0 + std::abs(obj)));
    gamma = std::min(gamma, 0.9999);
    double a_p = std::min(1.0, gamma * step_len(s, ds));
    double a_d = std::min(1.0, gamma * step_len(z, dz));

    x += a_p * dx;
    s += a_p * ds;
    if (me > 0) y += a_d * dy;
    z += a_d * dz;
    sol.iterations = iter + 1;
  }

  if (sol.status != QpStatus::kOptimal && sol.status != QpStatus::kInfeasible &&
      sol.status != QpStatus::kUnbounded) {
    x = best_x;
    y = best_y;
    z = best_z;
    sol.iterations = best_iters;
  }
  sol.x = x;
  sol.y = y;
  sol.z = z;
  sol.objective = p.objective(x);
  sol.kkt_residual = kkt_residual_of(p, x, y, z);
  return sol;
}

// Crossover: re-solve on the guessed active set to obtain an exactly
// complementary point. Returns true and overwrites the solution on success.
inline bool polish(const QuadraticProgram& p, QpSolution& sol, double reg) {
  const int n = p.n, me = p.n_eq(), mi = p.n_in();
  std::vector<int> act;
  Vec slack = p.b - p.A * sol.x;
  for (int i = 0; i < mi; ++i)
    if (sol.z[i] > slack[i]) act.push_back(i);
  const int ma = static_cast<int>(act.size());
  const int dim = n + me + ma;

  std::vector<Triplet> trip;
  auto push_upper = [&](const SpMat& m, int r0, int c0, bool transpose) {
    for (int k = 0; k < m.outerSize(); ++k)
      for (SpMat::InnerIterator it(m, k); it; ++it) {
        int r = transpose ? static_cast<int>(it.col()) : static_cast<int>(it.row());
        int c = transpose ? static_cast<int>(it.row()) : static_cast<int>(it.col());
        r += r0;
        c += c0;
        if (r <= c) trip.emplace_back(r, c, it.value());
      }
  };
  auto build = [&](double delta, SpMat& K) {
    trip.clear();
    push_upper(p.Q, 0, 0, false);
    if (me > 0) push_upper(p.E, 0, n, true);
    for (int a = 0; a < ma; ++a) {
      int row = act[a];
      for (int k = 0; k < p.A.outerSize(); ++k)
        for (SpMat::InnerIterator it(p.A, k); it; ++it)
          if (it.row() == row)
            trip.emplace_back(static_cast<int>(it.col()), n + me + a, it.value());
    }
    for (int i = 0; i < n; ++i) trip.emplace_back(i, i, delta);
    for (int i = n; i < dim; ++i) trip.emplace_back(i, i, -delta);
    K.resize(dim, dim);
    K.setFromTriplets(trip.begin(), trip.end());
  };

  SpMat Kreg, K0;
  build(reg, Kreg);
  build(0.0, K0);
  SpMat K0full = SpMat(K0.selfadjointView<Eigen::Upper>());

  Eigen::SimplicialLDLT<SpMat, Eigen::Upper> ldlt;
  ldlt.compute(Kreg);
  if (ldlt.info() != Eigen::Success) return false;

  Vec rhs(dim);
  rhs.head(n) = -p.c;
  if (me > 0) rhs.segment(n, me) = p.e;
  for (int a = 0; a < ma; ++a) rhs[n + me + a] = p.b[act[a]];

  Vec u = ldlt.solve(rhs);
  for (int r = 0; r < 3; ++r) {
    Vec resid = rhs - K0full * u;
    if (resid.cwiseAbs().maxCoeff() < 1e-14) break;
    u += ldlt.solve(resid);
  }

  Vec x = u.head(n);
  Vec y = me > 0 ? Vec(u.segment(n, me)) : Vec();
  Vec z = Vec::Zero(mi);
  for (int a = 0; a < ma; ++a) z[act[a]] = u[n + me + a];

  if (mi > 0 && z.minCoeff() < -1e-7) return false;
  for (int a = 0; a < ma; ++a) z[act[a]] = std::max(z[act[a]], 0.0);
  double r = kkt_residual_of(p, x, y, z);
  if (!(r <= sol.kkt_residual * 1.0001 + 1e-12)) return false;

  sol.x = std::move(x);
  sol.y = std::move(y);
  sol.z = std::move(z);
  sol.objective = p.objective(sol.x);
  sol.kkt_residual = r;
  return true;
}


// Ruiz equilibration: diagonal column scaling over the variables, row
// scalings for the equality and inequality blocks, and a scalar objective
// scaling. Badly scaled instances (costs in the thousands next to unit-range
// geometry rows) otherwise push the barrier iterates off a cliff in the
// first few steps.
struct Scaling {
  Vec d;              // variable scaling, x = d .* x_hat
  Vec re, ra;         // row scalings
  double sigma = 1.0; // objective scaling
};

inline Scaling equilibrate(QuadraticProgram& p) {
  const int n = p.n, me = p.n_eq(), mi = p.n_in();
  Scaling sc;
  sc.d = Vec::Ones(n);
  sc.re = Vec::Ones(me);
  sc.ra = Vec::Ones(mi);
  auto colmax = [&](Vec& m) {
    m.setZero();
    for (int k = 0; k < p.Q.outerSize(); ++k)
      for (SpMat::InnerIterator it(p.Q, k); it; ++it)
        m[it.col()] = std::max(m[it.col()], std::abs(it.value()));
    for (int k = 0; k < p.E.outerSize(); ++k)
      for (SpMat::InnerIterator it(p.E, k); it; ++it)
        m[it.col()] = std::max(m[it.col()], std::abs(it.value()));
    for (int k = 0; k < p.A.outerSize(); ++k)
      for (SpMat::InnerIterator it(p.A, k); it; ++it)
        m[it.col()] = std::max(m[it.col()], std::abs(it.value()));
  };
  auto rowmax = [&](const SpMat& M, Vec& m) {
    m.setZero();
    for (int k = 0; k < M.outerSize(); ++k)
      for (SpMat::InnerIterator it(M, k); it; ++it)
        m[it.row()] = std::max(m[it.row()], std::abs(it.value()));
  };
  Vec cm(n), rme(me), rma(mi);
  for (int pass = 0; pass < 10; ++pass) {
    colmax(cm);
    Vec f(n);
    for (int j = 0; j < n; ++j)
      f[j] = cm[j] > 0.0 ? 1.0 / std::sqrt(cm[j]) : 1.0;
    sc.d = sc.d.cwiseProduct(f);
    SpMat F(n, n);
    {
      std::vector<Triplet> t;
      t.reserve(n);
      for (int j = 0; j < n; ++j) t.emplace_back(j, j, f[j]);
      F.setFromTriplets(t.begin(), t.end());
    }
    p.Q = F * p.Q * F;
    p.E = p.E * F;
    p.A = p.A * F;
    if (me > 0) {
      rowmax(p.E, rme);
      Vec g(me);
      for (int i = 0; i < me; ++i)
        g[i] = rme[i] > 0.0 ? 1.0 / std::sqrt(rme[i]) : 1.0;
      sc.re = sc.re.cwiseProduct(g);
      p.E = g.asDiagonal() * p.E;
    }
    if (mi > 0) {
      rowmax(p.A, rma);
      Vec g(mi);
      for (int i = 0; i < mi; ++i)
        g[i] = rma[i] > 0.0 ? 1.0 / std::sqrt(rma[i]) : 1.0;
      sc.ra = sc.ra.cwiseProduct(g);
      p.A = g.asDiagonal() * p.A;
    }
  }
  p.c = p.c.cwiseProduct(sc.d);
  p.e = p.e.cwiseProduct(sc.re);
  p.b = p.b.cwiseProduct(sc.ra);
  double qnorm = 0.0;
  for (int k = 0; k < p.Q.outerSize(); ++k)
    for (SpMat::InnerIterator it(p.Q, k); it; ++it)
      qnorm = std::max(qnorm, std::abs(it.value()));
  double cnorm = p.c.size() ? p.c.cwiseAbs().maxCoeff() : 0.0;
  double mag = std::max(qnorm, cnorm);
  sc.sigma = mag > 0.0 ? 1.0 / mag : 1.0;
  sc.sigma = std::clamp(sc.sigma, 1e-6, 1e6);
  p.Q = sc.sigma * p.Q;
  p.c *= sc.sigma;
  return sc;
}

inline QuadraticProgram with_dummy_row(const QuadraticProgram& p) {
  QuadraticProgram q = p;
  q.A.resize(1, p.n);
  q.b = Vec::Constant(1, 1.0);
  return q;
}

}  // namespace detail

QpSolution solve_qp(const QuadraticProgram& p, const QpOptions& opt);

namespace detail {

// Elastic feasibility LP: zero optimum iff the instance is feasible.
inline double phase1_violation(const QuadraticProgram& p, const QpOptions& opt,
                               Vec* x_feas) {
  const int n = p.n, me = p.n_eq(), mi = p.n_in();
  if (me + mi == 0) return 0.0;
  QpBuilder bld;
  int vx = bld.add_vars(n);
  int vu = bld.add_vars(2 * me);  // equality elastics, split by sign
  int vv = bld.add_vars(mi);      // inequality elastics
  for (int i = 0; i < 2 * me; ++i) bld.obj_lin(vu + i, 1.0);
  for (int i = 0; i < mi; ++i) bld.obj_lin(vv + i, 1.0);
  for (int i = 0; i < me; ++i) {
    int row = bld.begin_eq(p.e[i]);
    bld.eq_add(row, vu + 2 * i, 1.0);
    bld.eq_add(row, vu + 2 * i + 1, -1.0);
  }
  // Column-wise fill of the elastic rows.
  for (int k = 0; k < p.E.outerSize(); ++k)
    for (SpMat::InnerIterator it(p.E, k); it; ++it)
      bld.eq_add(static_cast<int>(it.row()), vx + static_cast<int>(it.col()),
                 it.value());
  std::vector<int> le_rows(mi);
  for (int i = 0; i < mi; ++i) {
    le_rows[i] = bld.begin_le(p.b[i]);
    bld.le_add(le_rows[i], vv + i, -1.0);
  }
  for (int k = 0; k < p.A.outerSize(); ++k)
    for (SpMat::InnerIterator it(p.A, k); it; ++it)
      bld.le_add(le_rows[it.row()], vx + static_cast<int>(it.col()), it.value());
  for (int i = 0; i < 2 * me; ++i) {
    int row = bld.begin_le(0.0);
    bld.le_add(row, vu + i, -1.0);
  }
  for (int i = 0; i < mi; ++i) {
    int row = bld.begin_le(0.0);
    bld.le_add(row, vv + i, -1.0);
  }
  QpOptions aux = opt;
  aux.polish = false;
  QpSolution s = ipm(bld.build(), aux);
  if (x_feas) *x_feas = s.x.head(n);
  return s.objective;
}

// Largest-descent feasible ray within the unit box; strictly negative
// optimum certifies an unbounded instance.
inline double ray_descent(const QuadraticProgram& p, const QpOptions& opt) {
  QpBuilder bld;
  int vd = bld.add_vars(p.n);
  for (int i = 0; i < p.n; ++i) bld.obj_lin(vd + i, p.c[i]);
  for (int i = 0; i < p.n_eq(); ++i) bld.begin_eq(0.0);
  for (int k = 0; k < p.E.outerSize(); ++k)
    for (SpMat::InnerIterator it(p.E, k); it; ++it)
      bld.eq_add(static_cast<int>(it.row()), vd + static_cast<int>(it.col()),
                 it.value());
  // Q d = 0: for PSD Q a ray of zero curvature must lie in the null space.
  std::vector<int> qrows(p.n, -1);
  for (int k = 0; k < p.Q.outerSize(); ++k)
    for (SpMat::InnerIterator it(p.Q, k); it; ++it) {
      int r = static_cast<int>(it.row());
      if (qrows[r] < 0) qrows[r] = bld.begin_eq(0.0);
    }
  for (int k = 0; k < p.Q.outerSize(); ++k)
    for (SpMat::InnerIterator it(p.Q, k); it; ++it)
      bld.eq_add(qrows[it.row()], vd + static_cast<int>(it.col()), it.value());
  std::vector<int> le_rows(p.n_in());
  for (int i = 0; i < p.n_in(); ++i) le_rows[i] = bld.begin_le(0.0);
  for (int k = 0; k < p.A.outerSize(); ++k)
    for (SpMat::InnerIterator it(p.A, k); it; ++it)
      bld.le_add(le_rows[it.row()], vd + static_cast<int>(it.col()), it.value());
  for (int i = 0; i < p.n; ++i) bld.bound(vd + i, -1.0, 1.0);
  QpOptions aux = opt;
  aux.polish = false;
  return ipm(bld.build(), aux).objective;
}

}  // namespace detail

namespace detail {

inline QpSolution solve_core(const QuadraticProgram& p, const QpOptions& opt) {
  const bool dummy = p.n_in() == 0;
  const QuadraticProgram& q = p;
  QpSolution sol = detail::ipm(dummy ? detail::with_dummy_row(p) : q, opt);
  if (dummy) {
    QpSolution trimmed = sol;
    trimmed.z = Vec();
    trimmed.kkt_residual = detail::kkt_residual_of(p, sol.x, sol.y, trimmed.z);
    trimmed.objective = p.objective(sol.x);
    sol = trimmed;
  }
  double scale = 1.0 + (p.n_eq() ? p.e.cwiseAbs().maxCoeff() : 0.0) +
                 (p.n_in() ? p.b.cwiseAbs().maxCoeff() : 0.0);
  // Accuracy is judged against the data scale, never the objective value: a
  // divergent iterate would otherwise inflate its own acceptance threshold.
  const double accept =
      1e-6 * (scale + (p.n ? p.c.cwiseAbs().maxCoeff() : 0.0));
  if (sol.status == QpStatus::kOptimal) {
    if (opt.polish && p.n_in() > 0) detail::polish(p, sol, opt.reg);
    // The iteration test scales residuals by the iterate norm; a divergent
    // iterate (e.g. on an infeasible instance whose rays live in the primal
    // space) can sneak through it.
    if (sol.kkt_residual <= accept) return sol;
    sol.status = QpStatus::kMaxIterations;
  }
  if (sol.status == QpStatus::kInfeasible || sol.status == QpStatus::kUnbounded)
    return sol;
  // A stalled iterate at the accuracy floor needs no arbitration.
  if (sol.kkt_residual <= accept) {
    if (opt.polish && p.n_in() > 0) {
      QpSolution polished = sol;
      detail::polish(p, polished, opt.reg);
      if (polished.kkt_residual < sol.kkt_residual) sol = std::move(polished);
    }
    sol.status = QpStatus::kOptimal;
    return sol;
  }

  // Undecided after the iteration budget: arbitrate with certificates.
  Vec x_feas;
  double viol = detail::phase1_violation(p, opt, &x_feas);
  if (viol > 1e-7 * scale) {
    sol.status = QpStatus::kInfeasible;
    return sol;
  }
  double descent = detail::ray_descent(p, opt);
  if (descent < -1e-8 * (1.0 + p.c.cwiseAbs().maxCoeff())) {
    sol.status = QpStatus::kUnbounded;
    return sol;
  }
  // Neither certificate fired, so the instance is feasible and bounded: the
  // first run lost its way (cold starts can diverge on degenerate data even
  // when a benign central path exists). Restart from the feasible point the
  // elastic LP produced; a restoration run from there is almost always tame.
  if (!dummy && x_feas.size() == p.n) {
    QpSolution retry = detail::ipm(p, opt, &x_feas);
    if (retry.kkt_residual < sol.kkt_residual) sol = std::move(retry);
  }
  // A stalled iterate that already meets the data-scale accuracy target is an
  // optimum in all but name; polishing usually seals the remaining gap.
  if (opt.polish && p.n_in() > 0) {
    QpSolution polished = sol;
    detail::polish(p, polished, opt.reg);
    if (polished.kkt_residual < sol.kkt_residual) sol = std::move(polished);
  }
  if (sol.kkt_residual <= accept) sol.status = QpStatus::kOptimal;
  return sol;  // otherwise max-iterations, reported as such
}

}  // namespace detail

/// Solves a convex QP. Status is always explicit; a non-optimal status
/// carries the best iterate found. The instance is equilibrated first and
/// the solution mapped back to the original data.
inline QpSolution solve_qp(const QuadraticProgram& p, const QpOptions& opt) {
  QuadraticProgram scaled = p;
  detail::Scaling sc = detail::equilibrate(scaled);
  QpSolution sol = detail::solve_core(scaled, opt);
  sol.x = sol.x.cwiseProduct(sc.d);
  if (sol.y.size()) sol.y = sol.y.cwiseProduct(sc.re) / sc.sigma;
  if (sol.z.size()) sol.z = sol.z.cwiseProduct(sc.ra) / sc.sigma;
  sol.objective = p.objective(sol.x);
  sol.kkt_residual = detail::kkt_residual_of(p, sol.x, sol.y, sol.z);
  // The scaled residual can flatter a point whose residual against the
  // original data is poor; re-validate, polishing once on the original data
  // before giving up on the optimal label.
  if (sol.status == QpStatus::kOptimal) {
    const double accept =
        1e-6 * (1.0 + (p.n_eq() ? p.e.cwiseAbs().maxCoeff() : 0.0) +
                (p.n_in() ? p.b.cwiseAbs().maxCoeff() : 0.0) +
                (p.n ? p.c.cwiseAbs().maxCoeff() : 0.0));
    if (sol.kkt_residual > accept && opt.polish && p.n_in() > 0)
      detail::polish(p, sol, opt.reg);
    if (sol.kkt_residual > accept) sol.status = QpStatus::kMaxIterations;
  }
  return sol;
}

inline QpSolution solve_qp(const QuadraticProgram& p) {
  return solve_qp(p, QpOptions{});
}

/// LP entry point: identical contract with Q = 0.
inline QpSolution solve_lp(const QuadraticProgram& p, const QpOptions& opt = {}) {
  return solve_qp(p, opt);
}

}  // namespace flexgrid::qp
