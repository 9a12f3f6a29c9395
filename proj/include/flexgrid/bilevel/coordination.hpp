#pragma once

// Builders and solvers for the grid-side problems: multi-hour unit commitment
// with dispatch, the day-ahead coordination problem (commitment binaries plus
// the re-allocation first-order system embedded through SOS1 disjunctions),
// and the single-period ideal coordination used as a per-scenario benchmark.

#include "flexgrid/bilevel/bnb.hpp"
#include "flexgrid/core/topology.hpp"
#include "flexgrid/core/types.hpp"
#include "flexgrid/lower/allocation.hpp"
#include "flexgrid/qp/problem.hpp"

#include <limits>
#include <optional>
#include <vector>

namespace flexgrid::bilevel {

namespace detail {

// Variable layout of one commitment/dispatch block: per hour p, shed, c_up, u.
struct UpperIndex {
  int b = 0, tau = 0, base = 0;
  int p(int t, int i) const { return base + t * 4 * b + i; }
  int shed(int t, int i) const { return base + t * 4 * b + b + i; }
  int cup(int t, int i) const { return base + t * 4 * b + 2 * b + i; }
  int u(int t, int i) const { return base + t * 4 * b + 3 * b + i; }
  int size() const { return 4 * b * tau; }
};

// Variable layout of the embedded re-allocation system: primals per hour
// (W, delta-tilde, theta-tilde, latency change, cap slack), then duals per
// hour, then the shift-coupling and temporal-conservation duals.
struct LowerIndex {
  int n = 0, m = 0, tau = 0;
  int base_primal = 0, base_dual = 0, mu_phi0 = 0, mu_tau0 = 0;
  int per_p() const { return n * m + m + n + 2; }
  int per_d() const { return n * m + m + n + 1; }
  int w(int t, int i, int j) const { return base_primal + t * per_p() + i * m + j; }
  int dtil(int t, int j) const { return base_primal + t * per_p() + n * m + j; }
  int th(int t, int i) const { return base_primal + t * per_p() + n * m + m + i; }
  int lat(int t) const { return base_primal + t * per_p() + n * m + m + n; }
  int slack(int t) const { return base_primal + t * per_p() + n * m + m + n + 1; }
  int mu_d(int t, int j) const { return base_dual + t * per_d() + j; }
  int mu_th(int t, int i) const { return base_dual + t * per_d() + m + i; }
  int mu_w(int t, int i, int j) const { return base_dual + t * per_d() + m + n + i * m + j; }
  int mu_a(int t) const { return base_dual + t * per_d() + m + n + n * m; }
  int mu_phi(int t, int i) const { return mu_phi0 + t * n + i; }
  int mu_tau(int j) const { return mu_tau0 + j; }
  int size() const { return (per_p() + per_d()) * tau + n * tau + m; }
};

/// Commitment/dispatch objective and constraints over the horizon. The
/// data-center bus load enters either as the fixed matrix `dc_load` (b x tau)
/// or through the loading variables of `lx` mapped to buses by the netdc
/// conversion matrix.
inline void emit_upper(qp::QpBuilder& qb, const GridModel& g, const Mat& loads,
                       const Mat& renewables, const UpperIndex& ux,
                       const Vec& u0, const NetDCModel* netdc,
                       const LowerIndex* lx, const Mat* dc_load) {
  const int b = ux.b, tau = ux.tau;
  const Mat& C = g.gen_cost_quad;
  const Mat& F = g.ptdf;
  const int n_lines = static_cast<int>(g.lines.size());
  Mat FG;  // line flow sensitivity to data-center loading
  Vec colsum;
  if (lx) {
    FG = F * netdc->conversion;
    colsum = netdc->conversion.colwise().sum().transpose();
  }

  for (int t = 0; t < tau; ++t) {
    for (int i = 0; i < b; ++i) {
      qb.obj_lin(ux.p(t, i), g.gen_cost_lin[i]);
      qb.obj_quad(ux.p(t, i), ux.p(t, i), C(i, i));
      for (int j = i + 1; j < b; ++j)
        if (C(i, j) != 0.0) qb.obj_quad(ux.p(t, i), ux.p(t, j), 2.0 * C(i, j));
      qb.obj_lin(ux.shed(t, i), g.shed_cost[i]);
      qb.obj_lin(ux.cup(t, i), 1.0);
    }

    const Vec net = loads.col(t) - renewables.col(t);  // d - omega per bus
    double dc_const = dc_load ? dc_load->col(t).sum() : 0.0;
    {  // power balance
      int row = qb.begin_eq(net.sum() + dc_const);
      for (int i = 0; i < b; ++i) {
        qb.eq_add(row, ux.p(t, i), 1.0);
        qb.eq_add(row, ux.shed(t, i), 1.0);
      }
      if (lx)
        for (int i = 0; i < lx->n; ++i) qb.eq_add(row, lx->th(t, i), -colsum[i]);
    }
    for (int l = 0; l < n_lines; ++l) {  // two-sided flow limits
      const double shift = F.row(l).dot(net) +
                           (dc_load ? F.row(l).dot(dc_load->col(t)) : 0.0);
      for (double sgn : {1.0, -1.0}) {
        int row = qb.begin_le(g.lines[l].capacity + sgn * shift);
        for (int i = 0; i < b; ++i) {
          if (F(l, i) != 0.0) {
            qb.le_add(row, ux.p(t, i), sgn * F(l, i));
            qb.le_add(row, ux.shed(t, i), sgn * F(l, i));
          }
        }
        if (lx)
          for (int i = 0; i < lx->n; ++i)
            if (FG(l, i) != 0.0) qb.le_add(row, lx->th(t, i), -sgn * FG(l, i));
      }
    }
    for (int i = 0; i < b; ++i) {
      // startup cost epigraph
      qb.le_add(qb.begin_le(0.0), ux.cup(t, i), -1.0);
      {
        double rhs = t == 0 ? g.startup_cost[i] * u0[i] : 0.0;
        int row = qb.begin_le(rhs);
        qb.le_add(row, ux.u(t, i), g.startup_cost[i]);
        if (t > 0) qb.le_add(row, ux.u(t - 1, i), -g.startup_cost[i]);
        qb.le_add(row, ux.cup(t, i), -1.0);
      }
      // commitment-gated production limits
      {
        int row = qb.begin_le(0.0);
        qb.le_add(row, ux.p(t, i), 1.0);
        qb.le_add(row, ux.u(t, i), -g.gen_max[i]);
      }
      {
        int row = qb.begin_le(0.0);
        qb.le_add(row, ux.p(t, i), -1.0);
        qb.le_add(row, ux.u(t, i), g.gen_min[i]);
      }
      if (t > 0) {
        // ramp up: p_t - p_{t-1} <= ru*u_{t-1} + pmax*(1-u_t) + su*(u_t-u_{t-1})
        int row = qb.begin_le(g.gen_max[i]);
        qb.le_add(row, ux.p(t, i), 1.0);
        qb.le_add(row, ux.p(t - 1, i), -1.0);
        qb.le_add(row, ux.u(t, i), g.gen_max[i] - g.startup_ramp[i]);
        qb.le_add(row, ux.u(t - 1, i), g.startup_ramp[i] - g.ramp_up[i]);
        // ramp down: p_{t-1} - p_t <= rd*u_t + pmax*(1-u_{t-1}) + sd*(u_{t-1}-u_t)
        row = qb.begin_le(g.gen_max[i]);
        qb.le_add(row, ux.p(t - 1, i), 1.0);
        qb.le_add(row, ux.p(t, i), -1.0);
        qb.le_add(row, ux.u(t - 1, i), g.gen_max[i] - g.shutdown_ramp[i]);
        qb.le_add(row, ux.u(t, i), g.shutdown_ramp[i] - g.ramp_dn[i]);
      }
      qb.bound(ux.shed(t, i), 0.0, loads(i, t));
      qb.bound(ux.u(t, i), 0.0, 1.0);
    }
  }
}

/// Re-allocation primal feasibility plus its first-order system (stationarity,
/// dual feasibility); complementarity is returned as SOS1 pairs. `phi0` is the
/// index of the first shift variable (topo.n_links of them).
inline void emit_lower(qp::QpBuilder& qb, const NetDCModel& dc,
                       const SpaceTimeTopology& topo, const Vec& theta_dot,
                       const std::vector<double>& lat_dot, const Mat& demand,
                       int phi0, const LowerIndex& lx,
                       std::vector<Sos1Pair>& sos1) {
  const int n = lx.n, m = lx.m, tau = lx.tau;
  for (int t = 0; t < tau; ++t) {
    for (int j = 0; j < m; ++j) {  // tasks reach users
      int row = qb.begin_eq(0.0);
      for (int i = 0; i < n; ++i) qb.eq_add(row, lx.w(t, i, j), 1.0);
      qb.eq_add(row, lx.dtil(t, j), -1.0);
    }
    for (int i = 0; i < n; ++i) {  // loading collects rows of W
      int row = qb.begin_eq(0.0);
      for (int j = 0; j < m; ++j) qb.eq_add(row, lx.w(t, i, j), 1.0);
      qb.eq_add(row, lx.th(t, i), -1.0);
    }
    {  // latency change and its cap (slack makes the cap an SOS1 member)
      int row = qb.begin_eq(-lat_dot[t]);
      qb.eq_add(row, lx.lat(t), 1.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
          qb.eq_add(row, lx.w(t, i, j), -dc.distance(i, j));
      row = qb.begin_eq(dc.latency_loss_cap * lat_dot[t]);
      qb.eq_add(row, lx.lat(t), 1.0);
      qb.eq_add(row, lx.slack(t), 1.0);
      qb.le_add(qb.begin_le(0.0), lx.slack(t), -1.0);
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j)
        qb.le_add(qb.begin_le(0.0), lx.w(t, i, j), -1.0);
    for (int i = 0; i < n; ++i) {  // loading follows the requested shift
      int row = qb.begin_eq(theta_dot[t * n + i]);
      qb.eq_add(row, lx.th(t, i), 1.0);
      for (int l = 0; l < topo.n_links; ++l)
        if (topo.incidence(t * n + i, l) != 0.0)
          qb.eq_add(row, phi0 + l, -topo.incidence(t * n + i, l));
    }
    // Stationarity of the re-allocation Lagrangian.
    for (int i = 0; i < n; ++i) {
      int row = qb.begin_eq(0.0);
      qb.eq_add(row, lx.mu_th(t, i), 1.0);
      qb.eq_add(row, lx.mu_phi(t, i), 1.0);
    }
    for (int j = 0; j < m; ++j) {
      int row = qb.begin_eq(dc.shift_reg * demand(j, t));
      qb.eq_add(row, lx.dtil(t, j), dc.shift_reg);
      qb.eq_add(row, lx.mu_d(t, j), 1.0);
      qb.eq_add(row, lx.mu_tau(j), -1.0);
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        double g = dc.distance(i, j);
        int row = qb.begin_eq(0.0);
        qb.eq_add(row, lx.lat(t), g);
        qb.eq_add(row, lx.mu_d(t, j), -1.0);
        qb.eq_add(row, lx.mu_th(t, i), -1.0);
        qb.eq_add(row, lx.mu_w(t, i, j), -1.0);
        qb.eq_add(row, lx.mu_a(t), g);
        qb.le_add(qb.begin_le(0.0), lx.mu_w(t, i, j), -1.0);
        sos1.push_back({lx.mu_w(t, i, j), lx.w(t, i, j)});
      }
    qb.le_add(qb.begin_le(0.0), lx.mu_a(t), -1.0);
    sos1.push_back({lx.mu_a(t), lx.slack(t)});
  }
  for (int j = 0; j < m; ++j) {  // tasks conserved across the horizon
    int row = qb.begin_eq(demand.row(j).sum());
    for (int t = 0; t < tau; ++t) qb.eq_add(row, lx.dtil(t, j), 1.0);
  }
}

/// Writes the true re-allocation solution (primals and duals) for the shift
/// encoded in `x` into `x` itself. Returns false if the shift is infeasible.
inline bool patch_lower_block(Vec& x, const NetDCModel& dc,
                              const SpaceTimeTopology& topo,
                              const std::vector<Mat>& w_dot, const Mat& demand,
                              int phi0, const LowerIndex& lx) {
  Vec phi(topo.n_links);
  for (int l = 0; l < topo.n_links; ++l) phi[l] = x[phi0 + l];
  auto re = reallocate(dc, topo, phi, w_dot, demand);
  if (re.status != qp::QpStatus::kOptimal) return false;
  for (int t = 0; t < lx.tau; ++t) {
    double lat_dot = latency(w_dot[t], dc.distance);
    for (int i = 0; i < lx.n; ++i) {
      x[lx.th(t, i)] = re.loading[t * lx.n + i];
      x[lx.mu_th(t, i)] = re.mu_loading[t][i];
      x[lx.mu_phi(t, i)] = -re.mu_loading[t][i];
      for (int j = 0; j < lx.m; ++j) {
        x[lx.w(t, i, j)] = re.allocation[t](i, j);
        x[lx.mu_w(t, i, j)] = re.mu_alloc[t](i, j);
      }
    }
    for (int j = 0; j < lx.m; ++j) {
      x[lx.dtil(t, j)] = re.demand_shifted[t][j];
      x[lx.mu_d(t, j)] = re.mu_demand[t][j];
    }
    double dl = re.latency_per_hour[t] - lat_dot;
    x[lx.lat(t)] = dl;
    x[lx.slack(t)] = std::max(0.0, dc.latency_loss_cap * lat_dot - dl);
    x[lx.mu_a(t)] = re.mu_cap[t];
    if (re.mu_cap[t] > 0.0) x[lx.slack(t)] = 0.0;
  }
  for (int j = 0; j < lx.m; ++j) x[lx.mu_tau(j)] = re.mu_conserve[j];
  return true;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Unit commitment with fixed data-center loading.

struct UcSolution {
  qp::QpStatus status = qp::QpStatus::kInfeasible;
  Mat commitment;  // b x tau, entries in {0,1}
  Mat dispatch;
  Mat shed;
  Mat startup;  // startup-cost variable per unit and hour
  double cost = std::numeric_limits<double>::infinity();
  BnbReport report;
};

struct UcBuild {
  MixedIntegerKktProblem prob;
  detail::UpperIndex ux;
};

inline UcBuild build_uc(const GridModel& grid, const Mat& loads,
                        const Mat& renewables, const Mat& dc_load,
                        Vec u0 = Vec()) {
  const int b = grid.n_buses, tau = static_cast<int>(loads.cols());
  if (u0.size() == 0) u0 = Vec::Ones(b);
  qp::QpBuilder qb;
  UcBuild out;
  out.ux = detail::UpperIndex{b, tau, 0};
  qb.add_vars(out.ux.size());
  detail::emit_upper(qb, grid, loads, renewables, out.ux, u0, nullptr, nullptr,
                     &dc_load);
  out.prob.qp = qb.build();
  for (int t = 0; t < tau; ++t)
    for (int i = 0; i < b; ++i) out.prob.binaries.push_back(out.ux.u(t, i));
  return out;
}

/// Commitment and dispatch against a fixed bus-level data-center load.
/// `u0` is the pre-horizon commitment (all-on when empty).
inline UcSolution solve_uc(const GridModel& grid, const Mat& loads,
                           const Mat& renewables, const Mat& dc_load,
                           Vec u0 = Vec(), const BnbOptions& opt = {}) {
  const int b = grid.n_buses, tau = static_cast<int>(loads.cols());
  auto [p, ux] = build_uc(grid, loads, renewables, dc_load, std::move(u0));

  auto r = branch_and_bound(p, opt);
  UcSolution out;
  out.status = r.status;
  out.report = r.report;
  if (r.status != qp::QpStatus::kOptimal) return out;
  out.commitment = Mat(b, tau);
  out.dispatch = Mat(b, tau);
  out.shed = Mat(b, tau);
  out.startup = Mat(b, tau);
  for (int t = 0; t < tau; ++t)
    for (int i = 0; i < b; ++i) {
      out.commitment(i, t) = std::round(r.x[ux.u(t, i)]);
      out.dispatch(i, t) = r.x[ux.p(t, i)];
      out.shed(i, t) = r.x[ux.shed(t, i)];
      out.startup(i, t) = r.x[ux.cup(t, i)];
    }
  out.cost = r.objective;
  return out;
}

// ---------------------------------------------------------------------------
// Day-ahead coordination: commitment binaries plus the embedded first-order
// system of the re-allocation problem, coupled through the shift phi.

struct DayAheadSolution {
  qp::QpStatus status = qp::QpStatus::kInfeasible;
  Mat commitment;
  Mat dispatch;
  Mat shed;
  Vec shift;    // phi over the virtual links
  Vec loading;  // theta-tilde, stacked hour-major
  double cost = std::numeric_limits<double>::infinity();
  BnbReport report;
};

namespace detail {

struct DayAheadBuild {
  MixedIntegerKktProblem prob;
  UpperIndex ux;
  LowerIndex lx;
  int phi0 = 0;
};

inline DayAheadBuild build_day_ahead(const GridModel& grid,
                                     const NetDCModel& netdc,
                                     const SpaceTimeTopology& topo,
                                     const Mat& loads, const Mat& renewables,
                                     const NominalAllocation& nominal,
                                     const Mat& demand, const Vec& u0,
                                     bool min_shift_l1 = false,
                                     double linear_cost_cap =
                                         std::numeric_limits<double>::infinity()) {
  const int b = grid.n_buses, tau = static_cast<int>(loads.cols());
  const int n = netdc.n_dc, m = netdc.n_users, k = topo.n_links;
  DayAheadBuild out;
  out.ux = UpperIndex{b, tau, 0};
  out.phi0 = out.ux.size();
  out.lx = LowerIndex{n, m, tau, out.phi0 + k, 0, 0, 0};
  out.lx.base_dual = out.lx.base_primal + out.lx.per_p() * tau;
  out.lx.mu_phi0 = out.lx.base_dual + out.lx.per_d() * tau;
  out.lx.mu_tau0 = out.lx.mu_phi0 + n * tau;
  int total = out.ux.size() + k + out.lx.size();
  int aux0 = total;
  if (min_shift_l1) total += k;

  qp::QpBuilder qb;
  qb.add_vars(total);
  emit_upper(qb, grid, loads, renewables, out.ux, u0, &netdc, &out.lx, nullptr);
  emit_lower(qb, netdc, topo, nominal.loading, nominal.latency_per_hour, demand,
             out.phi0, out.lx, out.prob.sos1);
  if (min_shift_l1) {
    // Secondary pass: minimize ||phi||_1 among cost-equal solutions. The
    // caller fixes commitment and dispatch and caps the remaining linear
    // cost terms; the quadratic objective above is replaced entirely.
    for (int l = 0; l < k; ++l) {
      qb.obj_lin(aux0 + l, 1.0);
      int row = qb.begin_le(0.0);
      qb.le_add(row, out.phi0 + l, 1.0);
      qb.le_add(row, aux0 + l, -1.0);
      row = qb.begin_le(0.0);
      qb.le_add(row, out.phi0 + l, -1.0);
      qb.le_add(row, aux0 + l, -1.0);
    }
    int row = qb.begin_le(linear_cost_cap);
    for (int t = 0; t < tau; ++t)
      for (int i = 0; i < b; ++i) {
        qb.le_add(row, out.ux.shed(t, i), grid.shed_cost[i]);
        qb.le_add(row, out.ux.cup(t, i), 1.0);
      }
    out.prob.qp = qb.build();
    // Drop the dispatch-cost objective: keep only the L1 surrogate.
    out.prob.qp.Q.setZero();
    Vec c = Vec::Zero(total);
    for (int l = 0; l < k; ++l) c[aux0 + l] = 1.0;
    out.prob.qp.c = c;
  } else {
    out.prob.qp = qb.build();
  }
  for (int t = 0; t < tau; ++t)
    for (int i = 0; i < b; ++i) out.prob.binaries.push_back(out.ux.u(t, i));

  if (!min_shift_l1) {
    auto lx = out.lx;
    int phi0 = out.phi0;
    auto w_dot = nominal.allocation;
    out.prob.repair = [grid, netdc, topo, w_dot, demand, phi0, lx,
                       ux = out.ux](const Vec&, const qp::QpSolution& relaxed)
        -> std::optional<qp::QpSolution> {
      qp::QpSolution fixed = relaxed;
      if (!patch_lower_block(fixed.x, netdc, topo, w_dot, demand, phi0, lx))
        return std::nullopt;
      double cost = 0.0;  // commitment/dispatch cost of the completed point
      for (int t = 0; t < ux.tau; ++t) {
        Vec p(ux.b);
        for (int i = 0; i < ux.b; ++i) p[i] = fixed.x[ux.p(t, i)];
        cost += grid.gen_cost_lin.dot(p) + p.dot(grid.gen_cost_quad * p);
        for (int i = 0; i < ux.b; ++i)
          cost += grid.shed_cost[i] * fixed.x[ux.shed(t, i)] +
                  fixed.x[ux.cup(t, i)];
      }
      fixed.objective = cost;
      fixed.status = qp::QpStatus::kOptimal;
      return fixed;
    };
  }
  return out;
}

}  // namespace detail

/// Global optimum of the day-ahead coordination problem. Among cost-equal
/// optima the reported shift minimizes ||phi||_1 (secondary pass; requires a
/// strictly convex dispatch cost, otherwise the pass is skipped).
inline DayAheadSolution solve_day_ahead(const GridModel& grid,
                                        const NetDCModel& netdc,
                                        const SpaceTimeTopology& topo,
                                        const ScenarioRecord& scenario,
                                        const BnbOptions& opt = {},
                                        bool tie_break = true) {
  const int b = grid.n_buses, tau = topo.horizon, k = topo.n_links;
  const Mat& demand = scenario.compute_demand;
  auto nominal = nominal_allocation(netdc, demand);
  Vec u0 = Vec::Ones(b);
  auto built = detail::build_day_ahead(grid, netdc, topo, scenario.loads,
                                       scenario.renewables, nominal, demand, u0);
  auto r = branch_and_bound(built.prob, opt);

  DayAheadSolution out;
  out.status = r.status;
  out.report = r.report;
  if (r.status != qp::QpStatus::kOptimal) return out;

  auto extract = [&](const Vec& x) {
    out.commitment = Mat(b, tau);
    out.dispatch = Mat(b, tau);
    out.shed = Mat(b, tau);
    for (int t = 0; t < tau; ++t)
      for (int i = 0; i < b; ++i) {
        out.commitment(i, t) = std::round(x[built.ux.u(t, i)]);
        out.dispatch(i, t) = x[built.ux.p(t, i)];
        out.shed(i, t) = x[built.ux.shed(t, i)];
      }
    out.shift = Vec(k);
    for (int l = 0; l < k; ++l) out.shift[l] = x[built.phi0 + l];
    out.loading = apply_shift(topo, out.shift, nominal.loading);
  };
  extract(r.x);
  out.cost = r.objective;

  if (tie_break && k > 0 && grid.gen_cost_quad.diagonal().minCoeff() > 0.0) {
    // Quadratic cost is strict in p, so the optimal dispatch is unique; with
    // u and p pinned the residual cost is linear and can be capped exactly.
    double quad_cost = 0.0;
    for (int t = 0; t < tau; ++t) {
      Vec p = out.dispatch.col(t);
      quad_cost += grid.gen_cost_lin.dot(p) + p.dot(grid.gen_cost_quad * p);
    }
    double cap = out.cost - quad_cost + 1e-7 * (1.0 + std::abs(out.cost));
    auto tie = detail::build_day_ahead(grid, netdc, topo, scenario.loads,
                                       scenario.renewables, nominal, demand, u0,
                                       true, cap);
    std::vector<std::pair<int, double>> fix;
    for (int t = 0; t < tau; ++t)
      for (int i = 0; i < b; ++i) {
        fix.emplace_back(tie.ux.u(t, i), out.commitment(i, t));
        fix.emplace_back(tie.ux.p(t, i), out.dispatch(i, t));
      }
    auto sol = qp::solve_qp(tie.prob.qp.with_fixings(fix));
    if (sol.status == qp::QpStatus::kOptimal &&
        sol.objective < out.shift.cwiseAbs().sum() - 1e-9) {
      extract(sol.x);
      double cost = quad_cost;
      for (int t = 0; t < tau; ++t)
        for (int i = 0; i < b; ++i)
          cost += grid.shed_cost[i] * sol.x[tie.ux.shed(t, i)] +
                  sol.x[tie.ux.cup(t, i)];
      out.cost = std::min(out.cost, cost);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Single-period ideal coordination around a fixed day-ahead schedule.

struct IdealSolution {
  qp::QpStatus status = qp::QpStatus::kInfeasible;
  Vec redispatch;  // r per bus
  Vec shed;
  Vec shift;    // phi over spatial links
  Vec loading;  // theta-tilde
  double cost = std::numeric_limits<double>::infinity();
  BnbReport report;
};

namespace detail {

/// Re-dispatch block for one hour around fixed (p-dot, u-dot): variables r
/// and shed at `r0`/`l0`, objective scaled by `weight`. Returns the constant
/// cost term of the fixed dispatch so callers can report absolute cost.
inline double emit_redispatch(qp::QpBuilder& qb, const GridModel& g,
                              const Vec& d, const Vec& omega, const Vec& p_dot,
                              const Vec& u_dot, const Vec& r_bar, int r0, int l0,
                              const NetDCModel& netdc, const LowerIndex& lx,
                              double weight) {
  const int b = g.n_buses;
  const Mat& C = g.gen_cost_quad;
  const Vec lin = g.gen_cost_lin + 2.0 * (C * p_dot);
  for (int i = 0; i < b; ++i) {
    qb.obj_lin(r0 + i, weight * lin[i]);
    qb.obj_quad(r0 + i, r0 + i, weight * C(i, i));
    for (int j = i + 1; j < b; ++j)
      if (C(i, j) != 0.0) qb.obj_quad(r0 + i, r0 + j, 2.0 * weight * C(i, j));
    qb.obj_lin(l0 + i, weight * g.shed_cost[i]);
  }
  const Vec net = d - omega - p_dot;
  const Vec colsum = netdc.conversion.colwise().sum().transpose();
  {  // balance
    int row = qb.begin_eq(net.sum());
    for (int i = 0; i < b; ++i) {
      qb.eq_add(row, r0 + i, 1.0);
      qb.eq_add(row, l0 + i, 1.0);
    }
    for (int i = 0; i < lx.n; ++i) qb.eq_add(row, lx.th(0, i), -colsum[i]);
  }
  const Mat FG = g.ptdf * netdc.conversion;
  for (std::size_t l = 0; l < g.lines.size(); ++l) {
    const double shift = g.ptdf.row(static_cast<int>(l)).dot(net);
    for (double sgn : {1.0, -1.0}) {
      int row = qb.begin_le(g.lines[l].capacity + sgn * shift);
      for (int i = 0; i < b; ++i)
        if (g.ptdf(static_cast<int>(l), i) != 0.0) {
          qb.le_add(row, r0 + i, sgn * g.ptdf(static_cast<int>(l), i));
          qb.le_add(row, l0 + i, sgn * g.ptdf(static_cast<int>(l), i));
        }
      for (int i = 0; i < lx.n; ++i)
        if (FG(static_cast<int>(l), i) != 0.0)
          qb.le_add(row, lx.th(0, i), -sgn * FG(static_cast<int>(l), i));
    }
  }
  for (int i = 0; i < b; ++i) {
    // committed units stay within their limits; off units stay off
    double lo = g.gen_min[i] * u_dot[i] - p_dot[i];
    double hi = g.gen_max[i] * u_dot[i] - p_dot[i];
    qb.bound(r0 + i, std::max(lo, -r_bar[i]), std::min(hi, r_bar[i]));
    qb.bound(l0 + i, 0.0, d[i]);
  }
  return g.gen_cost_lin.dot(p_dot) + p_dot.dot(C * p_dot);
}

}  // namespace detail

namespace detail {

struct IdealBuild {
  MixedIntegerKktProblem prob;
  LowerIndex lx;
  double constant = 0.0;  // cost of the fixed day-ahead dispatch
};

inline IdealBuild build_ideal(const GridModel& grid, const NetDCModel& netdc,
                              const SpaceTimeTopology& topo,
                              const NominalAllocation& nominal,
                              const Mat& demand_mat, const Vec& loads,
                              const Vec& renewables, const Vec& p_dot,
                              const Vec& u_dot, const Vec& r_bar,
                              bool min_shift_l1 = false,
                              double linear_cost_cap =
                                  std::numeric_limits<double>::infinity()) {
  const int b = grid.n_buses, n = netdc.n_dc, m = netdc.n_users;
  const int k = topo.n_links;
  IdealBuild out;
  out.lx = LowerIndex{n, m, 1, 2 * b + k, 0, 0, 0};
  out.lx.base_dual = out.lx.base_primal + out.lx.per_p();
  out.lx.mu_phi0 = out.lx.base_dual + out.lx.per_d();
  out.lx.mu_tau0 = out.lx.mu_phi0 + n;
  int total = 2 * b + k + out.lx.size();
  int aux0 = total;
  if (min_shift_l1) total += k;

  qp::QpBuilder qb;
  qb.add_vars(total);
  out.constant = emit_redispatch(qb, grid, loads, renewables, p_dot, u_dot,
                                 r_bar, 0, b, netdc, out.lx, 1.0);
  emit_lower(qb, netdc, topo, nominal.loading, nominal.latency_per_hour,
             demand_mat, 2 * b, out.lx, out.prob.sos1);
  if (min_shift_l1) {
    for (int l = 0; l < k; ++l) {
      qb.obj_lin(aux0 + l, 1.0);
      int row = qb.begin_le(0.0);
      qb.le_add(row, 2 * b + l, 1.0);
      qb.le_add(row, aux0 + l, -1.0);
      row = qb.begin_le(0.0);
      qb.le_add(row, 2 * b + l, -1.0);
      qb.le_add(row, aux0 + l, -1.0);
    }
    int row = qb.begin_le(linear_cost_cap);
    for (int i = 0; i < b; ++i) qb.le_add(row, b + i, grid.shed_cost[i]);
    out.prob.qp = qb.build();
    out.prob.qp.Q.setZero();
    Vec c = Vec::Zero(total);
    for (int l = 0; l < k; ++l) c[aux0 + l] = 1.0;
    out.prob.qp.c = c;
  } else {
    out.prob.qp = qb.build();
    out.prob.repair = [netdc, topo, w_dot = nominal.allocation, demand_mat, b,
                       lx = out.lx](const Vec&, const qp::QpSolution& relaxed)
        -> std::optional<qp::QpSolution> {
      qp::QpSolution fixed = relaxed;
      if (!patch_lower_block(fixed.x, netdc, topo, w_dot, demand_mat, 2 * b,
                             lx))
        return std::nullopt;
      // The upper variables are untouched, so the relaxed objective is
      // already the redispatch cost of the completed point.
      fixed.status = qp::QpStatus::kOptimal;
      return fixed;
    };
  }
  return out;
}

}  // namespace detail

/// Per-scenario cost-optimal shift with the commitment and day-ahead dispatch
/// fixed — the unreachable benchmark for any fixed policy. Among cost-equal
/// optima the reported shift minimizes ||phi||_1.
inline IdealSolution solve_single_period_ideal(
    const GridModel& grid, const NetDCModel& netdc, const Vec& loads,
    const Vec& renewables, const Vec& demand, const Vec& p_dot,
    const Vec& u_dot, const Vec& r_bar, const BnbOptions& opt = {}) {
  const int b = grid.n_buses, n = netdc.n_dc;
  auto topo = build_incidence(n, 1);
  const int k = topo.n_links;
  Mat demand_mat = demand;
  auto nominal = nominal_allocation(netdc, demand_mat);
  auto built = detail::build_ideal(grid, netdc, topo, nominal, demand_mat,
                                   loads, renewables, p_dot, u_dot, r_bar);

  auto r = branch_and_bound(built.prob, opt);
  IdealSolution out;
  out.status = r.status;
  out.report = r.report;
  if (r.status != qp::QpStatus::kOptimal) return out;
  auto extract = [&](const Vec& x) {
    out.redispatch = Vec(b);
    out.shed = Vec(b);
    for (int i = 0; i < b; ++i) {
      out.redispatch[i] = x[i];
      out.shed[i] = x[b + i];
    }
    out.shift = Vec(k);
    for (int l = 0; l < k; ++l) out.shift[l] = x[2 * b + l];
    out.loading = apply_shift(topo, out.shift, nominal.loading);
  };
  extract(r.x);
  out.cost = r.objective + built.constant;

  if (k > 0 && grid.gen_cost_quad.diagonal().minCoeff() > 0.0) {
    // Redispatch r is unique (strictly convex cost); with r pinned the
    // remaining cost is shedding only, so the cap is linear and exact.
    Vec p = p_dot + out.redispatch;
    double quad_cost =
        grid.gen_cost_lin.dot(p) + p.dot(grid.gen_cost_quad * p);
    double cap =
        out.cost - quad_cost + 1e-7 * (1.0 + std::abs(out.cost));
    auto tie = detail::build_ideal(grid, netdc, topo, nominal, demand_mat,
                                   loads, renewables, p_dot, u_dot, r_bar,
                                   true, cap);
    std::vector<std::pair<int, double>> fix;
    for (int i = 0; i < b; ++i) fix.emplace_back(i, out.redispatch[i]);
    auto sol = qp::solve_qp(tie.prob.qp.with_fixings(fix));
    if (sol.status == qp::QpStatus::kOptimal &&
        sol.objective < out.shift.cwiseAbs().sum() - 1e-9) {
      extract(sol.x);
      double cost = quad_cost;
      for (int i = 0; i < b; ++i)
        cost += grid.shed_cost[i] * sol.x[b + i];
      out.cost = std::min(out.cost, cost);
    }
  }
  return out;
}

}  // namespace flexgrid::bilevel
