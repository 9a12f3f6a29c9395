#pragma once

// Real-time coordination rule: evaluate the affine policy at the observed
// features, screen the proposed shift against both systems (compute network
// re-allocation and zero-shedding re-dispatch), and apply it only if both
// screens pass; otherwise fall back to the non-coordinated action phi = 0.

#include "flexgrid/core/topology.hpp"
#include "flexgrid/core/types.hpp"
#include "flexgrid/lower/allocation.hpp"
#include "flexgrid/qp/problem.hpp"
#include "flexgrid/qp/solve.hpp"

#include <limits>

namespace flexgrid::policy {

enum class RtBranch { kPolicy, kFallback };

struct CoordinationOutcome {
  Vec applied_shift;  // phi-hat when applied, zeros on fallback
  RtBranch branch = RtBranch::kFallback;
  double realized_cost = std::numeric_limits<double>::infinity();
  bool netdc_ok = false;
  bool opf_ok = false;
};

namespace detail {

struct DispatchBuild {
  qp::QuadraticProgram qp;
  double constant = 0.0;  // cost of the fixed day-ahead dispatch
};

/// Single-hour re-dispatch around a fixed schedule (p-dot, u-dot) with the
/// data-center bus load held constant at `dc_bus`. Variables: r per bus, then
/// shed per bus. With `feasibility_only` the objective is total shed, which
/// turns the solve into a zero-shedding screen.
inline DispatchBuild build_dispatch(const GridModel& g, const Vec& d,
                                    const Vec& omega, const Vec& p_dot,
                                    const Vec& u_dot, const Vec& r_bar,
                                    const Vec& dc_bus, bool feasibility_only) {
  const int b = g.n_buses;
  const Mat& C = g.gen_cost_quad;
  qp::QpBuilder qb;
  int r0 = qb.add_vars(b);
  int l0 = qb.add_vars(b);
  DispatchBuild out;
  if (feasibility_only) {
    for (int i = 0; i < b; ++i) qb.obj_lin(l0 + i, 1.0);
  } else {
    const Vec lin = g.gen_cost_lin + 2.0 * (C * p_dot);
    for (int i = 0; i < b; ++i) {
      qb.obj_lin(r0 + i, lin[i]);
      qb.obj_quad(r0 + i, r0 + i, C(i, i));
      for (int j = i + 1; j < b; ++j)
        if (C(i, j) != 0.0) qb.obj_quad(r0 + i, r0 + j, 2.0 * C(i, j));
      qb.obj_lin(l0 + i, g.shed_cost[i]);
    }
    out.constant = g.gen_cost_lin.dot(p_dot) + p_dot.dot(C * p_dot);
  }
  const Vec net = d + dc_bus - omega - p_dot;
  {  // balance
    int row = qb.begin_eq(net.sum());
    for (int i = 0; i < b; ++i) {
      qb.eq_add(row, r0 + i, 1.0);
      qb.eq_add(row, l0 + i, 1.0);
    }
  }
  for (std::size_t l = 0; l < g.lines.size(); ++l) {  // two-sided flow limits
    const int lr = static_cast<int>(l);
    const double shift = g.ptdf.row(lr).dot(net);
    for (double sgn : {1.0, -1.0}) {
      int row = qb.begin_le(g.lines[l].capacity + sgn * shift);
      for (int i = 0; i < b; ++i)
        if (g.ptdf(lr, i) != 0.0) {
          qb.le_add(row, r0 + i, sgn * g.ptdf(lr, i));
          qb.le_add(row, l0 + i, sgn * g.ptdf(lr, i));
        }
    }
  }
  for (int i = 0; i < b; ++i) {
    // committed units stay within their limits; off units stay off
    double lo = g.gen_min[i] * u_dot[i] - p_dot[i];
    double hi = g.gen_max[i] * u_dot[i] - p_dot[i];
    qb.bound(r0 + i, std::max(lo, -r_bar[i]), std::min(hi, r_bar[i]));
    qb.bound(l0 + i, 0.0, d[i]);
  }
  out.qp = qb.build();
  return out;
}

struct DispatchResult {
  qp::QpStatus status = qp::QpStatus::kInfeasible;
  double cost = std::numeric_limits<double>::infinity();
  Vec redispatch, shed;
};

inline DispatchResult solve_dispatch(const GridModel& g, const Vec& d,
                                     const Vec& omega, const Vec& p_dot,
                                     const Vec& u_dot, const Vec& r_bar,
                                     const Vec& dc_bus) {
  auto built = build_dispatch(g, d, omega, p_dot, u_dot, r_bar, dc_bus, false);
  auto sol = qp::solve_qp(built.qp);
  DispatchResult out;
  out.status = sol.status;
  if (sol.status != qp::QpStatus::kOptimal) return out;
  out.cost = sol.objective + built.constant;
  out.redispatch = sol.x.head(g.n_buses);
  out.shed = sol.x.segment(g.n_buses, g.n_buses);
  return out;
}

/// Screen: does a re-dispatch within r-bar serve the full load without
/// shedding?  Solved as a min-total-shed LP over the same constraint set.
inline bool zero_shed_feasible(const GridModel& g, const Vec& d,
                               const Vec& omega, const Vec& p_dot,
                               const Vec& u_dot, const Vec& r_bar,
                               const Vec& dc_bus) {
  auto built = build_dispatch(g, d, omega, p_dot, u_dot, r_bar, dc_bus, true);
  auto sol = qp::solve_qp(built.qp);
  return sol.status == qp::QpStatus::kOptimal &&
         sol.objective <= 1e-8 * (1.0 + d.sum() + dc_bus.sum());
}

inline void check_rt_record(const ScenarioRecord& record) {
  record.validate();
  if (!record.day_ahead_dispatch || !record.commitment)
    throw ValidationError(
        "coordinate_rt: record must carry day-ahead dispatch and commitment");
}

}  // namespace detail

/// Realized single-hour cost when no coordination is attempted (phi = 0).
/// The fallback branch of coordinate_rt goes through exactly this path, so
/// its realized cost matches this value bit for bit.
inline double noncoordinated_cost(const ScenarioRecord& record,
                                  const GridModel& grid,
                                  const NetDCModel& netdc, const Vec& r_bar) {
  detail::check_rt_record(record);
  auto nominal = nominal_allocation(netdc, record.compute_demand);
  const Vec dc_bus = netdc.conversion * nominal.loading;
  auto disp = detail::solve_dispatch(grid, record.loads.col(0),
                                     record.renewables.col(0),
                                     *record.day_ahead_dispatch,
                                     *record.commitment, r_bar, dc_bus);
  return disp.cost;
}

/// The real-time rule: propose phi-hat from the policy, apply it only if the
/// compute network accepts the shift and the grid can serve the shifted load
/// without shedding; otherwise fall back to phi = 0.
inline CoordinationOutcome coordinate_rt(const PolicySpec& policy,
                                         const ScenarioRecord& record,
                                         const GridModel& grid,
                                         const NetDCModel& netdc,
                                         const Vec& r_bar) {
  detail::check_rt_record(record);
  policy.validate();
  const auto topo = build_incidence(netdc.n_dc, 1);
  const Vec d = record.loads.col(0);
  const Vec omega = record.renewables.col(0);
  const Vec& p_dot = *record.day_ahead_dispatch;
  const Vec& u_dot = *record.commitment;
  auto nominal = nominal_allocation(netdc, record.compute_demand);

  CoordinationOutcome out;
  const Vec phi_hat = policy.shift(record.features);
  auto re = reallocate(netdc, topo, phi_hat, nominal.allocation,
                       record.compute_demand);
  out.netdc_ok = re.status == qp::QpStatus::kOptimal;
  const Vec theta = apply_shift(topo, phi_hat, nominal.loading);
  const Vec dc_bus = netdc.conversion * theta;
  out.opf_ok =
      detail::zero_shed_feasible(grid, d, omega, p_dot, u_dot, r_bar, dc_bus);

  if (out.netdc_ok && out.opf_ok) {
    auto disp =
        detail::solve_dispatch(grid, d, omega, p_dot, u_dot, r_bar, dc_bus);
    if (disp.status == qp::QpStatus::kOptimal) {
      out.branch = RtBranch::kPolicy;
      out.applied_shift = phi_hat;
      out.realized_cost = disp.cost;
      return out;
    }
  }
  out.branch = RtBranch::kFallback;
  out.applied_shift = Vec::Zero(topo.n_links);
  out.realized_cost = noncoordinated_cost(record, grid, netdc, r_bar);
  return out;
}

}  // namespace flexgrid::policy
