#pragma once

// Data-center operator problems: latency-optimal task allocation, the
// shift-response re-allocation, and the first-order (KKT) residual used to
// certify solutions of the latter.

#include "flexgrid/core/latency.hpp"
#include "flexgrid/core/topology.hpp"
#include "flexgrid/core/types.hpp"
#include "flexgrid/qp/solve.hpp"

#include <vector>

namespace flexgrid {

struct AllocationResult {
  qp::QpStatus status = qp::QpStatus::kMaxIterations;
  std::vector<Mat> allocation;     // W_t, n_dc x n_users per hour
  Vec loading;                     // data-center loading, stacked hour-major
  std::vector<Vec> demand_shifted; // delta-tilde_t (re-allocation only)
  Mat demand;                      // nominal delta, n_users x horizon
  std::vector<double> latency_per_hour;
  double objective = 0.0;

  // Duals of the re-allocation problem, named after their constraints.
  std::vector<Vec> mu_demand;   // conservation to users, per hour (m)
  std::vector<Vec> mu_loading;  // conservation to data centers, per hour (n)
  std::vector<Mat> mu_alloc;    // nonnegativity of W, per hour (n x m)
  Vec mu_cap;                   // latency cap, per hour
  Vec mu_link;                  // shift-coupling rows, stacked hour-major
  Vec mu_conserve;              // temporal task conservation (m)

  int horizon() const { return static_cast<int>(allocation.size()); }
};

/// Latency-optimal allocation for one hour of user demand (strictly convex,
/// unique). Always feasible for nonnegative demand.
inline AllocationResult latency_optimal_allocation(const NetDCModel& netdc,
                                                   const Vec& delta) {
  const int n = netdc.n_dc, m = netdc.n_users;
  if (delta.size() != m)
    throw ValidationError("latency_optimal_allocation: demand must be per user");
  if (delta.size() > 0 && delta.minCoeff() < 0)
    throw ValidationError("latency_optimal_allocation: demand must be >= 0");

  qp::QpBuilder b;
  int vw = b.add_vars(n * m);  // W, row-major (dc-major)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      b.obj_lin(vw + i * m + j, netdc.distance(i, j));
      b.obj_quad(vw + i * m + j, vw + i * m + j, 0.5 * netdc.alloc_reg);
    }
  for (int j = 0; j < m; ++j) {
    int row = b.begin_eq(delta[j]);
    for (int i = 0; i < n; ++i) b.eq_add(row, vw + i * m + j, 1.0);
  }
  for (int i = 0; i < n * m; ++i) b.le_add(b.begin_le(0.0), vw + i, -1.0);

  auto sol = qp::solve_qp(b.build());
  AllocationResult res;
  res.status = sol.status;
  if (sol.status != qp::QpStatus::kOptimal) return res;
  Mat W(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) W(i, j) = std::max(0.0, sol.x[vw + i * m + j]);
  res.allocation = {W};
  res.loading = W.rowwise().sum();
  res.latency_per_hour = {latency(W, netdc.distance)};
  res.objective = sol.objective;
  res.mu_demand = {-sol.y};
  Mat mw(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) mw(i, j) = sol.z[i * m + j];
  res.mu_alloc = {mw};
  return res;
}

/// Nominal (pre-coordination) allocation over a horizon of demand columns.
struct NominalAllocation {
  std::vector<Mat> allocation;  // W-dot per hour
  Vec loading;                  // theta-dot, stacked hour-major
  std::vector<double> latency_per_hour;
};

inline NominalAllocation nominal_allocation(const NetDCModel& netdc,
                                            const Mat& demand) {
  NominalAllocation out;
  const int tau = static_cast<int>(demand.cols());
  out.loading = Vec::Zero(netdc.n_dc * tau);
  for (int t = 0; t < tau; ++t) {
    auto r = latency_optimal_allocation(netdc, demand.col(t));
    if (r.status != qp::QpStatus::kOptimal)
      throw std::runtime_error("nominal allocation failed to solve");
    out.allocation.push_back(r.allocation[0]);
    out.loading.segment(t * netdc.n_dc, netdc.n_dc) = r.allocation[0].rowwise().sum();
    out.latency_per_hour.push_back(r.latency_per_hour[0]);
  }
  return out;
}

/// Answers a shift request: re-allocates tasks so that the loading change
/// follows the virtual links while the per-hour latency loss stays within
/// the cap. An infeasible status signals that the request violates the cap
/// or nonnegativity (the real-time rule then falls back to a zero shift).
///
/// With horizon 1 the temporal conservation pins the shifted user demand to
/// its nominal value, which reduces the problem to its single-period form.
inline AllocationResult reallocate(const NetDCModel& netdc,
                                   const SpaceTimeTopology& topo, const Vec& phi,
                                   const std::vector<Mat>& w_dot,
                                   const Mat& demand) {
  const int n = netdc.n_dc, m = netdc.n_users, tau = topo.horizon;
  if (static_cast<int>(w_dot.size()) != tau || demand.cols() != tau)
    throw ValidationError("reallocate: horizon mismatch");
  if (phi.size() != topo.n_links)
    throw ValidationError("reallocate: shift length must equal link count");

  Vec theta_dot(n * tau);
  std::vector<double> lat_dot(tau);
  for (int t = 0; t < tau; ++t) {
    theta_dot.segment(t * n, n) = w_dot[t].rowwise().sum();
    lat_dot[t] = latency(w_dot[t], netdc.distance);
  }
  const Vec theta_new = apply_shift(topo, phi, theta_dot);

  qp::QpBuilder b;
  // Per hour: W (n*m), delta-tilde (m), theta-tilde (n), latency-change aux.
  const int per = n * m + m + n + 1;
  auto vw = [&](int t, int i, int j) { return t * per + i * m + j; };
  auto vd = [&](int t, int j) { return t * per + n * m + j; };
  auto vt = [&](int t, int i) { return t * per + n * m + m + i; };
  auto vl = [&](int t) { return t * per + n * m + m + n; };
  b.add_vars(per * tau);

  for (int t = 0; t < tau; ++t) {
    b.obj_quad(vl(t), vl(t), 0.5);
    for (int j = 0; j < m; ++j) {
      b.obj_quad(vd(t, j), vd(t, j), 0.5 * netdc.shift_reg);
      b.obj_lin(vd(t, j), -netdc.shift_reg * demand(j, t));
    }
  }

  std::vector<int> row_demand(tau * m), row_loading(tau * n), row_link(tau * n);
  std::vector<int> row_aux(tau), row_cap(tau), row_nonneg(tau * n * m);
  for (int t = 0; t < tau; ++t) {
    for (int j = 0; j < m; ++j) {  // sum_i w_ij - delta_j = 0
      int row = b.begin_eq(0.0);
      row_demand[t * m + j] = row;
      for (int i = 0; i < n; ++i) b.eq_add(row, vw(t, i, j), 1.0);
      b.eq_add(row, vd(t, j), -1.0);
    }
    for (int i = 0; i < n; ++i) {  // sum_j w_ij - theta_i = 0
      int row = b.begin_eq(0.0);
      row_loading[t * n + i] = row;
      for (int j = 0; j < m; ++j) b.eq_add(row, vw(t, i, j), 1.0);
      b.eq_add(row, vt(t, i), -1.0);
    }
    for (int i = 0; i < n; ++i) {  // theta_i pinned to the shifted loading
      int row = b.begin_eq(theta_new[t * n + i]);
      row_link[t * n + i] = row;
      b.eq_add(row, vt(t, i), 1.0);
    }
    {  // aux = L(W_t) - L(W-dot_t)
      int row = b.begin_eq(-lat_dot[t]);
      row_aux[t] = row;
      b.eq_add(row, vl(t), 1.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
          b.eq_add(row, vw(t, i, j), -netdc.distance(i, j));
    }
    {  // latency cap
      int row = b.begin_le(netdc.latency_loss_cap * lat_dot[t]);
      row_cap[t] = row;
      b.le_add(row, vl(t), 1.0);
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        int row = b.begin_le(0.0);
        row_nonneg[t * n * m + i * m + j] = row;
        b.le_add(row, vw(t, i, j), -1.0);
      }
  }
  std::vector<int> row_conserve(m);
  for (int j = 0; j < m; ++j) {  // temporal task conservation
    int row = b.begin_eq(demand.row(j).sum());
    row_conserve[j] = row;
    for (int t = 0; t < tau; ++t) b.eq_add(row, vd(t, j), 1.0);
  }

  auto sol = qp::solve_qp(b.build());
  AllocationResult res;
  res.status = sol.status;
  if (sol.status != qp::QpStatus::kOptimal) return res;

  res.loading = theta_new;
  res.demand = demand;
  // Constant regularizer offset: objective above omits rho/2*||delta||^2
  // terms' constant; rebuild the true Eq-form value from the solution.
  res.mu_cap = Vec(tau);
  res.mu_link = Vec(n * tau);
  res.mu_conserve = Vec(m);
  double obj = 0.0;
  for (int t = 0; t < tau; ++t) {
    Mat W(n, m), mw(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        W(i, j) = std::max(0.0, sol.x[vw(t, i, j)]);
        mw(i, j) = sol.z[row_nonneg[t * n * m + i * m + j]];
      }
    res.allocation.push_back(W);
    Vec dt(m), mu_d(m), mu_t(n);
    for (int j = 0; j < m; ++j) {
      dt[j] = sol.x[vd(t, j)];
      mu_d[j] = -sol.y[row_demand[t * m + j]];
    }
    for (int i = 0; i < n; ++i) mu_t[i] = -sol.y[row_loading[t * n + i]];
    res.demand_shifted.push_back(dt);
    res.mu_demand.push_back(mu_d);
    res.mu_loading.push_back(mu_t);
    res.mu_alloc.push_back(mw);
    res.mu_cap[t] = sol.z[row_cap[t]];
    for (int i = 0; i < n; ++i)
      res.mu_link[t * n + i] = sol.y[row_link[t * n + i]];
    res.latency_per_hour.push_back(latency(W, netdc.distance));
    double dl = res.latency_per_hour.back() - lat_dot[t];
    obj += 0.5 * dl * dl +
           0.5 * netdc.shift_reg * (dt - demand.col(t)).squaredNorm();
  }
  for (int j = 0; j < m; ++j) res.mu_conserve[j] = -sol.y[row_conserve[j]];
  res.objective = obj;
  return res;
}

/// Max-norm residual of the re-allocation first-order conditions:
/// stationarity, dual feasibility, and complementarity products.
inline double kkt_residual(const AllocationResult& r, const Vec& phi,
                           const std::vector<Mat>& w_dot,
                           const NetDCModel& netdc,
                           const SpaceTimeTopology& topo) {
  (void)phi;
  const int n = netdc.n_dc, m = netdc.n_users, tau = r.horizon();
  double res = 0.0;
  auto bump = [&res](double v) { res = std::max(res, std::abs(v)); };
  for (int t = 0; t < tau; ++t) {
    const Mat& W = r.allocation[t];
    const double dl = latency(W, netdc.distance) - latency(w_dot[t], netdc.distance);
    const double cap = netdc.latency_loss_cap * latency(w_dot[t], netdc.distance);
    // Stationarity in the loading variables.
    for (int i = 0; i < n; ++i)
      bump(r.mu_loading[t][i] + r.mu_link[t * n + i]);
    // Stationarity in the shifted demand.
    if (!r.demand_shifted.empty())
      for (int j = 0; j < m; ++j)
        bump(netdc.shift_reg * (r.demand_shifted[t][j] - r.demand(j, t)) +
             r.mu_demand[t][j] - r.mu_conserve[j]);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        double g = netdc.distance(i, j);
        bump(g * dl - r.mu_demand[t][j] - r.mu_loading[t][i] -
             r.mu_alloc[t](i, j) + r.mu_cap[t] * g);
        bump(std::min(0.0, r.mu_alloc[t](i, j)));               // dual feas
        bump(r.mu_alloc[t](i, j) * W(i, j));                    // complementarity
      }
    bump(std::min(0.0, r.mu_cap[t]));
    bump(r.mu_cap[t] * (dl - cap));
  }
  (void)topo;
  return res;
}

}  // namespace flexgrid
