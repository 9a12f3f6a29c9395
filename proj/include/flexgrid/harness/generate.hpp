#pragma once

// Seeded synthetic system generation: a connected zonal grid (ring plus
// chords) with PTDF from synthetic reactances, diurnal load and renewable
// profiles, data centers installed in the heaviest zones, and single-hour
// scenario records carrying features and a day-ahead schedule.

#include "flexgrid/bilevel/coordination.hpp"
#include "flexgrid/core/features.hpp"
#include "flexgrid/core/types.hpp"
#include "flexgrid/lower/allocation.hpp"
#include "flexgrid/policy/rule.hpp"
#include "flexgrid/qp/solve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <vector>

namespace flexgrid::harness {

struct GenOptions {
  int n_scenarios = 40;  // single-hour records
  int horizon = 5;       // hours in the day-ahead profile
  int n_users = 0;       // 0: one user group per data center
  double latency_loss_cap = 0.25;
};

struct SystemBundle {
  GridModel grid;
  NetDCModel netdc;
  FeatureSchema schema;
  ScenarioRecord day_profile;  // multi-hour, no features or day-ahead
  std::vector<ScenarioRecord> records;
};

namespace detail {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  // fixed 53-bit mapping; std::uniform_real_distribution is
  // implementation-defined and would break byte-identical generation
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

inline int uniform_int(std::mt19937_64& rng, int n) {
  return static_cast<int>(rng() % static_cast<std::uint64_t>(n));
}

/// Diurnal demand shape, peak in the evening.
inline double load_shape(int hour) {
  double x = (hour - 18.0) / 6.5;
  return 0.62 + 0.38 * std::exp(-x * x);
}

/// Solar-like shape, zero at night.
inline double renewable_shape(int hour) {
  double s = std::sin(M_PI * (hour - 6.0) / 12.0);
  return hour >= 6 && hour <= 18 ? s : 0.0;
}

inline bool connected(int b, const std::vector<GridModel::Line>& lines) {
  std::vector<std::vector<int>> adj(b);
  for (const auto& l : lines) {
    adj[l.from].push_back(l.to);
    adj[l.to].push_back(l.from);
  }
  std::vector<bool> seen(b, false);
  std::vector<int> stack = {0};
  seen[0] = true;
  int count = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int w : adj[v])
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        stack.push_back(w);
      }
  }
  return count == b;
}

/// PTDF with bus 0 as slack: F = diag(1/x) M_r (M_r' diag(1/x) M_r)^-1
/// where M is the line-bus incidence and _r drops the slack column.
inline Mat ptdf_from_reactances(int b, const std::vector<GridModel::Line>& lines,
                                const Vec& reactance) {
  const int nl = static_cast<int>(lines.size());
  if (b == 1 || nl == 0) return Mat::Zero(nl, b);
  Mat M = Mat::Zero(nl, b);
  for (int l = 0; l < nl; ++l) {
    M(l, lines[l].from) = 1.0;
    M(l, lines[l].to) = -1.0;
  }
  Mat Mr = M.rightCols(b - 1);
  Mat Y = reactance.cwiseInverse().asDiagonal();
  Mat Br = Mr.transpose() * Y * Mr;
  Mat Fr = Y * Mr * Br.inverse();
  Mat F = Mat::Zero(nl, b);
  F.rightCols(b - 1) = Fr;
  return F;
}

/// Seeded sample of `k` distinct values from 0..n-1 (partial Fisher-Yates).
inline std::vector<int> sample_distinct(std::mt19937_64& rng, int n, int k) {
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int j = 0; j < k; ++j)
    std::swap(pool[j], pool[j + uniform_int(rng, n - j)]);
  pool.resize(k);
  return pool;
}

inline int ring_distance(int a, int b, int n) {
  int d = std::abs(a - b);
  return std::min(d, n - d);
}

/// Zonal prices from the economic-dispatch duals: sensitivity of the optimal
/// dispatch cost to one extra MW of load at each bus.
inline Vec zonal_prices(const GridModel& g, const Vec& d, const Vec& omega,
                        const Vec& u_dot, const Vec& dc_bus) {
  auto built = policy::detail::build_dispatch(
      g, d, omega, Vec::Zero(g.n_buses), u_dot,
      g.gen_max /* dispatch freely within commitment */, dc_bus, false);
  auto sol = qp::solve_qp(built.qp);
  if (sol.status != qp::QpStatus::kOptimal)
    throw ValidationError(std::string("zonal_prices: baseline dispatch did "
                                      "not solve: ") +
                          qp::to_string(sol.status));
  Vec price = Vec::Constant(g.n_buses, -sol.y[0]);
  // flow rows come first, two per line (+ then - side)
  for (int l = 0; l < g.n_lines(); ++l)
    for (int i = 0; i < g.n_buses; ++i)
      price[i] -= (sol.z[2 * l] - sol.z[2 * l + 1]) * g.ptdf(l, i);
  return price;
}

}  // namespace detail

inline SystemBundle generate_system(std::uint64_t seed, int n_zones, int n_dc,
                                    double penetration,
                                    const GenOptions& opt = {}) {
  if (n_zones < 1 || n_dc < 1 || n_dc > n_zones)
    throw ValidationError("generate_system: need 1 <= n_dc <= n_zones");
  if (penetration <= 0.0 || penetration >= 1.0)
    throw ValidationError("generate_system: penetration must lie in (0, 1)");
  std::mt19937_64 rng(seed);
  const int b = n_zones;
  SystemBundle out;
  GridModel& g = out.grid;
  g.n_buses = b;

  // --- topology: ring plus seeded chords, re-drawn if degenerate ----------
  if (b == 2) {
    g.lines.push_back({0, 1, 0.0});
  } else if (b > 2) {
    for (int i = 0; i < b; ++i) g.lines.push_back({i, (i + 1) % b, 0.0});
    int extra = b >= 6 ? std::max(1, b / 8) : 0;
    std::set<std::pair<int, int>> used;
    for (int c = 0; c < extra; ++c) {
      bool placed = false;
      for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
        int from = detail::uniform_int(rng, b);
        int to = (from + b / 2) % b;
        auto key = std::minmax(from, to);
        if (detail::ring_distance(from, to, b) < 2 || used.count(key)) continue;
        used.insert(key);
        g.lines.push_back({key.first, key.second, 0.0});
        placed = true;
      }
      if (!placed)
        throw ValidationError("generate_system: could not place a chord");
    }
  }
  if (!detail::connected(b, g.lines))
    throw ValidationError("generate_system: topology draw is disconnected");
  const int nl = g.n_lines();
  Vec reactance(nl);
  for (int l = 0; l < nl; ++l) reactance[l] = detail::uniform(rng, 0.5, 1.5);
  g.ptdf = detail::ptdf_from_reactances(b, g.lines, reactance);

  // --- loads and renewables ----------------------------------------------
  Vec base(b);
  for (int i = 0; i < b; ++i) base[i] = detail::uniform(rng, 60.0, 140.0);
  Vec renew_cap(b);
  {
    Vec share(b);
    for (int i = 0; i < b; ++i) share[i] = detail::uniform(rng, 0.1, 1.0);
    renew_cap = 0.25 * base.sum() * share / share.sum();
  }
  Mat loads24(b, 24), renew24(b, 24);
  for (int t = 0; t < 24; ++t)
    for (int i = 0; i < b; ++i) {
      loads24(i, t) = base[i] * detail::load_shape(t) *
                      detail::uniform(rng, 0.97, 1.03);
      renew24(i, t) = renew_cap[i] * detail::renewable_shape(t) *
                      detail::uniform(rng, 0.7, 1.0);
    }
  Vec total24 = loads24.colwise().sum().transpose();
  int peak_hour = 0;
  total24.maxCoeff(&peak_hour);

  // --- generators ----------------------------------------------------------
  g.gen_cost_lin = Vec(b);
  Vec quad(b);
  for (int i = 0; i < b; ++i) {
    g.gen_cost_lin[i] = detail::uniform(rng, 15.0, 60.0);
    quad[i] = detail::uniform(rng, 0.02, 0.08);
  }
  g.gen_cost_quad = quad.asDiagonal();
  g.gen_max = 2.2 * base;
  g.gen_min = 0.15 * g.gen_max;
  g.ramp_up = g.ramp_dn = 0.5 * g.gen_max;
  g.startup_ramp = g.shutdown_ramp = 0.3 * g.gen_max;
  g.startup_cost = Vec(b);
  for (int i = 0; i < b; ++i)
    g.startup_cost[i] = detail::uniform(rng, 50.0, 200.0);
  g.shed_cost = Vec::Constant(b, 2000.0);
  g.redispatch_limit = g.gen_max;

  // --- data centers and users ----------------------------------------------
  NetDCModel& dc = out.netdc;
  dc.n_dc = n_dc;
  const int m = opt.n_users > 0 ? opt.n_users : n_dc;
  dc.n_users = m;
  {
    // heaviest zones host the data centers; ties broken by index
    std::vector<int> order(b);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int c) { return base[a] > base[c]; });
    dc.dc_bus.assign(order.begin(), order.begin() + n_dc);
    std::sort(dc.dc_bus.begin(), dc.dc_bus.end());
  }
  dc.conversion = Mat::Zero(b, n_dc);
  for (int j = 0; j < n_dc; ++j) dc.conversion(dc.dc_bus[j], j) = 1.0;
  std::vector<int> user_zone = detail::sample_distinct(rng, b, std::min(m, b));
  while (static_cast<int>(user_zone.size()) < m)
    user_zone.push_back(detail::uniform_int(rng, b));
  dc.distance = Mat(n_dc, m);
  for (int i = 0; i < n_dc; ++i)
    for (int j = 0; j < m; ++j)
      dc.distance(i, j) =
          1.0 + detail::ring_distance(dc.dc_bus[i], user_zone[j], b);
  dc.latency_loss_cap = opt.latency_loss_cap;
  dc.alloc_reg = 1e-3;
  dc.shift_reg = 1e-3;

  // --- computing demand: total scaled to the penetration target ------------
  Vec user_share(m);
  for (int j = 0; j < m; ++j) user_share[j] = base[user_zone[j]];
  user_share /= user_share.sum();
  Mat demand24(m, 24);
  for (int t = 0; t < 24; ++t)
    demand24.col(t) = penetration * total24[t] * user_share;

  // --- line capacities: headroom over a proportional reference dispatch ----
  // Flows under the reference dispatch are linear in the per-bus net load,
  // and every scenario record draws its net load from a known box around the
  // hourly profile (loads x0.85..1.15, renewables up to x1.1, computing
  // demand x0.8..1.2). Sizing each line to the interval bound of that box
  // keeps the reference dispatch feasible for every record, not just the
  // nominal hours.
  {
    Vec cap = Vec::Zero(nl);
    Vec w = g.gen_max / g.gen_max.sum();
    Vec ptdf_w = g.ptdf * w;
    for (int t = 0; t < 24; ++t) {
      Vec dc_bus_load = dc.conversion *
                        (nominal_allocation(dc, Mat(demand24.col(t))).loading);
      Vec lo = 0.85 * loads24.col(t) + 0.8 * dc_bus_load -
               1.1 * renew24.col(t);
      Vec hi = 1.15 * loads24.col(t) + 1.2 * dc_bus_load;
      for (int l = 0; l < nl; ++l) {
        double up = 0.0, dn = 0.0;
        for (int j = 0; j < b; ++j) {
          double coef = ptdf_w[l] - g.ptdf(l, j);
          up += coef > 0.0 ? coef * hi[j] : coef * lo[j];
          dn += coef > 0.0 ? coef * lo[j] : coef * hi[j];
        }
        cap[l] = std::max({cap[l], up, -dn});
      }
    }
    for (int l = 0; l < nl; ++l)
      g.lines[l].capacity =
          1.05 * cap[l] + 0.05 * base.mean() * detail::uniform(rng, 0.8, 1.2);
  }
  g.validate();
  dc.validate(b);

  // --- day-ahead profile around the peak ------------------------------------
  {
    int tau = std::min(opt.horizon, 24);
    int t0 = std::clamp(peak_hour - tau / 2, 0, 24 - tau);
    out.day_profile.loads = loads24.middleCols(t0, tau);
    out.day_profile.renewables = renew24.middleCols(t0, tau);
    out.day_profile.compute_demand = demand24.middleCols(t0, tau);
  }

  // --- single-hour records with features and day-ahead schedules ------------
  out.schema = FeatureSchema{b, b, b, nl};
  for (int s = 0; s < opt.n_scenarios; ++s) {
    int hour = detail::uniform_int(rng, 24);
    double load_scale = detail::uniform(rng, 0.85, 1.15);
    double renew_scale = detail::uniform(rng, 0.7, 1.1);
    double demand_scale = detail::uniform(rng, 0.8, 1.2);
    ScenarioRecord rec;
    rec.loads = load_scale * loads24.col(hour);
    rec.renewables = (renew_scale * renew24.col(hour))
                         .cwiseMin(0.95 * rec.loads.col(0));
    rec.compute_demand = demand_scale * demand24.col(hour);

    auto nominal = nominal_allocation(dc, rec.compute_demand);
    Vec dc_bus_load = dc.conversion * nominal.loading;
    auto uc = bilevel::solve_uc(g, rec.loads, rec.renewables, dc_bus_load);
    if (uc.status != qp::QpStatus::kOptimal)
      throw ValidationError(
          std::string("generate_system: scenario day-ahead did not solve: ") +
          qp::to_string(uc.status));
    rec.day_ahead_dispatch = uc.dispatch.col(0);
    Vec u = uc.commitment.col(0);
    for (int i = 0; i < b; ++i) u[i] = u[i] > 0.5 ? 1.0 : 0.0;
    rec.commitment = u;

    Vec price = detail::zonal_prices(g, rec.loads.col(0), rec.renewables.col(0),
                                     u, dc_bus_load);
    Vec inj = *rec.day_ahead_dispatch + rec.renewables.col(0) -
              rec.loads.col(0) - dc_bus_load;
    RawFeatures raw{rec.loads.col(0), price, rec.renewables.col(0),
                    g.ptdf * inj};
    rec.features = features_assemble(raw, out.schema);
    rec.validate();
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace flexgrid::harness
