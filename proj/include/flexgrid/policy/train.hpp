#pragma once

// Policy training: plain L1-regularized regression onto per-scenario ideal
// shifts (the base policy), and cost-aware training that solves one coupled
// complementarity program over all training scenarios with the regression
// coefficients shared across them.

#include "flexgrid/bilevel/bnb.hpp"
#include "flexgrid/bilevel/coordination.hpp"
#include "flexgrid/core/topology.hpp"
#include "flexgrid/core/types.hpp"
#include "flexgrid/lower/allocation.hpp"
#include "flexgrid/policy/rule.hpp"
#include "flexgrid/qp/problem.hpp"
#include "flexgrid/qp/solve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace flexgrid::policy {

struct TrainingSet {
  std::vector<ScenarioRecord> records;
  // Ideal per-record shifts (targets of the base regression); empty unless
  // the set is meant for base training.
  std::vector<Vec> ideal_shifts;
  std::string split = "train";

  int size() const { return static_cast<int>(records.size()); }

  void validate(bool need_ideal) const {
    if (records.empty()) throw ValidationError("TrainingSet: no records");
    const auto nf = records.front().features.size();
    for (const auto& r : records) {
      r.validate();
      if (r.features.size() != nf)
        throw ValidationError("TrainingSet: feature schema mismatch");
      if (r.horizon() != 1)
        throw ValidationError("TrainingSet: records must be single-period");
      if (!r.day_ahead_dispatch || !r.commitment)
        throw ValidationError(
            "TrainingSet: records must carry day-ahead dispatch and "
            "commitment");
    }
    if (need_ideal) {
      if (ideal_shifts.size() != records.size())
        throw ValidationError("TrainingSet: one ideal shift per record needed");
      for (const auto& s : ideal_shifts)
        if (s.size() != ideal_shifts.front().size())
          throw ValidationError("TrainingSet: ideal shift length mismatch");
    }
  }
};

/// Seeded uniform split without replacement: `q_train` records go to the
/// train set, the rest to test. Deterministic across platforms (does not use
/// std::shuffle, whose draw sequence is implementation-defined).
inline std::pair<TrainingSet, TrainingSet> split_records(
    std::vector<ScenarioRecord> records, int q_train, std::uint64_t seed) {
  const int q = static_cast<int>(records.size());
  if (q_train < 0 || q_train > q)
    throw ValidationError("split_records: q_train out of range");
  std::mt19937_64 rng(seed);
  for (int j = 0; j < q - 1; ++j) {
    int pick = j + static_cast<int>(rng() % static_cast<std::uint64_t>(q - j));
    std::swap(records[j], records[pick]);
  }
  TrainingSet train, test;
  train.split = "train";
  test.split = "test";
  train.records.assign(records.begin(), records.begin() + q_train);
  test.records.assign(records.begin() + q_train, records.end());
  return {std::move(train), std::move(test)};
}

namespace detail {

/// Per-feature mean and standard deviation over a record list; near-constant
/// features get unit scale so standardization stays well defined.
inline std::pair<Vec, Vec> feature_stats(
    const std::vector<ScenarioRecord>& records) {
  const int q = static_cast<int>(records.size());
  const int nf = static_cast<int>(records.front().features.size());
  Vec mean = Vec::Zero(nf);
  for (const auto& r : records) mean += r.features;
  mean /= q;
  Vec var = Vec::Zero(nf);
  for (const auto& r : records)
    var += (r.features - mean).cwiseAbs2();
  Vec stdev = (var / q).cwiseSqrt();
  for (int f = 0; f < nf; ++f)
    if (stdev[f] < 1e-12) stdev[f] = 1.0;
  return {mean, stdev};
}

// Coefficient packing shared by both trainers: intercept entries first, then
// the weight matrix row-major, so entry (l, f) sits at k + l * nf + f.
inline int beta_size(int k, int nf) { return k * (1 + nf); }

/// Emits the split-variable L1 budget: one magnitude variable per budgeted
/// coefficient with |beta_j| <= s_j and sum s <= eps. Returns the index of
/// the first magnitude variable.
inline int emit_l1_budget(qp::QpBuilder& qb, int beta0, int k, int nf,
                          double eps, bool include_intercept) {
  const int first = include_intercept ? 0 : k;
  const int count = beta_size(k, nf) - first;
  int s0 = qb.add_vars(count);
  int budget = qb.begin_le(eps);
  for (int j = 0; j < count; ++j) {
    int row = qb.begin_le(0.0);
    qb.le_add(row, beta0 + first + j, 1.0);
    qb.le_add(row, s0 + j, -1.0);
    row = qb.begin_le(0.0);
    qb.le_add(row, beta0 + first + j, -1.0);
    qb.le_add(row, s0 + j, -1.0);
    qb.le_add(budget, s0 + j, 1.0);
  }
  return s0;
}

inline PolicySpec extract_policy(const Vec& x, int beta0, int k, int nf,
                                 double eps, bool include_intercept,
                                 const Vec& mean, const Vec& stdev) {
  PolicySpec spec;
  spec.intercept = x.segment(beta0, k);
  spec.weights = Mat(k, nf);
  for (int l = 0; l < k; ++l)
    for (int f = 0; f < nf; ++f)
      spec.weights(l, f) = x[beta0 + k + l * nf + f];
  spec.l1_budget = eps;
  spec.l1_includes_intercept = include_intercept;
  spec.feature_mean = mean;
  spec.feature_std = stdev;
  return spec;
}

}  // namespace detail

/// Fits the affine policy to precomputed ideal shifts by minimizing the mean
/// squared prediction error under the L1 budget. Convex QP, global optimum.
inline PolicySpec train_base(const TrainingSet& set, double eps,
                             bool l1_includes_intercept = true) {
  set.validate(true);
  if (eps < 0.0) throw ValidationError("train_base: eps must be >= 0");
  const int q = set.size();
  const int k = static_cast<int>(set.ideal_shifts.front().size());
  const int nf = static_cast<int>(set.records.front().features.size());
  auto [mean, stdev] = detail::feature_stats(set.records);

  qp::QpBuilder qb;
  const int beta0 = qb.add_vars(detail::beta_size(k, nf));
  detail::emit_l1_budget(qb, beta0, k, nf, eps, l1_includes_intercept);
  const int e0 = qb.add_vars(q * k);
  for (int i = 0; i < q; ++i) {
    const Vec z = (set.records[i].features - mean).cwiseQuotient(stdev);
    for (int l = 0; l < k; ++l) {
      int ev = e0 + i * k + l;
      qb.obj_quad(ev, ev, 1.0 / q);
      // residual e = beta_0 + beta_1 z - target
      int row = qb.begin_eq(-set.ideal_shifts[i][l]);
      qb.eq_add(row, ev, 1.0);
      qb.eq_add(row, beta0 + l, -1.0);
      for (int f = 0; f < nf; ++f)
        if (z[f] != 0.0) qb.eq_add(row, beta0 + k + l * nf + f, -z[f]);
    }
  }
  auto sol = qp::solve_qp(qb.build());
  if (sol.status != qp::QpStatus::kOptimal)
    throw std::runtime_error("train_base: regression QP did not solve");
  return detail::extract_policy(sol.x, beta0, k, nf, eps, l1_includes_intercept,
                                mean, stdev);
}

struct TrainResult {
  qp::QpStatus status = qp::QpStatus::kInfeasible;
  PolicySpec policy;
  Vec cost_per_record;  // realized training cost per scenario, absolute
  bilevel::BnbReport report;

  double avg_cost() const {
    return cost_per_record.size() ? cost_per_record.mean()
                                  : std::numeric_limits<double>::infinity();
  }
};

namespace detail {

struct ConcurBuild {
  bilevel::MixedIntegerKktProblem prob;
  int beta0 = 0;
  struct ScenarioBlock {
    int r0 = 0, l0 = 0, phi0 = 0;
    bilevel::detail::LowerIndex lx;
    std::vector<Mat> w_dot;
    Mat demand;
    double constant = 0.0;  // cost of the scenario's fixed day-ahead dispatch
  };
  std::vector<ScenarioBlock> blocks;
  Vec feature_mean, feature_std;
};

/// One complementarity program coupling every training scenario's re-dispatch
/// and re-allocation first-order system through the shared regression
/// coefficients (objective: average variable re-dispatch cost).
inline ConcurBuild build_concur(const TrainingSet& set, const GridModel& grid,
                                const NetDCModel& netdc, double eps,
                                const Vec& r_bar, bool l1_includes_intercept) {
  const int q = set.size();
  const int b = grid.n_buses;
  const int n = netdc.n_dc, m = netdc.n_users;
  const auto topo = build_incidence(n, 1);
  const int k = topo.n_links;
  const int nf = static_cast<int>(set.records.front().features.size());
  ConcurBuild out;
  std::tie(out.feature_mean, out.feature_std) = feature_stats(set.records);
  const Vec& mean = out.feature_mean;
  const Vec& stdev = out.feature_std;

  qp::QpBuilder qb;
  out.beta0 = qb.add_vars(beta_size(k, nf));
  const int beta0 = out.beta0;
  emit_l1_budget(qb, beta0, k, nf, eps, l1_includes_intercept);

  out.blocks.resize(q);
  for (int i = 0; i < q; ++i) {
    const auto& rec = set.records[i];
    auto& blk = out.blocks[i];
    blk.demand = rec.compute_demand;
    auto nominal = nominal_allocation(netdc, blk.demand);
    blk.w_dot = nominal.allocation;

    blk.r0 = qb.add_vars(b);
    blk.l0 = qb.add_vars(b);
    blk.phi0 = qb.add_vars(k);
    blk.lx = bilevel::detail::LowerIndex{n, m, 1, qb.n_vars(), 0, 0, 0};
    blk.lx.base_dual = blk.lx.base_primal + blk.lx.per_p();
    blk.lx.mu_phi0 = blk.lx.base_dual + blk.lx.per_d();
    blk.lx.mu_tau0 = blk.lx.mu_phi0 + n;
    qb.add_vars(blk.lx.size());

    blk.constant = bilevel::detail::emit_redispatch(
        qb, grid, rec.loads.col(0), rec.renewables.col(0),
        *rec.day_ahead_dispatch, *rec.commitment, r_bar, blk.r0, blk.l0, netdc,
        blk.lx, 1.0 / q);
    bilevel::detail::emit_lower(qb, netdc, topo, nominal.loading,
                                nominal.latency_per_hour, blk.demand, blk.phi0,
                                blk.lx, out.prob.sos1);
    // the policy pins this scenario's shift: phi = beta_0 + beta_1 z_i
    const Vec z = (rec.features - mean).cwiseQuotient(stdev);
    for (int l = 0; l < k; ++l) {
      int row = qb.begin_eq(0.0);
      qb.eq_add(row, blk.phi0 + l, 1.0);
      qb.eq_add(row, beta0 + l, -1.0);
      for (int f = 0; f < nf; ++f)
        if (z[f] != 0.0) qb.eq_add(row, beta0 + k + l * nf + f, -z[f]);
    }
  }
  out.prob.qp = qb.build();
  out.prob.repair = [netdc, topo, blocks = out.blocks](
                        const Vec&, const qp::QpSolution& relaxed)
      -> std::optional<qp::QpSolution> {
    qp::QpSolution fixed = relaxed;
    for (const auto& blk : blocks)
      if (!bilevel::detail::patch_lower_block(fixed.x, netdc, topo, blk.w_dot,
                                              blk.demand, blk.phi0, blk.lx))
        return std::nullopt;
    // Re-dispatch and coefficient variables are untouched, so the relaxed
    // objective already prices the completed point.
    fixed.status = qp::QpStatus::kOptimal;
    return fixed;
  };
  return out;
}

}  // namespace detail

/// Cost-aware training: the coupled program from detail::build_concur solved
/// by branch and bound. On a node limit the incumbent is returned with its
/// gap (status kMaxIterations).
inline TrainResult train_concur(const TrainingSet& set, const GridModel& grid,
                                const NetDCModel& netdc, double eps,
                                const Vec& r_bar,
                                const bilevel::BnbOptions& opt = {},
                                bool l1_includes_intercept = true) {
  set.validate(false);
  if (eps < 0.0) throw ValidationError("train_concur: eps must be >= 0");
  grid.validate();
  netdc.validate(grid.n_buses);
  const int q = set.size();
  const int b = grid.n_buses;
  const int k = build_incidence(netdc.n_dc, 1).n_links;
  const int nf = static_cast<int>(set.records.front().features.size());
  auto built =
      detail::build_concur(set, grid, netdc, eps, r_bar, l1_includes_intercept);

  bilevel::BnbResult r;
  TrainResult out;
  try {
    r = bilevel::branch_and_bound(built.prob, opt);
    out.status = r.status;
  } catch (const bilevel::NodeLimitExceeded& e) {
    r = e.best();
    out.status = qp::QpStatus::kMaxIterations;
  }
  out.report = r.report;
  if (!std::isfinite(r.objective)) return out;

  out.policy =
      detail::extract_policy(r.x, built.beta0, k, nf, eps,
                             l1_includes_intercept, built.feature_mean,
                             built.feature_std);
  out.cost_per_record = Vec(q);
  for (int i = 0; i < q; ++i) {
    const auto& blk = built.blocks[i];
    const Vec p = *set.records[i].day_ahead_dispatch + r.x.segment(blk.r0, b);
    double cost = grid.gen_cost_lin.dot(p) + p.dot(grid.gen_cost_quad * p);
    cost += grid.shed_cost.dot(r.x.segment(blk.l0, b));
    out.cost_per_record[i] = cost;
  }
  return out;
}

struct SweepRow {
  double epsilon = 0.0;
  int active_features = 0;
  double avg_test_cost = 0.0;
  PolicySpec policy;
};

/// One cost-aware training run per budget, evaluated through the real-time
/// rule on the test split. Rows come back ordered by budget, largest first.
/// A feature counts as active when any of its weight entries exceeds 1e-7.
inline std::vector<SweepRow> sweep_epsilon(const TrainingSet& train,
                                           const TrainingSet& test,
                                           const GridModel& grid,
                                           const NetDCModel& netdc,
                                           std::vector<double> eps_list,
                                           const Vec& r_bar,
                                           const bilevel::BnbOptions& opt = {}) {
  if (eps_list.empty())
    throw ValidationError("sweep_epsilon: eps_list must be nonempty");
  test.validate(false);
  std::sort(eps_list.begin(), eps_list.end(), std::greater<>());
  std::vector<SweepRow> rows;
  for (double eps : eps_list) {
    auto trained = train_concur(train, grid, netdc, eps, r_bar, opt);
    SweepRow row;
    row.epsilon = eps;
    row.policy = trained.policy;
    for (int f = 0; f < trained.policy.n_features(); ++f)
      if (trained.policy.weights.col(f).cwiseAbs().maxCoeff() > 1e-7)
        ++row.active_features;
    double total = 0.0;
    for (const auto& rec : test.records)
      total +=
          coordinate_rt(trained.policy, rec, grid, netdc, r_bar).realized_cost;
    row.avg_test_cost = total / test.size();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace flexgrid::policy
