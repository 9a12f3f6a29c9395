#include "flexgrid/policy/rule.hpp"
#include "flexgrid/policy/serialize.hpp"
#include "flexgrid/policy/train.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

namespace flexgrid::policy {
namespace {

// --- shared toy systems ----------------------------------------------------

// Two buses, cheap generator at bus 0, expensive at bus 1, one line whose
// capacity limits how much the cheap unit can export.
GridModel congested_grid(double line_cap = 1.0) {
  GridModel g;
  g.n_buses = 2;
  g.lines = {{0, 1, line_cap}};
  g.ptdf = Mat(1, 2);
  g.ptdf << 0.5, -0.5;
  g.gen_cost_lin = Vec(2);
  g.gen_cost_lin << 5.0, 50.0;
  g.gen_cost_quad = Mat::Identity(2, 2) * 0.1;
  g.gen_min = Vec::Zero(2);
  g.gen_max = Vec::Constant(2, 10.0);
  g.ramp_up = g.ramp_dn = g.startup_ramp = g.shutdown_ramp =
      Vec::Constant(2, 10.0);
  g.startup_cost = Vec::Zero(2);
  g.shed_cost = Vec::Constant(2, 500.0);
  g.redispatch_limit = Vec::Constant(2, 10.0);
  return g;
}

// One user near the bus-1 data center; shifting tasks toward the bus-0
// center adds latency but relieves the line.
NetDCModel congested_netdc(double alpha) {
  NetDCModel dc;
  dc.n_dc = 2;
  dc.n_users = 1;
  dc.distance = Mat(2, 1);
  dc.distance << 2.0, 1.0;
  dc.conversion = Mat::Identity(2, 2);
  dc.dc_bus = {0, 1};
  dc.latency_loss_cap = alpha;
  dc.alloc_reg = 1e-3;
  dc.shift_reg = 1e-3;
  return dc;
}

// Record with the day-ahead schedule taken from the commitment solver run
// against the nominal (unshifted) data-center loading.
ScenarioRecord make_record(const GridModel& g, const NetDCModel& dc,
                           const Vec& loads, const Vec& demand,
                           const Vec& features) {
  ScenarioRecord r;
  r.loads = loads;
  r.renewables = Mat::Zero(g.n_buses, 1);
  r.compute_demand = demand;
  r.features = features;
  auto nominal = nominal_allocation(dc, r.compute_demand);
  Mat dc_load = dc.conversion * nominal.loading;
  auto uc = bilevel::solve_uc(g, r.loads, r.renewables, dc_load);
  EXPECT_EQ(uc.status, qp::QpStatus::kOptimal);
  r.day_ahead_dispatch = uc.dispatch.col(0);
  Vec u = uc.commitment.col(0);
  for (int i = 0; i < u.size(); ++i) u[i] = u[i] > 0.5 ? 1.0 : 0.0;
  r.commitment = u;
  return r;
}

// Minimal single-bus record for regression-only tests (no grid physics).
ScenarioRecord reg_record(const Vec& features) {
  ScenarioRecord r;
  r.loads = Mat::Constant(1, 1, 1.0);
  r.renewables = Mat::Zero(1, 1);
  r.compute_demand = Mat::Constant(1, 1, 1.0);
  r.features = features;
  r.day_ahead_dispatch = Vec::Constant(1, 1.0);
  r.commitment = Vec::Constant(1, 1.0);
  return r;
}

double mse(const PolicySpec& spec, const TrainingSet& set) {
  double total = 0.0;
  for (int i = 0; i < set.size(); ++i) {
    Vec err = spec.shift(set.records[i].features) - set.ideal_shifts[i];
    total += err.squaredNorm();
  }
  return total / set.size();
}

// --- train_base ------------------------------------------------------------

TEST(TrainBase, EpsilonZeroGivesZeroPolicy) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TrainingSet set;
  for (int i = 0; i < 5; ++i) {
    Vec x(3);
    for (int f = 0; f < 3; ++f) x[f] = u(rng);
    set.records.push_back(reg_record(x));
    set.ideal_shifts.push_back(Vec::Constant(2, u(rng)));
  }
  auto spec = train_base(set, 0.0);
  spec.validate();
  EXPECT_LE(spec.intercept.cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE(spec.weights.cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE(spec.shift(set.records[0].features).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(TrainBase, InterceptAbsorbsConstantTargets) {
  Vec v(2);
  v << 0.7, -0.2;
  TrainingSet set;
  for (int i = 0; i < 4; ++i) {
    set.records.push_back(reg_record(Vec::Constant(1, 0.5 * i)));
    set.ideal_shifts.push_back(v);
  }
  auto spec = train_base(set, 2.0);  // eps > ||v||_1 = 0.9
  EXPECT_LE((spec.intercept - v).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE(spec.weights.cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE(mse(spec, set), 1e-10);
}

TEST(TrainBase, MatchesLeastSquaresClosedForm) {
  // One feature, two records: with a slack budget the fit interpolates, so
  // the coefficients follow from the 2x2 normal equations directly.
  TrainingSet set;
  set.records.push_back(reg_record(Vec::Constant(1, 3.0)));
  set.records.push_back(reg_record(Vec::Constant(1, 1.0)));
  set.ideal_shifts.push_back(Vec::Constant(1, 2.0));
  set.ideal_shifts.push_back(Vec::Constant(1, -1.0));
  auto spec = train_base(set, 100.0);
  // standardized features are +1 and -1; a + b*z hits both targets with
  // a = (y1+y2)/2, b = (y1-y2)/2
  EXPECT_NEAR(spec.intercept[0], 0.5, 1e-6);
  EXPECT_NEAR(spec.weights(0, 0), 1.5, 1e-6);
  EXPECT_LE(mse(spec, set), 1e-10);
}

TEST(TrainBase, BudgetCertificateAndDeterminism) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  TrainingSet set;
  for (int i = 0; i < 8; ++i) {
    Vec x(2);
    x << u(rng), u(rng);
    set.records.push_back(reg_record(x));
    Vec y(2);
    y << 0.5 * x[0], -x[1];
    set.ideal_shifts.push_back(y);
  }
  auto a = train_base(set, 1.0);
  auto b = train_base(set, 1.0);
  a.validate();
  EXPECT_LE(a.l1_norm(), 1.0 + 1e-9);
  EXPECT_NEAR(mse(a, set), mse(b, set), 1e-8);
  EXPECT_LE((a.intercept - b.intercept).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((a.weights - b.weights).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(TrainBase, TighterBudgetNeverFitsBetter) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  TrainingSet set;
  for (int i = 0; i < 10; ++i) {
    Vec x(3);
    x << u(rng), u(rng), u(rng);
    set.records.push_back(reg_record(x));
    set.ideal_shifts.push_back(Vec::Constant(1, x[0] - 2.0 * x[2] + 0.3));
  }
  double prev = -1.0;
  for (double eps : {4.0, 2.0, 1.0, 0.25, 0.0}) {
    auto spec = train_base(set, eps);
    EXPECT_LE(spec.l1_norm(), eps + 1e-9);
    double err = mse(spec, set);
    if (prev >= 0.0) EXPECT_GE(err + 1e-8, prev);
    prev = err;
  }
}

// --- train_concur ----------------------------------------------------------

TEST(TrainConcur, EpsilonZeroMatchesNoncoordination) {
  auto g = congested_grid();
  auto dc = congested_netdc(1.0);
  Vec r_bar = Vec::Constant(2, 10.0);
  TrainingSet set;
  Vec d1(2), d2(2);
  d1 << 0.0, 3.0;
  d2 << 0.5, 2.0;
  set.records.push_back(
      make_record(g, dc, d1, Vec::Constant(1, 0.8), Vec::Constant(1, 1.0)));
  set.records.push_back(
      make_record(g, dc, d2, Vec::Constant(1, 0.6), Vec::Constant(1, -1.0)));

  auto res = train_concur(set, g, dc, 0.0, r_bar);
  ASSERT_EQ(res.status, qp::QpStatus::kOptimal);
  res.policy.validate();
  EXPECT_LE(res.policy.l1_norm(), 1e-7);
  for (int i = 0; i < set.size(); ++i) {
    double base = noncoordinated_cost(set.records[i], g, dc, r_bar);
    EXPECT_NEAR(res.cost_per_record[i], base, 1e-6 * (1.0 + std::abs(base)));
  }
}

TEST(TrainConcur, SingleRecordLargeEpsilonHitsIdeal) {
  auto g = congested_grid();
  auto dc = congested_netdc(1.0);
  Vec r_bar = Vec::Constant(2, 10.0);
  Vec d(2);
  d << 0.0, 3.0;
  TrainingSet set;
  set.records.push_back(
      make_record(g, dc, d, Vec::Constant(1, 0.8), Vec::Constant(1, 2.0)));
  const auto& rec = set.records[0];

  auto ideal = bilevel::solve_single_period_ideal(
      g, dc, rec.loads.col(0), rec.renewables.col(0), rec.compute_demand,
      *rec.day_ahead_dispatch, *rec.commitment, r_bar);
  ASSERT_EQ(ideal.status, qp::QpStatus::kOptimal);

  auto res = train_concur(set, g, dc, 100.0, r_bar);
  ASSERT_EQ(res.status, qp::QpStatus::kOptimal);
  EXPECT_NEAR(res.avg_cost(), ideal.cost, 1e-5 * (1.0 + std::abs(ideal.cost)));
  double base = noncoordinated_cost(rec, g, dc, r_bar);
  EXPECT_LT(res.avg_cost(), base - 1e-3);  // the shift actually helps here
}

TEST(TrainConcur, ConflictingRecordsLandBetweenBoundsAndMatchOracle) {
  // No features: the policy is a single intercept shared by both scenarios.
  // Both want to move tasks toward the cheap bus, but the second scenario
  // only has 0.2 units of tasks, so its re-allocation feasibility caps the
  // shared shift far below the first scenario's ideal of 0.8.
  auto g = congested_grid();
  auto dc = congested_netdc(1.5);
  Vec r_bar = Vec::Constant(2, 10.0);
  Vec d(2);
  d << 0.0, 3.0;  // congested toward bus 1: shifting helps
  TrainingSet set;
  set.records.push_back(make_record(g, dc, d, Vec::Constant(1, 0.8), Vec()));
  set.records.push_back(make_record(g, dc, d, Vec::Constant(1, 0.2), Vec()));

  double ideal_avg = 0.0, base_avg = 0.0;
  for (const auto& rec : set.records) {
    auto ideal = bilevel::solve_single_period_ideal(
        g, dc, rec.loads.col(0), rec.renewables.col(0), rec.compute_demand,
        *rec.day_ahead_dispatch, *rec.commitment, r_bar);
    ASSERT_EQ(ideal.status, qp::QpStatus::kOptimal);
    ideal_avg += ideal.cost / set.size();
    base_avg += noncoordinated_cost(rec, g, dc, r_bar) / set.size();
  }

  auto res = train_concur(set, g, dc, 100.0, r_bar);
  ASSERT_EQ(res.status, qp::QpStatus::kOptimal);
  EXPECT_GT(res.avg_cost(), ideal_avg + 1e-4);
  EXPECT_LT(res.avg_cost(), base_avg - 1e-4);

  auto built = detail::build_concur(set, g, dc, 100.0, r_bar, true);
  auto oracle = bilevel::brute_force_oracle(built.prob);
  ASSERT_EQ(oracle.status, qp::QpStatus::kOptimal);
  EXPECT_NEAR(res.report.incumbent, oracle.objective,
              1e-6 * (1.0 + std::abs(oracle.objective)));
}

TEST(TrainConcur, OrderingHoldsOnRandomInstances) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto g = congested_grid();
  Vec r_bar = Vec::Constant(2, 10.0);
  for (int trial = 0; trial < 4; ++trial) {
    auto dc = congested_netdc(0.25 + u(rng));
    TrainingSet set;
    for (int i = 0; i < 3; ++i) {
      Vec d(2);
      d << 2.0 * u(rng), 3.0 * u(rng);
      Vec x(2);
      x << u(rng), d.sum();
      set.records.push_back(
          make_record(g, dc, d, Vec::Constant(1, 0.4 + u(rng)), x));
    }
    double eps = trial % 2 == 0 ? 0.5 : 5.0;
    auto res = train_concur(set, g, dc, eps, r_bar);
    ASSERT_EQ(res.status, qp::QpStatus::kOptimal) << "trial " << trial;
    res.policy.validate();

    double ideal_avg = 0.0, base_avg = 0.0;
    for (const auto& rec : set.records) {
      auto ideal = bilevel::solve_single_period_ideal(
          g, dc, rec.loads.col(0), rec.renewables.col(0), rec.compute_demand,
          *rec.day_ahead_dispatch, *rec.commitment, r_bar);
      ASSERT_EQ(ideal.status, qp::QpStatus::kOptimal);
      ideal_avg += ideal.cost / set.size();
      base_avg += noncoordinated_cost(rec, g, dc, r_bar) / set.size();
    }
    double tol = 1e-6 * (1.0 + std::abs(base_avg));
    EXPECT_LE(ideal_avg, res.avg_cost() + tol) << "trial " << trial;
    EXPECT_LE(res.avg_cost(), base_avg + tol) << "trial " << trial;
  }
}

// --- coordinate_rt ---------------------------------------------------------

PolicySpec zero_policy(int k, int nf) {
  PolicySpec spec;
  spec.intercept = Vec::Zero(k);
  spec.weights = Mat::Zero(k, nf);
  spec.l1_budget = 0.0;
  spec.feature_mean = Vec::Zero(nf);
  spec.feature_std = Vec::Ones(nf);
  return spec;
}

TEST(CoordinateRt, ZeroPolicyCostsExactlyNoncoordinated) {
  auto g = congested_grid();
  auto dc = congested_netdc(1.0);
  Vec r_bar = Vec::Constant(2, 10.0);
  Vec d(2);
  d << 0.0, 3.0;
  auto rec = make_record(g, dc, d, Vec::Constant(1, 0.8), Vec::Constant(1, 1.0));

  auto out = coordinate_rt(zero_policy(1, 1), rec, g, dc, r_bar);
  EXPECT_EQ(out.applied_shift.cwiseAbs().maxCoeff(), 0.0);
  // bit-for-bit: the phi = 0 action goes through the same dispatch path
  EXPECT_EQ(out.realized_cost, noncoordinated_cost(rec, g, dc, r_bar));
}

TEST(CoordinateRt, CapViolationFallsBack) {
  auto g = congested_grid();
  auto dc = congested_netdc(0.05);  // tight latency cap
  Vec r_bar = Vec::Constant(2, 10.0);
  Vec d(2);
  d << 0.0, 3.0;
  auto rec = make_record(g, dc, d, Vec::Constant(1, 0.8), Vec::Constant(1, 1.0));

  auto policy = zero_policy(1, 1);
  policy.intercept[0] = 0.8;  // move everything to the far center
  policy.l1_budget = 1.0;
  auto out = coordinate_rt(policy, rec, g, dc, r_bar);
  EXPECT_FALSE(out.netdc_ok);
  EXPECT_EQ(out.branch, RtBranch::kFallback);
  EXPECT_EQ(out.applied_shift.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(out.realized_cost, noncoordinated_cost(rec, g, dc, r_bar));
}

TEST(CoordinateRt, OpfScreenBlocksOverloadingShift) {
  // User sits next to the bus-0 center, the line runs at capacity, and the
  // grid has no re-dispatch freedom: pushing tasks to bus 1 overloads the
  // line with no zero-shed recourse, so the rule must fall back.
  auto g = congested_grid();
  NetDCModel dc = congested_netdc(2.0);
  dc.distance << 1.0, 2.0;  // nearest center now at bus 0
  Vec r_bar = Vec::Zero(2);
  Vec d(2);
  d << 0.0, 3.0;
  auto rec = make_record(g, dc, d, Vec::Constant(1, 0.8), Vec::Constant(1, 1.0));

  auto policy = zero_policy(1, 1);
  policy.intercept[0] = -0.5;  // push half the tasks toward bus 1
  policy.l1_budget = 1.0;
  auto out = coordinate_rt(policy, rec, g, dc, r_bar);
  EXPECT_TRUE(out.netdc_ok);
  EXPECT_FALSE(out.opf_ok);
  EXPECT_EQ(out.branch, RtBranch::kFallback);
  EXPECT_EQ(out.realized_cost, noncoordinated_cost(rec, g, dc, r_bar));
}

TEST(CoordinateRt, HelpfulShiftBeatsFallbackAndMatchesDispatchOracle) {
  auto g = congested_grid();
  auto dc = congested_netdc(1.0);
  Vec r_bar = Vec::Constant(2, 10.0);
  Vec d(2);
  d << 0.0, 3.0;
  auto rec = make_record(g, dc, d, Vec::Constant(1, 0.8), Vec::Constant(1, 1.0));

  auto ideal = bilevel::solve_single_period_ideal(
      g, dc, rec.loads.col(0), rec.renewables.col(0), rec.compute_demand,
      *rec.day_ahead_dispatch, *rec.commitment, r_bar);
  ASSERT_EQ(ideal.status, qp::QpStatus::kOptimal);

  auto policy = zero_policy(1, 1);
  policy.intercept[0] = ideal.shift[0];
  policy.l1_budget = std::abs(ideal.shift[0]) + 1.0;
  auto out = coordinate_rt(policy, rec, g, dc, r_bar);
  ASSERT_EQ(out.branch, RtBranch::kPolicy);
  EXPECT_TRUE(out.netdc_ok);
  EXPECT_TRUE(out.opf_ok);
  EXPECT_NEAR(out.applied_shift[0], ideal.shift[0], 1e-12);
  EXPECT_LT(out.realized_cost, noncoordinated_cost(rec, g, dc, r_bar) - 1e-3);

  // dispatch-QP oracle at the shifted loading
  auto topo = build_incidence(dc.n_dc, 1);
  auto nominal = nominal_allocation(dc, rec.compute_demand);
  Vec theta = apply_shift(topo, out.applied_shift, nominal.loading);
  auto disp = detail::solve_dispatch(g, rec.loads.col(0),
                                     rec.renewables.col(0),
                                     *rec.day_ahead_dispatch, *rec.commitment,
                                     r_bar, dc.conversion * theta);
  ASSERT_EQ(disp.status, qp::QpStatus::kOptimal);
  EXPECT_EQ(out.realized_cost, disp.cost);
  EXPECT_NEAR(out.realized_cost, ideal.cost, 1e-5 * (1.0 + ideal.cost));
}

// --- sweep and split -------------------------------------------------------

TEST(SweepEpsilon, RowsOrderedCertifiedAndBestBeatsZero) {
  auto g = congested_grid();
  auto dc = congested_netdc(1.0);
  Vec r_bar = Vec::Constant(2, 10.0);
  TrainingSet train, test;
  test.split = "test";
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 3; ++i) {
    Vec d(2);
    d << 0.0, 2.0 + u(rng);
    Vec x = Vec::Constant(1, d[1]);
    train.records.push_back(make_record(g, dc, d, Vec::Constant(1, 0.8), x));
    Vec dt(2);
    dt << 0.0, 2.5 + 0.2 * i;
    test.records.push_back(
        make_record(g, dc, dt, Vec::Constant(1, 0.8), Vec::Constant(1, dt[1])));
  }

  auto rows = sweep_epsilon(train, test, g, dc, {0.0, 3.0, 0.5}, r_bar);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].epsilon, 3.0);
  EXPECT_EQ(rows[1].epsilon, 0.5);
  EXPECT_EQ(rows[2].epsilon, 0.0);
  for (const auto& row : rows) {
    EXPECT_LE(row.policy.l1_norm(), row.epsilon + 1e-9);
    row.policy.validate();
  }
  EXPECT_EQ(rows[2].active_features, 0);
  double best = std::min({rows[0].avg_test_cost, rows[1].avg_test_cost,
                          rows[2].avg_test_cost});
  // coordination with a sensible budget beats the non-coordinated row
  EXPECT_LT(best, rows[2].avg_test_cost - 1e-6);
}

TEST(SplitRecords, DeterministicDisjointPartition) {
  std::vector<ScenarioRecord> records;
  for (int i = 0; i < 10; ++i)
    records.push_back(reg_record(Vec::Constant(1, static_cast<double>(i))));
  auto [train1, test1] = split_records(records, 6, 123);
  auto [train2, test2] = split_records(records, 6, 123);
  ASSERT_EQ(train1.size(), 6);
  ASSERT_EQ(test1.size(), 4);
  std::vector<double> seen;
  for (int i = 0; i < train1.size(); ++i) {
    EXPECT_EQ(train1.records[i].features[0], train2.records[i].features[0]);
    seen.push_back(train1.records[i].features[0]);
  }
  for (int i = 0; i < test1.size(); ++i) {
    EXPECT_EQ(test1.records[i].features[0], test2.records[i].features[0]);
    seen.push_back(test1.records[i].features[0]);
  }
  std::sort(seen.begin(), seen.end());
  for (int i = 0; i < 10; ++i) EXPECT_EQ(seen[i], static_cast<double>(i));
}

// --- serialization ---------------------------------------------------------

TEST(PolicyFile, RoundTripsExactly) {
  PolicySpec spec;
  spec.intercept = Vec(2);
  spec.intercept << 0.123456789012345, -3.0 / 7.0;
  spec.weights = Mat(2, 3);
  spec.weights << 1e-9, 0.0, -2.5, 1.0 / 3.0, 4.0, -1e-16;
  spec.l1_budget = 10.0;
  spec.l1_includes_intercept = false;
  spec.feature_mean = Vec(3);
  spec.feature_mean << 1.0, -2.0, 0.25;
  spec.feature_std = Vec(3);
  spec.feature_std << 0.5, 2.0, 1.0;

  std::stringstream ss;
  save_policy(ss, spec);
  auto back = load_policy(ss);
  EXPECT_EQ(back.intercept, spec.intercept);
  EXPECT_EQ(back.weights, spec.weights);
  EXPECT_EQ(back.feature_mean, spec.feature_mean);
  EXPECT_EQ(back.feature_std, spec.feature_std);
  EXPECT_EQ(back.l1_budget, spec.l1_budget);
  EXPECT_EQ(back.l1_includes_intercept, spec.l1_includes_intercept);
}

TEST(PolicyFile, RejectsBadHeaderAndTamperedHash) {
  std::stringstream empty("not-a-policy-file\n");
  EXPECT_THROW(load_policy(empty), ValidationError);

  PolicySpec spec;
  spec.intercept = Vec::Zero(1);
  spec.weights = Mat::Zero(1, 2);
  spec.feature_mean = Vec::Zero(2);
  spec.feature_std = Vec::Ones(2);
  std::stringstream ss;
  save_policy(ss, spec);
  std::string text = ss.str();
  auto pos = text.find("features 2");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 10, "features 3");  // hash no longer matches
  std::stringstream bad(text);
  try {
    load_policy(bad);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
  }
}

TEST(PolicyFile, TruncationReportsLineNumber) {
  PolicySpec spec;
  spec.intercept = Vec::Zero(1);
  spec.weights = Mat::Zero(1, 1);
  spec.feature_mean = Vec::Zero(1);
  spec.feature_std = Vec::Ones(1);
  std::stringstream ss;
  save_policy(ss, spec);
  std::string text = ss.str();
  text.resize(text.size() / 2);
  std::stringstream bad(text);
  try {
    load_policy(bad);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
  }
}

}  // namespace
}  // namespace flexgrid::policy
