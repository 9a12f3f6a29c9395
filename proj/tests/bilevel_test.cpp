#include "flexgrid/bilevel/bnb.hpp"
#include "flexgrid/bilevel/coordination.hpp"

#include <gtest/gtest.h>

#include <random>

namespace flexgrid::bilevel {
namespace {

// --- shared toy systems ----------------------------------------------------

GridModel one_bus_grid(double c = 10.0, double cq = 0.1, double pmax = 10.0) {
  GridModel g;
  g.n_buses = 1;
  g.ptdf = Mat::Zero(0, 1);
  g.gen_cost_lin = Vec::Constant(1, c);
  g.gen_cost_quad = Mat::Constant(1, 1, cq);
  g.gen_min = Vec::Zero(1);
  g.gen_max = Vec::Constant(1, pmax);
  g.ramp_up = g.ramp_dn = g.startup_ramp = g.shutdown_ramp =
      Vec::Constant(1, pmax);
  g.startup_cost = Vec::Zero(1);
  g.shed_cost = Vec::Constant(1, 300.0);
  g.redispatch_limit = Vec::Constant(1, pmax);
  return g;
}

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

// NetDC with one user near the bus-1 data center; shifting tasks toward the
// bus-0 center adds latency but relieves the line.
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

// --- branch and bound ------------------------------------------------------

TEST(Bnb, PlainQpIsSingleNode) {
  qp::QpBuilder b;
  int x = b.add_var();
  b.obj_quad(x, x, 1.0);
  b.obj_lin(x, -2.0);
  MixedIntegerKktProblem p;
  p.qp = b.build();
  auto r = branch_and_bound(p);
  ASSERT_EQ(r.status, qp::QpStatus::kOptimal);
  EXPECT_EQ(r.report.nodes, 1u);
  EXPECT_NEAR(r.x[0], 1.0, 1e-8);
  EXPECT_NEAR(r.objective, qp::solve_qp(p.qp).objective, 1e-10);
}

TEST(Bnb, OneSos1PairFewNodes) {
  // min (x-1)^2 + (y-1)^2, x,y >= 0, at most one nonzero: optimum 1.0.
  qp::QpBuilder b;
  int x = b.add_vars(2);
  for (int i = 0; i < 2; ++i) {
    b.obj_quad(x + i, x + i, 1.0);
    b.obj_lin(x + i, -2.0);
    b.le_add(b.begin_le(0.0), x + i, -1.0);
  }
  MixedIntegerKktProblem p;
  p.qp = b.build();
  p.sos1 = {{x, x + 1}};
  auto r = branch_and_bound(p);
  ASSERT_EQ(r.status, qp::QpStatus::kOptimal);
  EXPECT_NEAR(r.objective + 2.0, 1.0, 1e-7);  // builder drops the +2 constant
  EXPECT_LE(r.report.nodes, 3u);
  EXPECT_LE(std::abs(r.x[x] * r.x[x + 1]), 1e-8);
}

TEST(Bnb, NodeLimitCarriesIncumbent) {
  qp::QpBuilder b;
  int x = b.add_vars(2);
  for (int i = 0; i < 2; ++i) {
    b.obj_quad(x + i, x + i, 1.0);
    b.obj_lin(x + i, -2.0);
    b.le_add(b.begin_le(0.0), x + i, -1.0);
  }
  MixedIntegerKktProblem p;
  p.qp = b.build();
  p.sos1 = {{x, x + 1}};
  BnbOptions opt;
  opt.node_limit = 1;
  try {
    branch_and_bound(p, opt);
    FAIL() << "expected NodeLimitExceeded";
  } catch (const NodeLimitExceeded& e) {
    EXPECT_EQ(e.best().report.nodes, 1u);
    EXPECT_TRUE(std::isinf(e.best().report.gap) || e.best().report.gap >= 0.0);
  }
}

TEST(Bnb, MatchesOracleOnRandomInstances) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    int nb = static_cast<int>(rng() % 3);       // binaries
    int ns = 1 + static_cast<int>(rng() % 3);   // SOS1 pairs
    int nv = nb + 2 * ns + 2;
    qp::QpBuilder b;
    int x = b.add_vars(nv);
    for (int i = 0; i < nv; ++i) {
      b.obj_quad(x + i, x + i, 0.5 + u(rng));
      b.obj_lin(x + i, 4.0 * (u(rng) - 0.5));
      b.bound(x + i, i < nb ? 0.0 : (i < nb + 2 * ns ? 0.0 : -2.0),
              i < nb ? 1.0 : 2.0);
    }
    int row = b.begin_eq(1.0 + u(rng));  // one coupling row
    for (int i = 0; i < nv; ++i) b.eq_add(row, x + i, 0.5 + u(rng));
    MixedIntegerKktProblem p;
    p.qp = b.build();
    for (int i = 0; i < nb; ++i) p.binaries.push_back(x + i);
    for (int s = 0; s < ns; ++s)
      p.sos1.push_back({x + nb + 2 * s, x + nb + 2 * s + 1});
    auto got = branch_and_bound(p);
    auto want = brute_force_oracle(p);
    ASSERT_EQ(got.status, want.status) << "trial " << trial;
    if (got.status == qp::QpStatus::kOptimal)
      EXPECT_NEAR(got.objective, want.objective, 1e-6) << "trial " << trial;
  }
}

TEST(Bnb, OracleSizeGuard) {
  MixedIntegerKktProblem p;
  qp::QpBuilder b;
  b.add_vars(20);
  p.qp = b.build();
  for (int i = 0; i < 19; ++i) p.binaries.push_back(i);
  EXPECT_THROW(brute_force_oracle(p), std::invalid_argument);
}

// --- unit commitment -------------------------------------------------------

TEST(Uc, SingleBusForcedBalance) {
  auto g = one_bus_grid();
  Mat d = Mat::Constant(1, 1, 3.0), w = Mat::Zero(1, 1), dc = Mat::Zero(1, 1);
  auto s = solve_uc(g, d, w, dc);
  ASSERT_EQ(s.status, qp::QpStatus::kOptimal);
  EXPECT_NEAR(s.dispatch(0, 0), 3.0, 1e-7);
  EXPECT_NEAR(s.cost, 10.0 * 3.0 + 0.1 * 9.0, 1e-6);
  EXPECT_NEAR(s.shed(0, 0), 0.0, 1e-8);
}

TEST(Uc, SheddingClosesBalance) {
  auto g = one_bus_grid();
  Mat d = Mat::Constant(1, 1, 12.0), w = Mat::Zero(1, 1), dc = Mat::Zero(1, 1);
  auto s = solve_uc(g, d, w, dc);
  ASSERT_EQ(s.status, qp::QpStatus::kOptimal);
  EXPECT_NEAR(s.dispatch(0, 0), 10.0, 1e-6);
  EXPECT_NEAR(s.shed(0, 0), 2.0, 1e-6);
  EXPECT_NEAR(s.cost, 100.0 + 10.0 + 600.0, 1e-5);
}

TEST(Uc, StartupCostCharged) {
  auto g = one_bus_grid(10.0, 0.0);
  g.startup_cost = Vec::Constant(1, 5.0);
  Mat d = Mat::Constant(1, 1, 1.0), w = Mat::Zero(1, 1), dc = Mat::Zero(1, 1);
  auto s = solve_uc(g, d, w, dc, Vec::Zero(1));
  ASSERT_EQ(s.status, qp::QpStatus::kOptimal);
  EXPECT_NEAR(s.cost, 10.0 + 5.0, 1e-6);
  EXPECT_NEAR(s.startup(0, 0), 5.0, 1e-6);
  // already-on unit pays nothing
  auto s2 = solve_uc(g, d, w, dc, Vec::Ones(1));
  EXPECT_NEAR(s2.cost, 10.0, 1e-6);
}

TEST(Uc, CongestedMatchesEnumeration) {
  auto g = congested_grid();
  g.gen_min = Vec::Constant(2, 0.5);
  g.startup_cost = Vec::Constant(2, 4.0);
  g.ramp_up = g.ramp_dn = Vec::Constant(2, 2.0);
  Mat d(2, 2), w = Mat::Zero(2, 2), dc = Mat::Zero(2, 2);
  d << 0.0, 0.0, 4.0, 5.5;
  auto s = solve_uc(g, d, w, dc);
  ASSERT_EQ(s.status, qp::QpStatus::kOptimal);
  auto built = build_uc(g, d, w, dc);
  auto oracle = brute_force_oracle(built.prob);
  ASSERT_EQ(oracle.status, qp::QpStatus::kOptimal);
  EXPECT_NEAR(s.cost, oracle.objective, 1e-6);
  // cheap unit pinned at its export limit by the line
  EXPECT_LE(s.dispatch(0, 0), 1.0 + 1e-6);
}

TEST(Uc, RelaxationLowerBounds) {
  auto g = congested_grid();
  g.gen_min = Vec::Constant(2, 1.5);
  g.startup_cost = Vec::Constant(2, 7.0);
  Mat d(2, 1), w = Mat::Zero(2, 1), dc = Mat::Zero(2, 1);
  d << 0.5, 3.0;
  auto built = build_uc(g, d, w, dc);
  auto relaxed = qp::solve_qp(built.prob.qp);
  auto s = solve_uc(g, d, w, dc);
  ASSERT_EQ(relaxed.status, qp::QpStatus::kOptimal);
  ASSERT_EQ(s.status, qp::QpStatus::kOptimal);
  EXPECT_LE(relaxed.objective, s.cost + 1e-6);
}

// --- day-ahead coordination ------------------------------------------------

ScenarioRecord congested_scenario(double load1, int tau = 1) {
  ScenarioRecord rec;
  rec.loads = Mat::Zero(2, tau);
  for (int t = 0; t < tau; ++t) rec.loads(1, t) = load1;
  rec.renewables = Mat::Zero(2, tau);
  rec.compute_demand = Mat::Constant(1, tau, 0.8);
  return rec;
}

TEST(DayAhead, AlphaZeroMatchesBaseline) {
  auto g = congested_grid();
  auto dc = congested_netdc(0.0);
  auto topo = build_incidence(2, 1);
  auto rec = congested_scenario(4.0);
  auto nom = nominal_allocation(dc, rec.compute_demand);
  Mat dc_load = dc.conversion * nom.loading;
  auto base = solve_uc(g, rec.loads, rec.renewables, dc_load);
  auto da = solve_day_ahead(g, dc, topo, rec);
  ASSERT_EQ(da.status, qp::QpStatus::kOptimal);
  EXPECT_NEAR(da.cost, base.cost, 1e-5);
}

TEST(DayAhead, SpatialShiftRelievesCongestion) {
  auto g = congested_grid();
  auto dc = congested_netdc(1.0);
  auto topo = build_incidence(2, 1);
  auto rec = congested_scenario(4.0);
  auto nom = nominal_allocation(dc, rec.compute_demand);
  Mat dc_load = dc.conversion * nom.loading;
  auto base = solve_uc(g, rec.loads, rec.renewables, dc_load);
  auto da = solve_day_ahead(g, dc, topo, rec);
  ASSERT_EQ(da.status, qp::QpStatus::kOptimal);
  EXPECT_LT(da.cost, base.cost - 1e-3);
  // tasks moved toward the bus-0 data center
  EXPECT_GT(da.loading[0], nom.loading[0] + 1e-4);
  // oracle agreement on the full reformulation
  auto built = detail::build_day_ahead(g, dc, topo, rec.loads, rec.renewables,
                                       nom, rec.compute_demand, Vec::Ones(2));
  auto oracle = brute_force_oracle(built.prob);
  ASSERT_EQ(oracle.status, qp::QpStatus::kOptimal);
  EXPECT_NEAR(da.cost, oracle.objective, 1e-5);
}

TEST(DayAhead, MonotoneInAlpha) {
  auto g = congested_grid();
  auto topo = build_incidence(2, 1);
  auto rec = congested_scenario(4.0);
  double prev = std::numeric_limits<double>::infinity();
  for (double alpha : {0.0, 0.25, 1.0}) {
    auto da = solve_day_ahead(g, congested_netdc(alpha), topo, rec);
    ASSERT_EQ(da.status, qp::QpStatus::kOptimal);
    EXPECT_LE(da.cost, prev + 1e-6) << "alpha " << alpha;
    prev = da.cost;
  }
}

TEST(DayAhead, PostponesTasksToCheapHour) {
  auto g = one_bus_grid(10.0, 0.5);
  NetDCModel dc;
  dc.n_dc = 1;
  dc.n_users = 1;
  dc.distance = Mat::Ones(1, 1);
  dc.conversion = Mat::Ones(1, 1);
  dc.dc_bus = {0};
  dc.latency_loss_cap = 0.5;
  dc.alloc_reg = 1e-3;
  dc.shift_reg = 1e-3;
  auto topo = build_incidence(1, 2);
  ScenarioRecord rec;
  rec.loads = Mat(1, 2);
  rec.loads << 4.0, 1.0;
  rec.renewables = Mat::Zero(1, 2);
  rec.compute_demand = Mat::Ones(1, 2);
  auto nom = nominal_allocation(dc, rec.compute_demand);
  Mat dc_load = dc.conversion * Mat(nom.loading.reshaped(1, 2));
  auto base = solve_uc(g, rec.loads, rec.renewables, dc_load);
  auto da = solve_day_ahead(g, dc, topo, rec);
  ASSERT_EQ(da.status, qp::QpStatus::kOptimal);
  EXPECT_LT(da.cost, base.cost - 1e-3);
  // peak-hour data-center load postponed up to the latency cap
  EXPECT_NEAR(da.loading[0], 0.5, 1e-3);
  EXPECT_NEAR(da.loading[1], 1.5, 1e-3);
  auto built = detail::build_day_ahead(g, dc, topo, rec.loads, rec.renewables,
                                       nom, rec.compute_demand, Vec::Ones(1));
  auto oracle = brute_force_oracle(built.prob);
  ASSERT_EQ(oracle.status, qp::QpStatus::kOptimal);
  EXPECT_NEAR(da.cost, oracle.objective, 1e-5);
}

TEST(DayAhead, NeverHurtsAndCertifiedOnRandomInstances) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    auto g = congested_grid(0.5 + u(rng));
    auto dc = congested_netdc(0.2 + u(rng));
    dc.distance(0, 0) = 1.0 + 3.0 * u(rng);
    dc.distance(1, 0) = 1.0 + 3.0 * u(rng);
    auto topo = build_incidence(2, 1);
    auto rec = congested_scenario(2.0 + 3.0 * u(rng));
    rec.compute_demand(0, 0) = 0.4 + u(rng);
    auto nom = nominal_allocation(dc, rec.compute_demand);
    Mat dc_load = dc.conversion * nom.loading;
    auto base = solve_uc(g, rec.loads, rec.renewables, dc_load);
    auto built = detail::build_day_ahead(g, dc, topo, rec.loads,
                                         rec.renewables, nom,
                                         rec.compute_demand, Vec::Ones(2));
    auto r = branch_and_bound(built.prob);
    ASSERT_EQ(r.status, qp::QpStatus::kOptimal) << "trial " << trial;
    EXPECT_LE(r.objective, base.cost + 1e-6);
    for (const auto& pair : built.prob.sos1)
      EXPECT_LE(std::abs(r.x[pair.first] * r.x[pair.second]), 1e-8);
    auto oracle = brute_force_oracle(built.prob);
    EXPECT_NEAR(r.objective, oracle.objective, 1e-6) << "trial " << trial;
  }
}

// --- single-period ideal coordination --------------------------------------

TEST(Ideal, NoRedispatchFreedomReturnsBaseline) {
  auto g = one_bus_grid();
  NetDCModel dc;
  dc.n_dc = 2;
  dc.n_users = 1;
  dc.distance = Mat(2, 1);
  dc.distance << 1.0, 2.0;
  dc.conversion = Mat::Ones(1, 2);
  dc.dc_bus = {0, 0};
  dc.latency_loss_cap = 1.0;
  dc.alloc_reg = 1e-3;
  dc.shift_reg = 1e-3;
  Vec d = Vec::Constant(1, 1.0), w = Vec::Zero(1);
  Vec demand = Vec::Ones(1);
  Vec p_dot = Vec::Constant(1, 2.0);  // serves load plus the data center
  auto s = solve_single_period_ideal(g, dc, d, w, demand, p_dot, Vec::Ones(1),
                                     Vec::Zero(1));
  ASSERT_EQ(s.status, qp::QpStatus::kOptimal);
  EXPECT_NEAR(s.cost, 10.0 * 2.0 + 0.1 * 4.0, 1e-6);
  EXPECT_NEAR(s.redispatch[0], 0.0, 1e-8);
  EXPECT_NEAR(s.shed[0], 0.0, 1e-8);
}

TEST(Ideal, DecoupledSystemsZeroShift) {
  auto g = one_bus_grid();
  NetDCModel dc;
  dc.n_dc = 2;
  dc.n_users = 1;
  dc.distance = Mat(2, 1);
  dc.distance << 1.0, 2.0;
  dc.conversion = Mat::Zero(1, 2);  // grid never sees the data centers
  dc.dc_bus = {0, 0};
  dc.latency_loss_cap = 1.0;
  dc.alloc_reg = 1e-3;
  dc.shift_reg = 1e-3;
  Vec d = Vec::Constant(1, 1.0), w = Vec::Zero(1);
  auto s = solve_single_period_ideal(g, dc, d, w, Vec::Ones(1),
                                     Vec::Constant(1, 1.0), Vec::Ones(1),
                                     Vec::Constant(1, 10.0));
  ASSERT_EQ(s.status, qp::QpStatus::kOptimal);
  EXPECT_NEAR(s.cost, 10.0 + 0.1, 1e-6);
  EXPECT_NEAR(s.shift.cwiseAbs().sum(), 0.0, 1e-7);
}

TEST(Ideal, ShiftRelievesCongestionMatchesOracle) {
  auto g = congested_grid();
  auto dc = congested_netdc(1.0);
  auto rec = congested_scenario(4.0);
  Vec d = rec.loads.col(0), w = rec.renewables.col(0);
  Vec demand = rec.compute_demand.col(0);
  auto nom = nominal_allocation(dc, Mat(demand));
  Mat dc_load = dc.conversion * nom.loading;
  auto base = solve_uc(g, rec.loads, rec.renewables, dc_load);
  ASSERT_EQ(base.status, qp::QpStatus::kOptimal);
  Vec p_dot = base.dispatch.col(0), u_dot = base.commitment.col(0);
  auto s = solve_single_period_ideal(g, dc, d, w, demand, p_dot, u_dot,
                                     g.redispatch_limit);
  ASSERT_EQ(s.status, qp::QpStatus::kOptimal);
  EXPECT_LT(s.cost, base.cost - 1e-3);
  auto topo = build_incidence(2, 1);
  auto built = detail::build_ideal(g, dc, topo, nom, Mat(demand), d, w, p_dot,
                                   u_dot, g.redispatch_limit);
  auto oracle = brute_force_oracle(built.prob);
  ASSERT_EQ(oracle.status, qp::QpStatus::kOptimal);
  EXPECT_NEAR(s.cost, oracle.objective + built.constant, 1e-5);
}

}  // namespace
}  // namespace flexgrid::bilevel
