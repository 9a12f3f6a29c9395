#include "flexgrid/core/features.hpp"
#include "flexgrid/core/latency.hpp"
#include "flexgrid/core/topology.hpp"
#include "flexgrid/core/types.hpp"

#include <gtest/gtest.h>

#include <random>

namespace flexgrid {
namespace {

TEST(Topology, LinkCounts) {
  EXPECT_EQ(build_incidence(5, 5).n_links, 70);
  EXPECT_EQ(build_incidence(5, 1).n_links, 10);
  EXPECT_EQ(build_incidence(1, 1).n_links, 0);
}

TEST(Topology, SingleSpatialLink) {
  auto topo = build_incidence(2, 1);
  ASSERT_EQ(topo.n_links, 1);
  EXPECT_DOUBLE_EQ(topo.incidence(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(topo.incidence(1, 0), -1.0);
}

TEST(Topology, InvariantsOverGrid) {
  for (int n = 1; n <= 10; ++n)
    for (int tau = 1; tau <= 24; ++tau) {
      auto topo = build_incidence(n, tau);
      EXPECT_EQ(topo.n_links, (n * (n - 1) / 2) * tau + n * (tau - 1));
      EXPECT_NO_THROW(topo.validate());
      for (int j = 0; j < topo.n_links; ++j)
        EXPECT_DOUBLE_EQ(topo.incidence.col(j).sum(), 0.0);
    }
}

TEST(Topology, RejectsDegenerateArgs) {
  EXPECT_THROW(build_incidence(0, 1), ValidationError);
  EXPECT_THROW(build_incidence(2, 0), ValidationError);
}

TEST(ApplyShift, ZeroShiftIsIdentity) {
  auto topo = build_incidence(3, 2);
  Vec loading = Vec::LinSpaced(6, 1.0, 6.0);
  Vec out = apply_shift(topo, Vec::Zero(topo.n_links), loading);
  EXPECT_TRUE(out.isApprox(loading));
}

TEST(ApplyShift, HandComputedSingleLink) {
  auto topo = build_incidence(2, 1);
  Vec loading(2);
  loading << 3.0, 1.0;
  Vec shift(1);
  shift << 1.0;
  Vec out = apply_shift(topo, shift, loading);
  EXPECT_DOUBLE_EQ(out[0], 4.0);
  EXPECT_DOUBLE_EQ(out[1], 0.0);
}

TEST(ApplyShift, ConservesTotalLoad) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2 + static_cast<int>(rng() % 4);
    int tau = 1 + static_cast<int>(rng() % 4);
    auto topo = build_incidence(n, tau);
    Vec loading(n * tau), shift(topo.n_links);
    for (int i = 0; i < loading.size(); ++i) loading[i] = std::abs(u(rng));
    for (int i = 0; i < shift.size(); ++i) shift[i] = u(rng);
    Vec out = apply_shift(topo, shift, loading);
    EXPECT_NEAR(out.sum(), loading.sum(), 1e-12 * (1.0 + loading.sum()));
  }
}

TEST(Latency, ZeroCases) {
  Mat g = Mat::Zero(2, 3), w = Mat::Random(2, 3).cwiseAbs();
  EXPECT_DOUBLE_EQ(latency(w, g), 0.0);
  EXPECT_DOUBLE_EQ(latency(Mat::Zero(2, 3), Mat::Random(2, 3)), 0.0);
}

TEST(Latency, HandExpansion) {
  Mat g(2, 2), w(2, 2);
  g << 1, 2, 3, 4;
  w << 1, 0, 0, 1;
  EXPECT_DOUBLE_EQ(latency(w, g), 5.0);
}

TEST(Latency, ShapeMismatch) {
  EXPECT_THROW(latency(Mat::Zero(2, 2), Mat::Zero(2, 3)), ValidationError);
}

TEST(Features, DefaultSchemaLength) {
  FeatureSchema schema{11, 11, 11, 12};
  EXPECT_EQ(schema.total(), 45);
  RawFeatures raw{Vec::Zero(11), Vec::Zero(11), Vec::Zero(11), Vec::Zero(12)};
  Vec x = features_assemble(raw, schema);
  EXPECT_EQ(x.size(), 45);
  EXPECT_DOUBLE_EQ(x.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Features, ToyThreeZone) {
  FeatureSchema schema{3, 3, 3, 2};
  RawFeatures raw{Vec::Ones(3), Vec::Ones(3), Vec::Ones(3), Vec::Ones(2)};
  EXPECT_EQ(features_assemble(raw, schema).size(), 11);
}

TEST(Features, RoundTrip) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  FeatureSchema schema{4, 2, 3, 5};
  RawFeatures raw;
  raw.demand = Vec::NullaryExpr(4, [&](int) { return u(rng); });
  raw.price = Vec::NullaryExpr(2, [&](int) { return u(rng); });
  raw.renewable = Vec::NullaryExpr(3, [&](int) { return u(rng); });
  raw.flow = Vec::NullaryExpr(5, [&](int) { return u(rng); });
  Vec x = features_assemble(raw, schema);
  RawFeatures back = features_disassemble(x, schema);
  EXPECT_TRUE(back.demand.isApprox(raw.demand));
  EXPECT_TRUE(back.price.isApprox(raw.price));
  EXPECT_TRUE(back.renewable.isApprox(raw.renewable));
  EXPECT_TRUE(back.flow.isApprox(raw.flow));
}

TEST(Features, MissingSegment) {
  FeatureSchema schema{3, 3, 3, 2};
  RawFeatures raw{Vec::Zero(3), Vec::Zero(3), Vec::Zero(3), Vec::Zero(1)};
  EXPECT_THROW(features_assemble(raw, schema), ValidationError);
}

GridModel tiny_grid() {
  GridModel g;
  g.n_buses = 2;
  g.lines = {{0, 1, 10.0}};
  g.ptdf = Mat::Zero(1, 2);
  g.ptdf << 0.5, -0.5;
  g.gen_cost_lin = Vec::Constant(2, 10.0);
  g.gen_cost_quad = Mat::Identity(2, 2) * 0.01;
  g.gen_min = Vec::Zero(2);
  g.gen_max = Vec::Constant(2, 100.0);
  g.ramp_up = g.ramp_dn = g.startup_ramp = g.shutdown_ramp = Vec::Constant(2, 100.0);
  g.startup_cost = Vec::Constant(2, 5.0);
  g.shed_cost = Vec::Constant(2, 1000.0);
  g.redispatch_limit = Vec::Constant(2, 100.0);
  return g;
}

TEST(Validation, GridAccepts) { EXPECT_NO_THROW(tiny_grid().validate()); }

TEST(Validation, GridRejectsCheapShedding) {
  auto g = tiny_grid();
  g.shed_cost = Vec::Constant(2, 1.0);
  EXPECT_THROW(g.validate(), ValidationError);
}

TEST(Validation, GridRejectsBadBounds) {
  auto g = tiny_grid();
  g.gen_min = Vec::Constant(2, 200.0);
  EXPECT_THROW(g.validate(), ValidationError);
}

TEST(Validation, NetDCOneNonzeroPerColumn) {
  NetDCModel dc;
  dc.n_dc = 2;
  dc.n_users = 2;
  dc.distance = Mat::Ones(2, 2);
  dc.conversion = Mat::Ones(2, 2);  // two nonzeros per column
  dc.dc_bus = {0, 1};
  EXPECT_THROW(dc.validate(2), ValidationError);
  dc.conversion << 1.0, 0.0, 0.0, 1.0;
  EXPECT_NO_THROW(dc.validate(2));
}

TEST(Validation, PolicyBudget) {
  PolicySpec p;
  p.intercept = Vec::Constant(2, 1.0);
  p.weights = Mat::Zero(2, 3);
  p.feature_mean = Vec::Zero(3);
  p.feature_std = Vec::Ones(3);
  p.l1_budget = 1.0;
  EXPECT_THROW(p.validate(), ValidationError);
  p.l1_budget = 2.0;
  EXPECT_NO_THROW(p.validate());
  p.l1_includes_intercept = false;
  p.l1_budget = 0.0;
  EXPECT_NO_THROW(p.validate());
}

}  // namespace
}  // namespace flexgrid
