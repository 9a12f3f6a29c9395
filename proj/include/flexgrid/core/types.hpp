#pragma once

// Domain types for the grid / data-center coordination library.
//
// All models are plain value types, immutable by convention after
// construction and validation. Solvers never mutate them, so instances can
// be shared freely across concurrent workers.

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace flexgrid {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Transmission grid with one aggregate generator per bus.
///
/// Flows are modeled through a PTDF matrix F (lines x buses): the flow on
/// each line is the PTDF row applied to the vector of net bus injections.
struct GridModel {
  int n_buses = 0;
  // (from, to, capacity in MW) per line; from/to are 0-based bus ids.
  struct Line {
    int from = 0;
    int to = 0;
    double capacity = 0.0;
  };
  std::vector<Line> lines;
  Mat ptdf;  // lines x buses

  Vec gen_cost_lin;   // c, $/MWh
  Mat gen_cost_quad;  // C, PSD, $/MWh^2
  Vec gen_min;        // MW
  Vec gen_max;        // MW
  Vec ramp_up;        // MW/h, committed units
  Vec ramp_dn;        // MW/h, committed units
  Vec startup_ramp;   // MW/h at startup
  Vec shutdown_ramp;  // MW/h at shutdown
  Vec startup_cost;   // $ per startup
  Vec shed_cost;      // s, $/MWh
  Vec redispatch_limit;  // r-bar, MW

  int n_lines() const { return static_cast<int>(lines.size()); }
  Vec line_capacities() const {
    Vec f(n_lines());
    for (int i = 0; i < n_lines(); ++i) f[i] = lines[i].capacity;
    return f;
  }

  void validate() const;
};

/// Network of data centers, their users, and the coupling into the grid.
struct NetDCModel {
  int n_dc = 0;
  int n_users = 0;
  Mat distance;    // G, n_dc x n_users, >= 0
  Mat conversion;  // Gamma, n_buses x n_dc, MW per compute-unit
  std::vector<int> dc_bus;  // bus hosting each data center
  double latency_loss_cap = 0.0;  // alpha, fraction >= 0
  double alloc_reg = 1e-5;        // regularizer of the allocation problem
  double shift_reg = 1e-5;        // regularizer of the re-allocation problem

  void validate(int n_buses) const;
};

/// Space-time shift graph of the data-center network.
///
/// Column order is fixed: all spatial links of hour 1, ..., hour tau
/// (pairs (i,j), i<j, in lexicographic order), then temporal links grouped
/// by data center ((dc 0, hours 1->2, 2->3, ...), dc 1, ...).
struct SpaceTimeTopology {
  int n_dc = 0;
  int horizon = 0;  // tau
  int n_links = 0;  // k
  Mat incidence;    // A, (n_dc * horizon) x k, entries in {-1, 0, +1}

  void validate() const;
};

/// One operating snapshot: loads, renewables, computing demand, features,
/// and (for single-period records) the day-ahead dispatch it was planned to.
struct ScenarioRecord {
  Mat loads;           // n_buses x horizon, MW
  Mat renewables;      // n_buses x horizon, MW
  Mat compute_demand;  // n_users x horizon, compute-units
  Vec features;
  std::optional<Vec> day_ahead_dispatch;  // p-dot, n_buses (single-period)
  std::optional<Vec> commitment;          // u-dot, n_buses, entries in {0,1}

  int horizon() const { return static_cast<int>(loads.cols()); }
  void validate() const;
};

/// Affine coordination policy: shift(x) = intercept + weights * z, where z
/// is the standardized feature vector (x - feature_mean) / feature_std.
struct PolicySpec {
  Vec intercept;       // beta_0, length k
  Mat weights;         // beta_1, k x n_features
  double l1_budget = 0.0;  // epsilon
  bool l1_includes_intercept = true;
  Vec feature_mean;  // standardization constants, stored for test-time reuse
  Vec feature_std;

  int n_links() const { return static_cast<int>(intercept.size()); }
  int n_features() const { return static_cast<int>(weights.cols()); }

  Vec standardize(const Vec& x) const {
    return (x - feature_mean).cwiseQuotient(feature_std);
  }
  Vec shift(const Vec& x) const { return intercept + weights * standardize(x); }

  double l1_norm() const {
    double s = weights.cwiseAbs().sum();
    if (l1_includes_intercept) s += intercept.cwiseAbs().sum();
    return s;
  }
  void validate() const;
};

inline void GridModel::validate() const {
  auto fail = [](const std::string& m) { throw ValidationError("GridModel: " + m); };
  if (n_buses < 1) fail("n_buses must be >= 1");
  auto check_len = [&](const Vec& v, const char* name) {
    if (v.size() != n_buses) fail(std::string(name) + " must have one entry per bus");
  };
  check_len(gen_cost_lin, "gen_cost_lin");
  check_len(gen_min, "gen_min");
  check_len(gen_max, "gen_max");
  check_len(ramp_up, "ramp_up");
  check_len(ramp_dn, "ramp_dn");
  check_len(startup_ramp, "startup_ramp");
  check_len(shutdown_ramp, "shutdown_ramp");
  check_len(startup_cost, "startup_cost");
  check_len(shed_cost, "shed_cost");
  check_len(redispatch_limit, "redispatch_limit");
  if (gen_cost_quad.rows() != n_buses || gen_cost_quad.cols() != n_buses)
    fail("gen_cost_quad must be n_buses x n_buses");
  if (!gen_cost_quad.isApprox(gen_cost_quad.transpose(), 1e-12))
    fail("gen_cost_quad must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(gen_cost_quad);
  if (es.eigenvalues().minCoeff() < -1e-9) fail("gen_cost_quad must be PSD");
  if (ptdf.rows() != n_lines() || ptdf.cols() != n_buses)
    fail("ptdf must have one row per line and one column per bus");
  for (const auto& ln : lines) {
    if (ln.from < 0 || ln.from >= n_buses || ln.to < 0 || ln.to >= n_buses)
      fail("line endpoint out of range");
    if (ln.capacity < 0) fail("line capacity must be >= 0");
  }
  auto check_nonneg = [&](const Vec& v, const char* name) {
    if (v.minCoeff() < 0) fail(std::string(name) + " must be elementwise >= 0");
  };
  check_nonneg(gen_cost_lin, "gen_cost_lin");
  check_nonneg(shed_cost, "shed_cost");
  check_nonneg(gen_max, "gen_max");
  check_nonneg(redispatch_limit, "redispatch_limit");
  if ((gen_min.array() > gen_max.array()).any()) fail("gen_min must be <= gen_max");
  // Shedding must be strictly costlier than any generator running at capacity.
  double max_marginal =
      (gen_cost_lin + 2.0 * gen_cost_quad.cwiseAbs() * gen_max).maxCoeff();
  if (shed_cost.minCoeff() <= max_marginal)
    fail("shed_cost must exceed every generator's marginal cost at gen_max");
}

inline void NetDCModel::validate(int n_buses) const {
  auto fail = [](const std::string& m) { throw ValidationError("NetDCModel: " + m); };
  if (n_dc < 1 || n_users < 1) fail("n_dc and n_users must be >= 1");
  if (distance.rows() != n_dc || distance.cols() != n_users)
    fail("distance must be n_dc x n_users");
  if (distance.minCoeff() < 0) fail("distance must be elementwise >= 0");
  if (conversion.rows() != n_buses || conversion.cols() != n_dc)
    fail("conversion must be n_buses x n_dc");
  if (conversion.minCoeff() < 0) fail("conversion must be elementwise >= 0");
  for (int j = 0; j < n_dc; ++j) {
    int nnz = 0;
    for (int b = 0; b < n_buses; ++b)
      if (conversion(b, j) != 0.0) ++nnz;
    if (nnz != 1) fail("conversion must have exactly one nonzero per column");
  }
  if (static_cast<int>(dc_bus.size()) != n_dc) fail("dc_bus must map every data center");
  for (int j = 0; j < n_dc; ++j) {
    if (dc_bus[j] < 0 || dc_bus[j] >= n_buses) fail("dc_bus entry out of range");
    if (conversion(dc_bus[j], j) == 0.0)
      fail("dc_bus must point at the nonzero conversion entry");
  }
  if (latency_loss_cap < 0) fail("latency_loss_cap must be >= 0");
  if (alloc_reg <= 0 || shift_reg <= 0) fail("regularizers must be > 0");
}

inline void SpaceTimeTopology::validate() const {
  auto fail = [](const std::string& m) {
    throw ValidationError("SpaceTimeTopology: " + m);
  };
  const int expect =
      (n_dc * (n_dc - 1) / 2) * horizon + n_dc * (horizon - 1);
  if (n_links != expect) fail("link count does not match n(n-1)/2*tau + n(tau-1)");
  if (incidence.rows() != n_dc * horizon || incidence.cols() != n_links)
    fail("incidence must be (n_dc*horizon) x n_links");
  for (int j = 0; j < n_links; ++j) {
    int plus = 0, minus = 0;
    for (int i = 0; i < incidence.rows(); ++i) {
      double a = incidence(i, j);
      if (a == 1.0) ++plus;
      else if (a == -1.0) ++minus;
      else if (a != 0.0) fail("incidence entries must be in {-1, 0, +1}");
    }
    if (plus != 1 || minus != 1) fail("every column needs exactly one +1 and one -1");
  }
}

inline void ScenarioRecord::validate() const {
  auto fail = [](const std::string& m) {
    throw ValidationError("ScenarioRecord: " + m);
  };
  const auto tau = loads.cols();
  if (renewables.cols() != tau || compute_demand.cols() != tau)
    fail("loads, renewables and compute_demand must share the horizon");
  if (renewables.rows() != loads.rows()) fail("renewables must be per bus");
  if (loads.size() > 0 && loads.minCoeff() < 0) fail("loads must be >= 0");
  if (renewables.size() > 0 && renewables.minCoeff() < 0)
    fail("renewables must be >= 0");
  if (compute_demand.size() > 0 && compute_demand.minCoeff() < 0)
    fail("compute_demand must be >= 0");
  if (day_ahead_dispatch && day_ahead_dispatch->size() != loads.rows())
    fail("day_ahead_dispatch must be per bus");
  if (commitment && commitment->size() != loads.rows())
    fail("commitment must be per bus");
}

inline void PolicySpec::validate() const {
  auto fail = [](const std::string& m) { throw ValidationError("PolicySpec: " + m); };
  if (weights.rows() != intercept.size())
    fail("weights must have one row per link");
  if (feature_mean.size() != weights.cols() || feature_std.size() != weights.cols())
    fail("standardization constants must match the feature count");
  if (feature_std.size() > 0 && feature_std.minCoeff() <= 0)
    fail("feature_std must be > 0");
  if (l1_budget < 0) fail("l1_budget must be >= 0");
  if (l1_norm() > l1_budget + 1e-7) fail("L1 budget violated");
}

}  // namespace flexgrid
