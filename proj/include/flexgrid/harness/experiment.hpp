#pragma once

// The four experiment pipelines: day-ahead coordination value, four-case
// policy comparison, coordination feasibility versus training-set size, and
// the regularization-path sweep. Each emits CSV reports plus a JSON summary;
// report bytes are deterministic for a fixed config (timing goes to a
// separate log file excluded from that guarantee).

#include "flexgrid/bilevel/coordination.hpp"
#include "flexgrid/harness/generate.hpp"
#include "flexgrid/harness/io.hpp"
#include "flexgrid/policy/serialize.hpp"
#include "flexgrid/policy/train.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace flexgrid::harness {

struct ExperimentResult {
  std::filesystem::path output_dir;
  std::vector<std::string> files;  // report files, relative to output_dir
  int rows = 0;
  int solver_events = 0;  // node limits / non-optimal statuses, per row
  double wall_seconds = 0.0;
};

namespace detail {

/// Runs fn(0..n-1) on a bounded pool; results must be written to
/// pre-allocated slots so assembly order never depends on scheduling.
template <typename Fn>
inline void parallel_for(int n, int workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(workers, n); ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline const char* status_label(qp::QpStatus s) {
  switch (s) {
    case qp::QpStatus::kOptimal: return "ok";
    case qp::QpStatus::kInfeasible: return "infeasible";
    case qp::QpStatus::kUnbounded: return "unbounded";
    case qp::QpStatus::kMaxIterations: return "limit";
  }
  return "?";
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b) {
  std::uint64_t h = seed;
  for (std::uint64_t v : {a, b}) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

struct RunContext {
  const ExperimentConfig& cfg;
  std::filesystem::path dir;
  ExperimentResult result;
  nlohmann::ordered_json summary;

  explicit RunContext(const ExperimentConfig& c)
      : cfg(c),
        dir(c.output_dir.empty()
                ? default_output_root() / to_string(c.kind)
                : std::filesystem::path(c.output_dir)) {
    std::filesystem::create_directories(dir);
    result.output_dir = dir;
    summary["format"] = "flexgrid-summary v1";
    summary["kind"] = to_string(cfg.kind);
    summary["seed"] = cfg.seed;
  }

  std::ofstream open(const std::string& name) {
    result.files.push_back(name);
    return open_out(dir / name);
  }

  void note_status(qp::QpStatus s) {
    if (s != qp::QpStatus::kOptimal) ++result.solver_events;
  }

  void finish() {
    summary["rows"] = result.rows;
    summary["solver_events"] = result.solver_events;
    summary["files"] = result.files;
    auto os = open_out(dir / "summary.json");
    os << summary.dump(2) << "\n";
    result.files.push_back("summary.json");
    // timing is deliberately kept out of the deterministic reports
    auto tlog = open_out(dir / "timing.log");
    tlog << "wall_seconds " << result.wall_seconds << "\n";
  }
};

inline bilevel::BnbOptions bnb_options(const ExperimentConfig& cfg) {
  bilevel::BnbOptions opt;
  opt.gap_tol = cfg.gap_tol;
  opt.node_limit = cfg.node_limit;
  return opt;
}

inline SystemBundle make_system(const ExperimentConfig& cfg, double penetration,
                                double alpha) {
  GenOptions gen;
  gen.n_scenarios = cfg.n_scenarios;
  gen.horizon = cfg.horizon;
  gen.latency_loss_cap = alpha;
  if (!cfg.system_file.empty()) {
    auto is = open_in(cfg.system_file);
    auto [g, dc] = load_system(is, cfg.system_file);
    dc.latency_loss_cap = alpha;
    // scenarios still come from the seeded generator sized to this system
    SystemBundle bundle =
        generate_system(cfg.seed, g.n_buses, dc.n_dc, penetration, gen);
    bundle.grid = std::move(g);
    bundle.netdc = std::move(dc);
    return bundle;
  }
  return generate_system(cfg.seed, cfg.n_zones, cfg.n_dc, penetration, gen);
}

inline int effective_q_train(const ExperimentConfig& cfg) {
  int q = cfg.q_train > 0 ? cfg.q_train : cfg.n_scenarios / 2;
  return std::min(q, cfg.n_scenarios - 1);
}

inline double default_epsilon(const ExperimentConfig& cfg) {
  return cfg.epsilons.empty() ? 1e3 : cfg.epsilons.front();
}

// -------------------------------------------------------------------------
// day_ahead: cost versus alpha, loading profiles, electricity-charge table

inline void run_day_ahead(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto bundle = make_system(cfg, cfg.penetrations.front(), 0.0);
  const int tau = static_cast<int>(bundle.day_profile.loads.cols());
  auto topo = build_incidence(bundle.netdc.n_dc, tau);
  std::vector<double> alphas = cfg.alphas;
  std::sort(alphas.begin(), alphas.end());

  struct Case {
    double alpha = 0.0;
    bilevel::DayAheadSolution sol;
  };
  std::vector<Case> cases(alphas.size());
  parallel_for(static_cast<int>(alphas.size()), cfg.workers, [&](int i) {
    cases[i].alpha = alphas[i];
    NetDCModel dc = bundle.netdc;
    dc.latency_loss_cap = alphas[i];
    cases[i].sol = bilevel::solve_day_ahead(bundle.grid, dc, topo,
                                            bundle.day_profile,
                                            bnb_options(cfg));
  });

  auto nominal = nominal_allocation(bundle.netdc, bundle.day_profile.compute_demand);
  {
    auto os = ctx.open("day_ahead_cost.csv");
    ReportWriter w(os, "day_ahead",
                   {"alpha", "cost", "savings_vs_min_alpha", "bnb_nodes",
                    "bnb_gap", "status"});
    double ref = cases.front().sol.cost;
    for (const auto& c : cases) {
      ctx.note_status(c.sol.status);
      w.cell(c.alpha)
          .cell(c.sol.cost)
          .cell(ref - c.sol.cost)
          .cell(c.sol.report.nodes)
          .cell(c.sol.report.gap)
          .cell(status_label(c.sol.status));
      w.end_row();
      ++ctx.result.rows;
    }
  }
  {
    auto os = ctx.open("dc_loading.csv");
    ReportWriter w(os, "day_ahead",
                   {"alpha", "hour", "dc", "nominal_mw", "coordinated_mw"});
    for (const auto& c : cases) {
      if (c.sol.status != qp::QpStatus::kOptimal) continue;
      for (int t = 0; t < tau; ++t)
        for (int j = 0; j < bundle.netdc.n_dc; ++j) {
          w.cell(c.alpha)
              .cell(t)
              .cell(j)
              .cell(nominal.loading[t * bundle.netdc.n_dc + j])
              .cell(c.sol.loading[t * bundle.netdc.n_dc + j]);
          w.end_row();
        }
    }
  }
  {
    // electricity charge of the data-center network under zonal prices
    // derived from the dispatch duals at each case's own loading
    auto os = ctx.open("netdc_charge.csv");
    ReportWriter w(os, "day_ahead",
                   {"alpha", "charge_coordinated", "charge_nominal"});
    for (const auto& c : cases) {
      if (c.sol.status != qp::QpStatus::kOptimal) continue;
      double coord = 0.0, nominal_charge = 0.0;
      for (int t = 0; t < tau; ++t) {
        Vec u = c.sol.commitment.col(t);
        Vec theta_c = c.sol.loading.segment(t * bundle.netdc.n_dc,
                                            bundle.netdc.n_dc);
        Vec theta_n =
            nominal.loading.segment(t * bundle.netdc.n_dc, bundle.netdc.n_dc);
        Vec load_c = bundle.netdc.conversion * theta_c;
        Vec load_n = bundle.netdc.conversion * theta_n;
        Vec price_c = zonal_prices(bundle.grid, bundle.day_profile.loads.col(t),
                                   bundle.day_profile.renewables.col(t), u,
                                   load_c);
        Vec price_n = zonal_prices(bundle.grid, bundle.day_profile.loads.col(t),
                                   bundle.day_profile.renewables.col(t),
                                   Vec::Ones(bundle.grid.n_buses), load_n);
        coord += price_c.dot(load_c);
        nominal_charge += price_n.dot(load_n);
      }
      w.cell(c.alpha).cell(coord).cell(nominal_charge);
      w.end_row();
    }
  }
}

// -------------------------------------------------------------------------
// policy_compare: four-case cost table over penetration x alpha

inline void run_policy_compare(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  struct Row {
    double penetration = 0.0, alpha = 0.0;
    double none = 0.0, ideal = 0.0, base = 0.0, concur = 0.0;
    double fallback_base = 0.0, fallback_concur = 0.0;
    std::size_t nodes = 0;
    qp::QpStatus status = qp::QpStatus::kOptimal;
  };
  std::vector<std::pair<double, double>> grid_points;
  for (double p : cfg.penetrations)
    for (double a : cfg.alphas) grid_points.emplace_back(p, a);
  std::vector<Row> rows(grid_points.size());

  parallel_for(static_cast<int>(grid_points.size()), cfg.workers, [&](int gi) {
    auto [pen, alpha] = grid_points[gi];
    auto bundle = make_system(cfg, pen, alpha);
    const Vec r_bar = cfg.r_bar_frac * bundle.grid.redispatch_limit;
    auto [train, test] =
        policy::split_records(bundle.records, effective_q_train(cfg), cfg.seed);

    // per-record ideal benchmarks double as base-regression targets
    for (const auto& rec : train.records) {
      auto ideal = bilevel::solve_single_period_ideal(
          bundle.grid, bundle.netdc, rec.loads.col(0), rec.renewables.col(0),
          rec.compute_demand, *rec.day_ahead_dispatch, *rec.commitment, r_bar,
          bnb_options(cfg));
      train.ideal_shifts.push_back(
          ideal.status == qp::QpStatus::kOptimal
              ? ideal.shift
              : Vec(Vec::Zero(build_incidence(bundle.netdc.n_dc, 1).n_links)));
    }
    double eps = default_epsilon(cfg);
    auto base = policy::train_base(train, eps);
    auto concur = policy::train_concur(train, bundle.grid, bundle.netdc, eps,
                                       r_bar, bnb_options(cfg));
    Row& row = rows[gi];
    row.penetration = pen;
    row.alpha = alpha;
    row.nodes = concur.report.nodes;
    row.status = concur.status;
    const int nt = test.size();
    for (const auto& rec : test.records) {
      row.none +=
          policy::noncoordinated_cost(rec, bundle.grid, bundle.netdc, r_bar) /
          nt;
      auto ideal = bilevel::solve_single_period_ideal(
          bundle.grid, bundle.netdc, rec.loads.col(0), rec.renewables.col(0),
          rec.compute_demand, *rec.day_ahead_dispatch, *rec.commitment, r_bar,
          bnb_options(cfg));
      row.ideal += (ideal.status == qp::QpStatus::kOptimal
                        ? ideal.cost
                        : policy::noncoordinated_cost(rec, bundle.grid,
                                                      bundle.netdc, r_bar)) /
                   nt;
      auto out_b = policy::coordinate_rt(base, rec, bundle.grid, bundle.netdc,
                                         r_bar);
      auto out_c = policy::coordinate_rt(concur.policy, rec, bundle.grid,
                                         bundle.netdc, r_bar);
      row.base += out_b.realized_cost / nt;
      row.concur += out_c.realized_cost / nt;
      if (out_b.branch == policy::RtBranch::kFallback)
        row.fallback_base += 1.0 / nt;
      if (out_c.branch == policy::RtBranch::kFallback)
        row.fallback_concur += 1.0 / nt;
    }
  });

  auto os = ctx.open("policy_compare.csv");
  ReportWriter w(os, "policy_compare",
                 {"penetration", "alpha", "cost_none", "cost_ideal",
                  "cost_base", "cost_concur", "fallback_base",
                  "fallback_concur", "bnb_nodes", "status"});
  for (const auto& row : rows) {
    ctx.note_status(row.status);
    w.cell(row.penetration)
        .cell(row.alpha)
        .cell(row.none)
        .cell(row.ideal)
        .cell(row.base)
        .cell(row.concur)
        .cell(row.fallback_base)
        .cell(row.fallback_concur)
        .cell(row.nodes)
        .cell(status_label(row.status));
    w.end_row();
    ++ctx.result.rows;
  }
}

// -------------------------------------------------------------------------
// feasibility_vs_q: violation rates over resampled splits

struct FeasibilityCell {
  double base_power = 0.0, concur_power = 0.0;
  double base_netdc = 0.0, concur_netdc = 0.0;
  qp::QpStatus status = qp::QpStatus::kOptimal;
};

inline void run_feasibility_vs_q(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto bundle = make_system(cfg, cfg.penetrations.front(), cfg.alphas.front());
  const Vec r_bar = cfg.r_bar_frac * bundle.grid.redispatch_limit;
  const double eps = default_epsilon(cfg);
  const int k = build_incidence(bundle.netdc.n_dc, 1).n_links;

  // ideal shifts per record are split-independent: compute once
  std::vector<Vec> ideal_shift(bundle.records.size());
  parallel_for(static_cast<int>(bundle.records.size()), cfg.workers, [&](int i) {
    const auto& rec = bundle.records[i];
    auto ideal = bilevel::solve_single_period_ideal(
        bundle.grid, bundle.netdc, rec.loads.col(0), rec.renewables.col(0),
        rec.compute_demand, *rec.day_ahead_dispatch, *rec.commitment, r_bar,
        bnb_options(cfg));
    ideal_shift[i] = ideal.status == qp::QpStatus::kOptimal ? ideal.shift
                                                            : Vec(Vec::Zero(k));
  });
  std::vector<std::size_t> record_id(bundle.records.size());
  for (std::size_t i = 0; i < record_id.size(); ++i) record_id[i] = i;

  std::vector<std::pair<int, int>> jobs;  // (q index, split)
  for (std::size_t qi = 0; qi < cfg.qs.size(); ++qi)
    for (int s = 0; s < cfg.n_splits; ++s)
      jobs.emplace_back(static_cast<int>(qi), s);
  std::vector<FeasibilityCell> cells(jobs.size());

  parallel_for(static_cast<int>(jobs.size()), cfg.workers, [&](int ji) {
    auto [qi, split] = jobs[ji];
    const int q = cfg.qs[qi];
    // shuffle indices, not records, so ideal shifts can follow the split
    std::vector<ScenarioRecord> tagged = bundle.records;
    for (std::size_t i = 0; i < tagged.size(); ++i) {
      Vec f(tagged[i].features.size() + 1);
      f << tagged[i].features, static_cast<double>(i);
      tagged[i].features = f;  // carry the origin index through the split
    }
    auto [train, test] = policy::split_records(
        std::move(tagged), q, mix_seed(cfg.seed, q, split));
    auto strip = [&](policy::TrainingSet& set, bool want_ideal) {
      for (auto& rec : set.records) {
        int origin = static_cast<int>(rec.features[rec.features.size() - 1]);
        rec.features.conservativeResize(rec.features.size() - 1);
        if (want_ideal) set.ideal_shifts.push_back(ideal_shift[origin]);
      }
    };
    strip(train, true);
    strip(test, false);

    auto base = policy::train_base(train, eps);
    auto concur = policy::train_concur(train, bundle.grid, bundle.netdc, eps,
                                       r_bar, bnb_options(cfg));
    FeasibilityCell& cell = cells[ji];
    cell.status = concur.status;
    const int nt = test.size();
    for (const auto& rec : test.records) {
      auto out_b =
          policy::coordinate_rt(base, rec, bundle.grid, bundle.netdc, r_bar);
      auto out_c = policy::coordinate_rt(concur.policy, rec, bundle.grid,
                                         bundle.netdc, r_bar);
      if (!out_b.opf_ok) cell.base_power += 1.0 / nt;
      if (!out_c.opf_ok) cell.concur_power += 1.0 / nt;
      if (!out_b.netdc_ok) cell.base_netdc += 1.0 / nt;
      if (!out_c.netdc_ok) cell.concur_netdc += 1.0 / nt;
    }
  });

  {
    auto os = ctx.open("feasibility_splits.csv");
    ReportWriter w(os, "feasibility_vs_q",
                   {"q", "split", "base_power_violation",
                    "concur_power_violation", "base_netdc_violation",
                    "concur_netdc_violation", "status"});
    for (std::size_t ji = 0; ji < jobs.size(); ++ji) {
      ctx.note_status(cells[ji].status);
      w.cell(cfg.qs[jobs[ji].first])
          .cell(jobs[ji].second)
          .cell(cells[ji].base_power)
          .cell(cells[ji].concur_power)
          .cell(cells[ji].base_netdc)
          .cell(cells[ji].concur_netdc)
          .cell(status_label(cells[ji].status));
      w.end_row();
    }
  }
  {
    auto os = ctx.open("feasibility_vs_q.csv");
    ReportWriter w(os, "feasibility_vs_q",
                   {"q", "splits", "base_power_violation",
                    "concur_power_violation", "base_netdc_violation",
                    "concur_netdc_violation"});
    for (std::size_t qi = 0; qi < cfg.qs.size(); ++qi) {
      FeasibilityCell mean;
      for (std::size_t ji = 0; ji < jobs.size(); ++ji)
        if (jobs[ji].first == static_cast<int>(qi)) {
          mean.base_power += cells[ji].base_power / cfg.n_splits;
          mean.concur_power += cells[ji].concur_power / cfg.n_splits;
          mean.base_netdc += cells[ji].base_netdc / cfg.n_splits;
          mean.concur_netdc += cells[ji].concur_netdc / cfg.n_splits;
        }
      w.cell(cfg.qs[qi])
          .cell(cfg.n_splits)
          .cell(mean.base_power)
          .cell(mean.concur_power)
          .cell(mean.base_netdc)
          .cell(mean.concur_netdc);
      w.end_row();
      ++ctx.result.rows;
    }
  }
}

// -------------------------------------------------------------------------
// epsilon_sweep: regularization path with feature activity

inline void run_epsilon_sweep(RunContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto bundle = make_system(cfg, cfg.penetrations.front(), cfg.alphas.front());
  const Vec r_bar = cfg.r_bar_frac * bundle.grid.redispatch_limit;
  auto [train, test] =
      policy::split_records(bundle.records, effective_q_train(cfg), cfg.seed);

  std::vector<double> eps_sorted = cfg.epsilons;
  std::sort(eps_sorted.begin(), eps_sorted.end(), std::greater<>());
  std::vector<policy::SweepRow> rows(eps_sorted.size());
  parallel_for(static_cast<int>(eps_sorted.size()), cfg.workers, [&](int i) {
    rows[i] = policy::sweep_epsilon(train, test, bundle.grid, bundle.netdc,
                                    {eps_sorted[i]}, r_bar, bnb_options(cfg))
                  .front();
  });

  {
    auto os = ctx.open("epsilon_sweep.csv");
    ReportWriter w(os, "epsilon_sweep",
                   {"epsilon", "active_features", "avg_test_cost", "l1_norm"});
    for (const auto& row : rows) {
      w.cell(row.epsilon)
          .cell(row.active_features)
          .cell(row.avg_test_cost)
          .cell(row.policy.l1_norm());
      w.end_row();
      ++ctx.result.rows;
    }
  }
  {
    // which feature blocks stay active along the path (selection table)
    auto os = ctx.open("feature_activity.csv");
    ReportWriter w(os, "epsilon_sweep",
                   {"epsilon", "feature", "group", "max_abs_weight", "active"});
    const auto& schema = bundle.schema;
    auto group_of = [&](int f) {
      if (f < schema.n_demand) return "demand";
      f -= schema.n_demand;
      if (f < schema.n_price) return "price";
      f -= schema.n_price;
      if (f < schema.n_renewable) return "renewable";
      return "flow";
    };
    for (const auto& row : rows)
      for (int f = 0; f < row.policy.n_features(); ++f) {
        double wmax = row.policy.weights.col(f).cwiseAbs().maxCoeff();
        w.cell(row.epsilon)
            .cell(f)
            .cell(group_of(f))
            .cell(wmax)
            .cell(wmax > 1e-7 ? 1 : 0);
        w.end_row();
      }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto os = ctx.open("policy_eps_" + std::to_string(i) + ".txt");
    policy::save_policy(os, rows[i].policy);
  }
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  auto start = std::chrono::steady_clock::now();
  detail::RunContext ctx(cfg);
  switch (cfg.kind) {
    case ExperimentKind::kDayAhead: detail::run_day_ahead(ctx); break;
    case ExperimentKind::kPolicyCompare: detail::run_policy_compare(ctx); break;
    case ExperimentKind::kFeasibilityVsQ: detail::run_feasibility_vs_q(ctx); break;
    case ExperimentKind::kEpsilonSweep: detail::run_epsilon_sweep(ctx); break;
  }
  ctx.result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  ctx.finish();
  return ctx.result;
}

}  // namespace flexgrid::harness
