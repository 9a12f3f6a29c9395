// flexgrid command-line front end.
//
// Subcommands:
//   generate   write a synthetic system, scenario set and day-ahead profile
//   solve-da   solve the day-ahead coordination problem for one profile
//   train      fit a coordination policy (base regression or coupled)
//   evaluate   run the real-time rule over a scenario file
//   sweep      run a configured experiment (any kind, including the
//              regularization sweep) and emit its reports
//   report     summarize a finished experiment directory
//
// Exit codes: 0 success, 1 configuration error, 2 solver limit reached,
// 3 I/O error. FLEXGRID_OUT overrides the default output root.

#include "flexgrid/bilevel/coordination.hpp"
#include "flexgrid/harness/experiment.hpp"
#include "flexgrid/harness/generate.hpp"
#include "flexgrid/harness/io.hpp"
#include "flexgrid/policy/serialize.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitSolverLimit = 2;
constexpr int kExitIo = 3;

namespace fg = flexgrid;
namespace hs = flexgrid::harness;
namespace fs = std::filesystem;

struct SolverFlags {
  double gap_tol = 1e-6;
  std::size_t node_limit = 200000;

  void attach(CLI::App* cmd) {
    cmd->add_option("--gap-tol", gap_tol, "branch-and-bound gap tolerance")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--node-limit", node_limit, "branch-and-bound node limit");
  }
  fg::bilevel::BnbOptions options() const {
    fg::bilevel::BnbOptions opt;
    opt.gap_tol = gap_tol;
    opt.node_limit = node_limit;
    return opt;
  }
};

fs::path resolve_out(const std::string& out, const char* leaf) {
  return out.empty() ? hs::default_output_root() / leaf : fs::path(out);
}

hs::SystemBundle load_bundle(const std::string& system_file,
                             const std::string& scenario_file) {
  hs::SystemBundle bundle;
  {
    auto is = hs::open_in(system_file);
    std::tie(bundle.grid, bundle.netdc) = hs::load_system(is, system_file);
  }
  auto is = hs::open_in(scenario_file);
  bundle.records = hs::load_scenarios(is, scenario_file);
  return bundle;
}

int cmd_generate(std::uint64_t seed, int zones, int dcs, double penetration,
                 int scenarios, int horizon, double alpha,
                 const std::string& out) {
  hs::GenOptions opt;
  opt.n_scenarios = scenarios;
  opt.horizon = horizon;
  opt.latency_loss_cap = alpha;
  auto bundle = hs::generate_system(seed, zones, dcs, penetration, opt);
  fs::path dir = resolve_out(out, "generate");
  {
    auto os = hs::open_out(dir / "system.txt");
    hs::save_system(os, bundle.grid, bundle.netdc);
  }
  {
    auto os = hs::open_out(dir / "scenarios.csv");
    hs::save_scenarios(os, bundle.records);
  }
  {
    auto os = hs::open_out(dir / "day_profile.csv");
    hs::save_scenarios(os, {bundle.day_profile});
  }
  std::cout << "wrote system.txt, scenarios.csv, day_profile.csv to "
            << dir.string() << "\n";
  return kExitOk;
}

int cmd_solve_da(const std::string& system_file, const std::string& profile,
                 double alpha, const SolverFlags& solver,
                 const std::string& out) {
  fg::GridModel grid;
  fg::NetDCModel netdc;
  {
    auto is = hs::open_in(system_file);
    std::tie(grid, netdc) = hs::load_system(is, system_file);
  }
  netdc.latency_loss_cap = alpha;
  std::vector<fg::ScenarioRecord> profiles;
  {
    auto is = hs::open_in(profile);
    profiles = hs::load_scenarios(is, profile);
  }
  const auto& day = profiles.front();
  auto topo = fg::build_incidence(netdc.n_dc, day.horizon());
  auto sol = fg::bilevel::solve_day_ahead(grid, netdc, topo, day,
                                          solver.options());
  auto nominal = fg::nominal_allocation(netdc, day.compute_demand);

  fs::path dir = resolve_out(out, "solve-da");
  auto os = hs::open_out(dir / "day_ahead_solution.csv");
  hs::ReportWriter w(os, "day_ahead",
                     {"hour", "dc", "nominal_mw", "coordinated_mw"});
  if (sol.status == fg::qp::QpStatus::kOptimal) {
    for (int t = 0; t < day.horizon(); ++t)
      for (int j = 0; j < netdc.n_dc; ++j) {
        w.cell(t)
            .cell(j)
            .cell(nominal.loading[t * netdc.n_dc + j])
            .cell(sol.loading[t * netdc.n_dc + j]);
        w.end_row();
      }
  }
  std::cout << "status " << (sol.status == fg::qp::QpStatus::kOptimal
                                 ? "optimal"
                                 : "not-optimal")
            << " cost " << sol.cost << " nodes " << sol.report.nodes
            << " gap " << sol.report.gap << "\n";
  if (sol.status == fg::qp::QpStatus::kMaxIterations) return kExitSolverLimit;
  if (sol.status != fg::qp::QpStatus::kOptimal) return kExitConfig;
  return kExitOk;
}

int cmd_train(const std::string& system_file, const std::string& scenario_file,
              const std::string& mode, double epsilon, int q_train,
              std::uint64_t seed, double r_bar_frac, const SolverFlags& solver,
              const std::string& out) {
  auto bundle = load_bundle(system_file, scenario_file);
  if (q_train <= 0 || q_train > static_cast<int>(bundle.records.size()))
    q_train = static_cast<int>(bundle.records.size());
  auto [train, test] = fg::policy::split_records(bundle.records, q_train, seed);
  const fg::Vec r_bar = r_bar_frac * bundle.grid.redispatch_limit;

  fg::PolicySpec policy;
  fg::qp::QpStatus status = fg::qp::QpStatus::kOptimal;
  if (mode == "base") {
    for (const auto& rec : train.records) {
      auto ideal = fg::bilevel::solve_single_period_ideal(
          bundle.grid, bundle.netdc, rec.loads.col(0), rec.renewables.col(0),
          rec.compute_demand, *rec.day_ahead_dispatch, *rec.commitment, r_bar,
          solver.options());
      if (ideal.status != fg::qp::QpStatus::kOptimal)
        status = ideal.status;
      train.ideal_shifts.push_back(
          ideal.status == fg::qp::QpStatus::kOptimal
              ? ideal.shift
              : fg::Vec(fg::Vec::Zero(
                    fg::build_incidence(bundle.netdc.n_dc, 1).n_links)));
    }
    policy = fg::policy::train_base(train, epsilon);
  } else {
    auto fit = fg::policy::train_concur(train, bundle.grid, bundle.netdc,
                                        epsilon, r_bar, solver.options());
    if (fit.status != fg::qp::QpStatus::kOptimal) status = fit.status;
    policy = fit.policy;
  }
  auto os = hs::open_out(out);
  fg::policy::save_policy(os, policy);
  std::cout << "trained " << mode << " policy on " << train.size()
            << " records, wrote " << out << "\n";
  if (status == fg::qp::QpStatus::kMaxIterations) return kExitSolverLimit;
  return kExitOk;
}

int cmd_evaluate(const std::string& system_file,
                 const std::string& scenario_file,
                 const std::string& policy_file, double r_bar_frac,
                 const std::string& out) {
  auto bundle = load_bundle(system_file, scenario_file);
  fg::PolicySpec policy;
  {
    auto is = hs::open_in(policy_file);
    policy = fg::policy::load_policy(is);
  }
  const fg::Vec r_bar = r_bar_frac * bundle.grid.redispatch_limit;
  fs::path dir = resolve_out(out, "evaluate");
  auto os = hs::open_out(dir / "evaluation.csv");
  hs::ReportWriter w(os, "evaluate",
                     {"scenario", "branch", "netdc_ok", "opf_ok",
                      "cost_policy", "cost_fallback"});
  double total = 0.0, total_fallback = 0.0;
  int fallbacks = 0;
  for (std::size_t s = 0; s < bundle.records.size(); ++s) {
    const auto& rec = bundle.records[s];
    auto outcome =
        fg::policy::coordinate_rt(policy, rec, bundle.grid, bundle.netdc, r_bar);
    double none =
        fg::policy::noncoordinated_cost(rec, bundle.grid, bundle.netdc, r_bar);
    bool fb = outcome.branch == fg::policy::RtBranch::kFallback;
    w.cell(static_cast<int>(s))
        .cell(fb ? "fallback" : "policy")
        .cell(outcome.netdc_ok ? 1 : 0)
        .cell(outcome.opf_ok ? 1 : 0)
        .cell(outcome.realized_cost)
        .cell(none);
    w.end_row();
    total += outcome.realized_cost;
    total_fallback += none;
    fallbacks += fb ? 1 : 0;
  }
  const double q = static_cast<double>(bundle.records.size());
  std::cout << "avg cost " << total / q << " (noncoordinated "
            << total_fallback / q << "), fallback rate " << fallbacks / q
            << ", wrote " << (dir / "evaluation.csv").string() << "\n";
  return kExitOk;
}

int cmd_sweep(const std::string& config_file, int workers,
              const std::string& out, const SolverFlags& solver,
              bool have_gap, bool have_nodes) {
  auto is = hs::open_in(config_file);
  auto cfg = hs::load_config(is, config_file);
  if (workers > 0) cfg.workers = workers;
  if (!out.empty()) cfg.output_dir = out;
  if (have_gap) cfg.gap_tol = solver.gap_tol;
  if (have_nodes) cfg.node_limit = solver.node_limit;
  auto result = hs::run_experiment(cfg);
  std::cout << "wrote " << result.files.size() << " files to "
            << result.output_dir.string() << " (" << result.rows << " rows, "
            << result.solver_events << " solver events)\n";
  return result.solver_events > 0 ? kExitSolverLimit : kExitOk;
}

int cmd_report(const std::string& dir_arg) {
  fs::path dir = dir_arg;
  auto is = hs::open_in(dir / "summary.json");
  nlohmann::json summary;
  try {
    is >> summary;
  } catch (const nlohmann::json::exception& e) {
    throw hs::IoError("summary.json: " + std::string(e.what()));
  }
  std::cout << "experiment " << summary.value("kind", "?") << ", seed "
            << summary.value("seed", 0) << ", " << summary.value("rows", 0)
            << " rows, " << summary.value("solver_events", 0)
            << " solver events\n";
  for (const auto& name : summary.value("files", std::vector<std::string>{})) {
    fs::path p = dir / name;
    std::cout << "  " << name;
    if (!fs::exists(p)) {
      std::cout << "  MISSING\n";
      continue;
    }
    if (p.extension() == ".csv") {
      auto file = hs::open_in(p);
      std::string header;
      std::getline(file, header);
      if (header.rfind(hs::kReportFileHeader, 0) != 0) {
        std::cout << "  BAD HEADER\n";
        continue;
      }
      std::size_t lines = 0;
      std::string raw;
      while (std::getline(file, raw)) ++lines;
      std::cout << "  " << (lines > 0 ? lines - 1 : 0) << " rows";
    }
    std::cout << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bilevel grid / data-center coordination toolkit"};
  app.require_subcommand(1);

  // generate
  std::uint64_t seed = 1;
  int zones = 11, dcs = 5, scenarios = 40, horizon = 5;
  double penetration = 0.1, alpha = 0.25;
  std::string out_dir;
  auto* gen = app.add_subcommand("generate", "write a synthetic test system");
  gen->add_option("--seed", seed, "random seed");
  gen->add_option("--zones", zones, "number of grid zones")->check(CLI::Range(2, 200));
  gen->add_option("--data-centers", dcs, "number of data centers");
  gen->add_option("--penetration", penetration,
                  "data-center share of system load, in (0,1)");
  gen->add_option("--scenarios", scenarios, "single-hour scenario records");
  gen->add_option("--horizon", horizon, "hours in the day-ahead profile");
  gen->add_option("--alpha", alpha, "latency loss cap");
  gen->add_option("-o,--out", out_dir, "output directory");

  // solve-da
  std::string system_file, profile_file;
  SolverFlags da_solver;
  auto* da = app.add_subcommand("solve-da", "solve day-ahead coordination");
  da->add_option("--system", system_file, "system file")->required();
  da->add_option("--profile", profile_file, "day-ahead profile (scenario CSV)")
      ->required();
  da->add_option("--alpha", alpha, "latency loss cap");
  da->add_option("-o,--out", out_dir, "output directory");
  da_solver.attach(da);

  // train
  std::string scenario_file, mode = "concur", policy_out = "policy.txt";
  double epsilon = 10.0, r_bar_frac = 1.0;
  int q_train = 0;
  SolverFlags tr_solver;
  auto* tr = app.add_subcommand("train", "fit a coordination policy");
  tr->add_option("--system", system_file, "system file")->required();
  tr->add_option("--scenarios", scenario_file, "scenario CSV")->required();
  tr->add_option("--mode", mode, "base | concur")
      ->check(CLI::IsMember({"base", "concur"}));
  tr->add_option("--epsilon", epsilon, "L1 budget");
  tr->add_option("--train-records", q_train, "records used for training (0: all)");
  tr->add_option("--seed", seed, "split seed");
  tr->add_option("--redispatch-fraction", r_bar_frac,
                 "re-dispatch limit as a fraction of generator capacity");
  tr->add_option("-o,--out", policy_out, "policy file to write");
  tr_solver.attach(tr);

  // evaluate
  std::string policy_file;
  auto* ev = app.add_subcommand("evaluate", "run the real-time rule");
  ev->add_option("--system", system_file, "system file")->required();
  ev->add_option("--scenarios", scenario_file, "scenario CSV")->required();
  ev->add_option("--policy", policy_file, "policy file")->required();
  ev->add_option("--redispatch-fraction", r_bar_frac,
                 "re-dispatch limit as a fraction of generator capacity");
  ev->add_option("-o,--out", out_dir, "output directory");

  // sweep
  std::string config_file;
  int workers = 0;
  SolverFlags sw_solver;
  auto* sw = app.add_subcommand("sweep", "run a configured experiment");
  sw->add_option("-c,--config", config_file, "experiment config file")
      ->required();
  sw->add_option("-j,--workers", workers, "worker threads (overrides config)");
  sw->add_option("-o,--out", out_dir, "output directory (overrides config)");
  sw_solver.attach(sw);

  // report
  std::string report_dir;
  auto* rp = app.add_subcommand("report", "summarize an experiment directory");
  rp->add_option("dir", report_dir, "experiment output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_generate(seed, zones, dcs, penetration, scenarios, horizon,
                          alpha, out_dir);
    if (da->parsed())
      return cmd_solve_da(system_file, profile_file, alpha, da_solver, out_dir);
    if (tr->parsed())
      return cmd_train(system_file, scenario_file, mode, epsilon, q_train,
                       seed, r_bar_frac, tr_solver, policy_out);
    if (ev->parsed())
      return cmd_evaluate(system_file, scenario_file, policy_file, r_bar_frac,
                          out_dir);
    if (sw->parsed())
      return cmd_sweep(config_file, workers, out_dir, sw_solver,
                       sw->count("--gap-tol") > 0,
                       sw->count("--node-limit") > 0);
    if (rp->parsed()) return cmd_report(report_dir);
  } catch (const flexgrid::harness::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const flexgrid::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
