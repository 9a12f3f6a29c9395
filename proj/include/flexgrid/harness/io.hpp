#pragma once

// File formats of the experiment harness. Every file starts with a versioned
// header line; loaders validate strictly and report 1-based line numbers.
//
//   - system files:   nested key/value text describing grid and data-center
//                     network ("flexgrid-system v1")
//   - scenario files: CSV, one row per (scenario, hour), column counts
//                     declared in the header line ("flexgrid-scenarios v1")
//   - config files:   key/value text driving run_experiment
//                     ("flexgrid-config v1")
//   - report files:   CSV with a documented column header
//                     ("flexgrid-report v1")

#include "flexgrid/core/types.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace flexgrid::harness {

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Default output root: $FLEXGRID_OUT if set, else ./flexgrid-out.
inline std::filesystem::path default_output_root() {
  if (const char* env = std::getenv("FLEXGRID_OUT"); env && *env)
    return std::filesystem::path(env);
  return std::filesystem::path("flexgrid-out");
}

namespace detail {

/// Line-oriented reader with 1-based line numbers in every error.
class LineReader {
 public:
  LineReader(std::istream& is, std::string origin)
      : is_(is), origin_(std::move(origin)) {}

  [[noreturn]] void fail(const std::string& m) const {
    throw ValidationError(origin_ + " line " + std::to_string(line_no_) +
                          ": " + m);
  }

  bool next_raw(std::string& out) {
    if (!std::getline(is_, out)) return false;
    ++line_no_;
    if (!out.empty() && out.back() == '\r') out.pop_back();
    return true;
  }

  /// Next non-empty, non-comment line split into whitespace tokens.
  bool next_tokens(std::vector<std::string>& tokens) {
    std::string raw;
    while (next_raw(raw)) {
      std::istringstream ls(raw);
      tokens.clear();
      std::string tok;
      while (ls >> tok) tokens.push_back(tok);
      if (tokens.empty() || tokens.front().front() == '#') continue;
      return true;
    }
    return false;
  }

  std::vector<std::string> expect_line(const std::string& key) {
    std::vector<std::string> tokens;
    if (!next_tokens(tokens)) fail("unexpected end of file, wanted '" + key + "'");
    if (tokens.front() != key)
      fail("expected '" + key + "', got '" + tokens.front() + "'");
    return tokens;
  }

  int line_no() const { return line_no_; }

 private:
  std::istream& is_;
  std::string origin_;
  int line_no_ = 0;
};

inline double to_double(const LineReader& r, const std::string& tok) {
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    r.fail("not a number: '" + tok + "'");
  }
}

inline int to_int(const LineReader& r, const std::string& tok) {
  try {
    std::size_t used = 0;
    int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    r.fail("not an integer: '" + tok + "'");
  }
}

inline Vec tokens_to_vec(const LineReader& r,
                         const std::vector<std::string>& tokens, int offset,
                         int expect) {
  if (static_cast<int>(tokens.size()) - offset != expect)
    r.fail("expected " + std::to_string(expect) + " values, got " +
           std::to_string(tokens.size() - offset));
  Vec v(expect);
  for (int i = 0; i < expect; ++i) v[i] = to_double(r, tokens[offset + i]);
  return v;
}

inline void write_vec(std::ostream& os, const char* key, const Vec& v) {
  os << key;
  for (int i = 0; i < v.size(); ++i) os << " " << v[i];
  os << "\n";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// System files

inline constexpr const char* kSystemFileHeader = "flexgrid-system v1";

inline void save_system(std::ostream& os, const GridModel& g,
                        const NetDCModel& dc) {
  os << std::setprecision(17);
  os << kSystemFileHeader << "\n";
  os << "[grid]\n";
  os << "n_buses " << g.n_buses << "\n";
  os << "n_lines " << g.n_lines() << "\n";
  for (const auto& line : g.lines)
    os << "line " << line.from << " " << line.to << " " << line.capacity
       << "\n";
  for (int l = 0; l < g.n_lines(); ++l)
    detail::write_vec(os, "ptdf", g.ptdf.row(l).transpose());
  detail::write_vec(os, "gen_cost_lin", g.gen_cost_lin);
  for (int i = 0; i < g.n_buses; ++i)
    detail::write_vec(os, "gen_cost_quad", g.gen_cost_quad.row(i).transpose());
  detail::write_vec(os, "gen_min", g.gen_min);
  detail::write_vec(os, "gen_max", g.gen_max);
  detail::write_vec(os, "ramp_up", g.ramp_up);
  detail::write_vec(os, "ramp_dn", g.ramp_dn);
  detail::write_vec(os, "startup_ramp", g.startup_ramp);
  detail::write_vec(os, "shutdown_ramp", g.shutdown_ramp);
  detail::write_vec(os, "startup_cost", g.startup_cost);
  detail::write_vec(os, "shed_cost", g.shed_cost);
  detail::write_vec(os, "redispatch_limit", g.redispatch_limit);
  os << "[netdc]\n";
  os << "n_dc " << dc.n_dc << "\n";
  os << "n_users " << dc.n_users << "\n";
  os << "dc_bus";
  for (int j : dc.dc_bus) os << " " << j;
  os << "\n";
  os << "latency_loss_cap " << dc.latency_loss_cap << "\n";
  os << "alloc_reg " << dc.alloc_reg << "\n";
  os << "shift_reg " << dc.shift_reg << "\n";
  for (int i = 0; i < dc.n_dc; ++i)
    detail::write_vec(os, "distance", dc.distance.row(i).transpose());
  for (int i = 0; i < dc.conversion.rows(); ++i)
    detail::write_vec(os, "conversion", dc.conversion.row(i).transpose());
  os << "end\n";
}

inline std::pair<GridModel, NetDCModel> load_system(std::istream& is,
                                                    const std::string& origin =
                                                        "system file") {
  detail::LineReader r(is, origin);
  {
    std::string raw;
    if (!r.next_raw(raw) || raw != kSystemFileHeader)
      r.fail(std::string("bad header, wanted '") + kSystemFileHeader + "'");
  }
  GridModel g;
  NetDCModel dc;
  r.expect_line("[grid]");
  g.n_buses = detail::to_int(r, r.expect_line("n_buses").at(1));
  if (g.n_buses < 1) r.fail("n_buses must be >= 1");
  int n_lines = detail::to_int(r, r.expect_line("n_lines").at(1));
  if (n_lines < 0) r.fail("n_lines must be >= 0");
  for (int l = 0; l < n_lines; ++l) {
    auto tokens = r.expect_line("line");
    if (tokens.size() != 4) r.fail("line rows are: line <from> <to> <capacity>");
    g.lines.push_back({detail::to_int(r, tokens[1]), detail::to_int(r, tokens[2]),
                       detail::to_double(r, tokens[3])});
  }
  g.ptdf = Mat(n_lines, g.n_buses);
  for (int l = 0; l < n_lines; ++l)
    g.ptdf.row(l) =
        detail::tokens_to_vec(r, r.expect_line("ptdf"), 1, g.n_buses)
            .transpose();
  auto grid_vec = [&](const char* key) {
    return detail::tokens_to_vec(r, r.expect_line(key), 1, g.n_buses);
  };
  g.gen_cost_lin = grid_vec("gen_cost_lin");
  g.gen_cost_quad = Mat(g.n_buses, g.n_buses);
  for (int i = 0; i < g.n_buses; ++i)
    g.gen_cost_quad.row(i) = grid_vec("gen_cost_quad").transpose();
  g.gen_min = grid_vec("gen_min");
  g.gen_max = grid_vec("gen_max");
  g.ramp_up = grid_vec("ramp_up");
  g.ramp_dn = grid_vec("ramp_dn");
  g.startup_ramp = grid_vec("startup_ramp");
  g.shutdown_ramp = grid_vec("shutdown_ramp");
  g.startup_cost = grid_vec("startup_cost");
  g.shed_cost = grid_vec("shed_cost");
  g.redispatch_limit = grid_vec("redispatch_limit");

  r.expect_line("[netdc]");
  dc.n_dc = detail::to_int(r, r.expect_line("n_dc").at(1));
  dc.n_users = detail::to_int(r, r.expect_line("n_users").at(1));
  if (dc.n_dc < 1 || dc.n_users < 1) r.fail("n_dc and n_users must be >= 1");
  {
    auto tokens = r.expect_line("dc_bus");
    if (static_cast<int>(tokens.size()) - 1 != dc.n_dc)
      r.fail("dc_bus needs one bus per data center");
    for (int j = 0; j < dc.n_dc; ++j)
      dc.dc_bus.push_back(detail::to_int(r, tokens[1 + j]));
  }
  dc.latency_loss_cap =
      detail::to_double(r, r.expect_line("latency_loss_cap").at(1));
  dc.alloc_reg = detail::to_double(r, r.expect_line("alloc_reg").at(1));
  dc.shift_reg = detail::to_double(r, r.expect_line("shift_reg").at(1));
  dc.distance = Mat(dc.n_dc, dc.n_users);
  for (int i = 0; i < dc.n_dc; ++i)
    dc.distance.row(i) =
        detail::tokens_to_vec(r, r.expect_line("distance"), 1, dc.n_users)
            .transpose();
  dc.conversion = Mat(g.n_buses, dc.n_dc);
  for (int i = 0; i < g.n_buses; ++i)
    dc.conversion.row(i) =
        detail::tokens_to_vec(r, r.expect_line("conversion"), 1, dc.n_dc)
            .transpose();
  r.expect_line("end");
  try {
    g.validate();
    dc.validate(g.n_buses);
  } catch (const ValidationError& e) {
    throw ValidationError(origin + ": " + e.what());
  }
  return {std::move(g), std::move(dc)};
}

// ---------------------------------------------------------------------------
// Scenario files

inline constexpr const char* kScenarioFileHeader = "flexgrid-scenarios v1";

inline void save_scenarios(std::ostream& os,
                           const std::vector<ScenarioRecord>& records) {
  if (records.empty())
    throw ValidationError("save_scenarios: no records to write");
  const auto& first = records.front();
  const int b = static_cast<int>(first.loads.rows());
  const int m = static_cast<int>(first.compute_demand.rows());
  const int nf = static_cast<int>(first.features.size());
  const bool dayahead = first.day_ahead_dispatch.has_value();
  os << std::setprecision(17);
  os << kScenarioFileHeader << " buses=" << b << " users=" << m
     << " features=" << nf << " dayahead=" << (dayahead ? 1 : 0) << "\n";
  os << "scenario,hour";
  auto cols = [&os](const char* stem, int count) {
    for (int i = 0; i < count; ++i) os << "," << stem << "_" << i;
  };
  cols("load", b);
  cols("renewable", b);
  cols("demand", m);
  cols("feature", nf);
  if (dayahead) {
    cols("dispatch", b);
    cols("commitment", b);
  }
  os << "\n";
  for (std::size_t s = 0; s < records.size(); ++s) {
    const auto& rec = records[s];
    rec.validate();
    if (rec.loads.rows() != b || rec.compute_demand.rows() != m ||
        rec.features.size() != nf ||
        rec.day_ahead_dispatch.has_value() != dayahead)
      throw ValidationError("save_scenarios: record " + std::to_string(s) +
                            " does not match the schema of record 0");
    for (int t = 0; t < rec.horizon(); ++t) {
      os << s << "," << t;
      for (int i = 0; i < b; ++i) os << "," << rec.loads(i, t);
      for (int i = 0; i < b; ++i) os << "," << rec.renewables(i, t);
      for (int j = 0; j < m; ++j) os << "," << rec.compute_demand(j, t);
      for (int f = 0; f < nf; ++f) os << "," << rec.features[f];
      if (dayahead) {
        for (int i = 0; i < b; ++i) os << "," << (*rec.day_ahead_dispatch)[i];
        for (int i = 0; i < b; ++i) os << "," << (*rec.commitment)[i];
      }
      os << "\n";
    }
  }
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& raw) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : raw) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline int header_field(LineReader& r, const std::string& header,
                        const std::string& key) {
  std::istringstream hs(header);
  std::string tok;
  while (hs >> tok) {
    auto eq = tok.find('=');
    if (eq != std::string::npos && tok.substr(0, eq) == key)
      return to_int(r, tok.substr(eq + 1));
  }
  r.fail("header misses '" + key + "='");
}

}  // namespace detail

inline std::vector<ScenarioRecord> load_scenarios(std::istream& is,
                                                  const std::string& origin =
                                                      "scenario file") {
  detail::LineReader r(is, origin);
  std::string header;
  if (!r.next_raw(header) || header.rfind(kScenarioFileHeader, 0) != 0)
    r.fail(std::string("bad header, wanted '") + kScenarioFileHeader + " ...'");
  const int b = detail::header_field(r, header, "buses");
  const int m = detail::header_field(r, header, "users");
  const int nf = detail::header_field(r, header, "features");
  const bool dayahead = detail::header_field(r, header, "dayahead") != 0;
  if (b < 1 || m < 1 || nf < 0) r.fail("bad dimensions in header");
  std::string columns;
  if (!r.next_raw(columns) || columns.rfind("scenario,hour", 0) != 0)
    r.fail("missing column header line");
  const int expect_cols = 2 + 2 * b + m + nf + (dayahead ? 2 * b : 0);
  if (static_cast<int>(detail::split_csv(columns).size()) != expect_cols)
    r.fail("column header has the wrong number of columns");

  // rows grouped by scenario, hours ascending from 0 within each scenario
  std::vector<std::vector<Vec>> raw_rows;  // per scenario, per hour
  std::string raw;
  while (r.next_raw(raw)) {
    if (raw.empty()) continue;
    auto fields = detail::split_csv(raw);
    if (static_cast<int>(fields.size()) != expect_cols)
      r.fail("expected " + std::to_string(expect_cols) + " columns, got " +
             std::to_string(fields.size()));
    int s = detail::to_int(r, fields[0]);
    int t = detail::to_int(r, fields[1]);
    if (s == static_cast<int>(raw_rows.size()) && t == 0) {
      raw_rows.emplace_back();
    } else if (s != static_cast<int>(raw_rows.size()) - 1 ||
               t != static_cast<int>(raw_rows.back().size())) {
      r.fail("rows must be grouped by scenario with hours 0,1,... in order");
    }
    Vec vals(expect_cols - 2);
    for (int i = 2; i < expect_cols; ++i)
      vals[i - 2] = detail::to_double(r, fields[i]);
    raw_rows.back().push_back(std::move(vals));
  }
  if (raw_rows.empty()) r.fail("no scenario rows");

  std::vector<ScenarioRecord> out;
  for (const auto& hours : raw_rows) {
    const int tau = static_cast<int>(hours.size());
    ScenarioRecord rec;
    rec.loads = Mat(b, tau);
    rec.renewables = Mat(b, tau);
    rec.compute_demand = Mat(m, tau);
    for (int t = 0; t < tau; ++t) {
      int off = 0;
      for (int i = 0; i < b; ++i) rec.loads(i, t) = hours[t][off++];
      for (int i = 0; i < b; ++i) rec.renewables(i, t) = hours[t][off++];
      for (int j = 0; j < m; ++j) rec.compute_demand(j, t) = hours[t][off++];
      if (t == 0) {
        rec.features = hours[t].segment(off, nf);
        if (dayahead) {
          rec.day_ahead_dispatch = hours[t].segment(off + nf, b);
          rec.commitment = hours[t].segment(off + nf + b, b);
        }
      }
    }
    rec.validate();
    out.push_back(std::move(rec));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment configuration

enum class ExperimentKind { kDayAhead, kPolicyCompare, kFeasibilityVsQ, kEpsilonSweep };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kDayAhead: return "day_ahead";
    case ExperimentKind::kPolicyCompare: return "policy_compare";
    case ExperimentKind::kFeasibilityVsQ: return "feasibility_vs_q";
    case ExperimentKind::kEpsilonSweep: return "epsilon_sweep";
  }
  return "?";
}

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kDayAhead;
  std::string system_file;  // optional: load instead of generating
  std::uint64_t seed = 1;
  int n_zones = 11;
  int n_dc = 5;
  int n_scenarios = 40;   // single-period records per system
  int horizon = 5;        // hours of the day-ahead profile
  int n_splits = 20;      // resampled train/test splits (feasibility_vs_q)
  int q_train = 0;        // records used for training; 0 = half of scenarios
  int workers = 1;
  double gap_tol = 1e-6;
  std::size_t node_limit = 200000;
  double r_bar_frac = 1.0;  // re-dispatch limit as a fraction of gen_max
  std::vector<double> alphas;
  std::vector<double> penetrations;
  std::vector<int> qs;
  std::vector<double> epsilons;
  std::string output_dir;  // empty: default_output_root()/<kind>

  void validate() const {
    auto fail = [](const std::string& m) {
      throw ValidationError("ExperimentConfig: " + m);
    };
    if (n_zones < 1 || n_dc < 1 || n_dc > n_zones)
      fail("need 1 <= n_dc <= n_zones");
    if (n_scenarios < 1 || horizon < 1) fail("scenarios and horizon must be >= 1");
    if (n_splits < 1 || workers < 1) fail("splits and workers must be >= 1");
    if (gap_tol <= 0 || r_bar_frac < 0) fail("bad solver parameters");
    for (double p : penetrations)
      if (p <= 0.0 || p >= 1.0) fail("penetration must lie in (0, 1)");
    for (double a : alphas)
      if (a < 0.0) fail("alpha must be >= 0");
    for (int q : qs)
      if (q < 1 || q >= n_scenarios) fail("q must lie in [1, scenarios)");
    for (double e : epsilons)
      if (e < 0.0) fail("epsilon must be >= 0");
    switch (kind) {
      case ExperimentKind::kDayAhead:
        if (alphas.empty()) fail("day_ahead needs a nonempty alpha list");
        if (penetrations.empty()) fail("day_ahead needs a penetration");
        break;
      case ExperimentKind::kPolicyCompare:
        if (alphas.empty() || penetrations.empty())
          fail("policy_compare needs alpha and penetration lists");
        break;
      case ExperimentKind::kFeasibilityVsQ:
        if (qs.empty()) fail("feasibility_vs_q needs a nonempty q list");
        if (penetrations.empty() || alphas.empty())
          fail("feasibility_vs_q needs a penetration and an alpha");
        break;
      case ExperimentKind::kEpsilonSweep:
        if (epsilons.empty()) fail("epsilon_sweep needs a nonempty epsilon list");
        if (penetrations.empty() || alphas.empty())
          fail("epsilon_sweep needs a penetration and an alpha");
        break;
    }
  }
};

inline constexpr const char* kConfigFileHeader = "flexgrid-config v1";

inline ExperimentConfig load_config(std::istream& is,
                                    const std::string& origin = "config file") {
  detail::LineReader r(is, origin);
  {
    std::string raw;
    if (!r.next_raw(raw) || raw != kConfigFileHeader)
      r.fail(std::string("bad header, wanted '") + kConfigFileHeader + "'");
  }
  ExperimentConfig cfg;
  bool have_kind = false, done = false;
  std::vector<std::string> tokens;
  while (!done && r.next_tokens(tokens)) {
    const std::string& key = tokens.front();
    auto one = [&](auto setter) {
      if (tokens.size() != 2) r.fail("'" + key + "' takes exactly one value");
      setter(tokens[1]);
    };
    auto dlist = [&](std::vector<double>& out) {
      out.clear();
      for (std::size_t i = 1; i < tokens.size(); ++i)
        out.push_back(detail::to_double(r, tokens[i]));
    };
    if (key == "kind") {
      one([&](const std::string& v) {
        if (v == "day_ahead") cfg.kind = ExperimentKind::kDayAhead;
        else if (v == "policy_compare") cfg.kind = ExperimentKind::kPolicyCompare;
        else if (v == "feasibility_vs_q") cfg.kind = ExperimentKind::kFeasibilityVsQ;
        else if (v == "epsilon_sweep") cfg.kind = ExperimentKind::kEpsilonSweep;
        else r.fail("unknown experiment kind '" + v + "'");
        have_kind = true;
      });
    } else if (key == "system") {
      one([&](const std::string& v) { cfg.system_file = v; });
    } else if (key == "seed") {
      one([&](const std::string& v) {
        cfg.seed = static_cast<std::uint64_t>(std::stoull(v));
      });
    } else if (key == "zones") {
      one([&](const std::string& v) { cfg.n_zones = detail::to_int(r, v); });
    } else if (key == "data_centers") {
      one([&](const std::string& v) { cfg.n_dc = detail::to_int(r, v); });
    } else if (key == "scenarios") {
      one([&](const std::string& v) { cfg.n_scenarios = detail::to_int(r, v); });
    } else if (key == "horizon") {
      one([&](const std::string& v) { cfg.horizon = detail::to_int(r, v); });
    } else if (key == "splits") {
      one([&](const std::string& v) { cfg.n_splits = detail::to_int(r, v); });
    } else if (key == "train_records") {
      one([&](const std::string& v) { cfg.q_train = detail::to_int(r, v); });
    } else if (key == "workers") {
      one([&](const std::string& v) { cfg.workers = detail::to_int(r, v); });
    } else if (key == "gap_tol") {
      one([&](const std::string& v) { cfg.gap_tol = detail::to_double(r, v); });
    } else if (key == "node_limit") {
      one([&](const std::string& v) {
        cfg.node_limit = static_cast<std::size_t>(std::stoull(v));
      });
    } else if (key == "redispatch_fraction") {
      one([&](const std::string& v) {
        cfg.r_bar_frac = detail::to_double(r, v);
      });
    } else if (key == "alpha") {
      dlist(cfg.alphas);
    } else if (key == "penetration") {
      dlist(cfg.penetrations);
    } else if (key == "q") {
      cfg.qs.clear();
      for (std::size_t i = 1; i < tokens.size(); ++i)
        cfg.qs.push_back(detail::to_int(r, tokens[i]));
    } else if (key == "epsilon") {
      dlist(cfg.epsilons);
    } else if (key == "output") {
      one([&](const std::string& v) { cfg.output_dir = v; });
    } else if (key == "end") {
      done = true;
    } else {
      r.fail("unknown key '" + key + "'");
    }
  }
  if (!done) r.fail("missing 'end' line");
  if (!have_kind) r.fail("missing 'kind'");
  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(origin + ": " + e.what());
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Report files

inline constexpr const char* kReportFileHeader = "flexgrid-report v1";

/// CSV report with the versioned header line; writes are deterministic (no
/// timestamps, fixed precision).
class ReportWriter {
 public:
  ReportWriter(std::ostream& os, const std::string& kind,
               const std::vector<std::string>& columns)
      : os_(os), n_cols_(columns.size()) {
    os_ << kReportFileHeader << " kind=" << kind << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i)
      os_ << (i ? "," : "") << columns[i];
    os_ << "\n";
    os_ << std::setprecision(12);
  }

  ReportWriter& cell(double v) { return put(v); }
  ReportWriter& cell(int v) { return put(v); }
  ReportWriter& cell(std::size_t v) { return put(v); }
  ReportWriter& cell(const std::string& v) { return put(v); }
  ReportWriter& cell(const char* v) { return put(v); }

  void end_row() {
    if (col_ != n_cols_)
      throw IoError("ReportWriter: row has " + std::to_string(col_) +
                    " cells, header has " + std::to_string(n_cols_));
    os_ << "\n";
    col_ = 0;
  }

 private:
  template <typename T>
  ReportWriter& put(const T& v) {
    if (col_ >= n_cols_) throw IoError("ReportWriter: too many cells in row");
    if (col_) os_ << ",";
    os_ << v;
    ++col_;
    return *this;
  }

  std::ostream& os_;
  std::size_t n_cols_;
  std::size_t col_ = 0;
};

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  return os;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open for reading: " + path.string());
  return is;
}

}  // namespace flexgrid::harness
