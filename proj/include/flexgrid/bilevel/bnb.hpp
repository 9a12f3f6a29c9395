#pragma once

// Mixed-integer QP with SOS1 complementarity disjunctions. Solved exactly by
// branch and bound: binaries are branched on 0/1, SOS1 pairs on which member
// is forced to zero. No big-M constants anywhere.

#include "flexgrid/qp/problem.hpp"
#include "flexgrid/qp/solve.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

namespace flexgrid::bilevel {

struct Sos1Pair {
  int first = -1;   // variable index
  int second = -1;  // variable index; at most one of the two may be nonzero
};

struct MixedIntegerKktProblem {
  qp::QuadraticProgram qp;
  std::vector<int> binaries;  // variables restricted to {0,1}; the base QP
                              // must already carry their [0,1] box rows
  std::vector<Sos1Pair> sos1;
  // Optional exact completion: given rounded 0/1 values for the binaries and
  // the node's relaxed solution, return a feasible point honoring every
  // disjunction with its true objective, or nothing if none exists.
  std::function<std::optional<qp::QpSolution>(const Vec&, const qp::QpSolution&)>
      repair;
};

struct BnbOptions {
  double gap_tol = 1e-6;  // absolute, on the objective
  std::size_t node_limit = 1000000;
  double int_tol = 1e-6;
  double sos_tol = 1e-8;  // largest tolerated |x_first * x_second|
  qp::QpOptions qp_options;
  std::ostream* trace = nullptr;  // one line per node when set
};

struct BnbReport {
  double incumbent = std::numeric_limits<double>::infinity();
  std::size_t nodes = 0;
  int max_depth = 0;
  double gap = std::numeric_limits<double>::infinity();
  double wall_seconds = 0.0;
};

struct BnbResult {
  qp::QpStatus status = qp::QpStatus::kInfeasible;
  Vec x;
  double objective = std::numeric_limits<double>::infinity();
  BnbReport report;
};

class NodeLimitExceeded : public std::runtime_error {
 public:
  explicit NodeLimitExceeded(BnbResult best)
      : std::runtime_error("branch and bound node limit exceeded"),
        best_(std::move(best)) {}
  const BnbResult& best() const { return best_; }

 private:
  BnbResult best_;
};

namespace detail {

struct Node {
  std::vector<std::pair<int, double>> fixings;
  double bound = -std::numeric_limits<double>::infinity();
  int depth = 0;
  std::size_t id = 0;
};

struct NodeOrder {  // min-bound first, diving (newest first) on ties so an
                    // incumbent appears early and the bound test can prune
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id < b.id;
  }
};

inline double worst_sos1_product(const MixedIntegerKktProblem& p, const Vec& x,
                                 int* which = nullptr) {
  double worst = 0.0;
  for (std::size_t k = 0; k < p.sos1.size(); ++k) {
    double v = std::abs(x[p.sos1[k].first] * x[p.sos1[k].second]);
    if (v > worst) {
      worst = v;
      if (which) *which = static_cast<int>(k);
    }
  }
  return worst;
}

}  // namespace detail

inline BnbResult branch_and_bound(const MixedIntegerKktProblem& p,
                                  const BnbOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const double inf = std::numeric_limits<double>::infinity();

  BnbResult best;
  best.report.gap = inf;
  double lower = -inf;
  bool any_feasible_node = false;

  std::priority_queue<detail::Node, std::vector<detail::Node>,
                      detail::NodeOrder>
      open;
  std::size_t next_id = 0;
  open.push({{}, -inf, 0, next_id++});

  auto finish = [&](qp::QpStatus status) {
    best.status = status;
    best.report.incumbent = best.objective;
    if (best.status == qp::QpStatus::kOptimal)
      best.report.gap = std::max(0.0, best.objective - lower);
    best.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return best;
  };
  auto accept = [&](const Vec& x, double obj) {
    if (obj < best.objective) {
      best.objective = obj;
      best.x = x;
    }
  };

  while (!open.empty()) {
    detail::Node node = open.top();
    open.pop();
    lower = std::min(best.objective,
                     open.empty() ? node.bound : std::min(node.bound, open.top().bound));
    if (best.objective < inf && node.bound >= best.objective - opt.gap_tol) {
      // Best-first: every remaining node is at least as bad.
      lower = std::max(lower, node.bound);
      return finish(qp::QpStatus::kOptimal);
    }
    if (best.report.nodes >= opt.node_limit) {
      auto out = finish(best.objective < inf ? qp::QpStatus::kOptimal
                                             : qp::QpStatus::kMaxIterations);
      out.report.gap = best.objective - lower;
      throw NodeLimitExceeded(out);
    }
    ++best.report.nodes;
    best.report.max_depth = std::max(best.report.max_depth, node.depth);

    auto relaxed = qp::solve_qp(p.qp.with_fixings(node.fixings), opt.qp_options);
    if (opt.trace)
      *opt.trace << "node " << node.id << " depth " << node.depth << " status "
                 << qp::to_string(relaxed.status) << " bound "
                 << relaxed.objective << "\n";
    if (relaxed.status == qp::QpStatus::kInfeasible) continue;
    if (relaxed.status == qp::QpStatus::kUnbounded) {
      if (node.depth == 0 && p.binaries.empty() && p.sos1.empty())
        return finish(qp::QpStatus::kUnbounded);
      relaxed.objective = -inf;  // keep branching; children may be bounded
    }
    if (relaxed.status == qp::QpStatus::kMaxIterations)
      relaxed.objective = node.bound;  // iterate is unreliable as a bound
    any_feasible_node = true;
    const bool reliable = relaxed.status == qp::QpStatus::kOptimal;
    double bound = relaxed.objective;
    if (best.objective < inf && bound >= best.objective - opt.gap_tol) continue;

    auto fixed_value = [&](int v) -> std::optional<double> {
      for (const auto& f : node.fixings)
        if (f.first == v) return f.second;
      return std::nullopt;
    };

    // Most fractional binary first. When the relaxation did not converge its
    // iterate cannot guide the choice, so take any still-free binary instead;
    // dropping the node would silently discard its subtree.
    int frac_var = -1;
    double frac = opt.int_tol;
    for (int v : p.binaries) {
      if (reliable) {
        double f = std::abs(relaxed.x[v] - std::round(relaxed.x[v]));
        if (f > frac) {
          frac = f;
          frac_var = v;
        }
      } else if (!fixed_value(v)) {
        frac_var = v;
        break;
      }
    }
    if (frac_var >= 0) {
      for (double side : {0.0, 1.0}) {
        detail::Node child{node.fixings, bound, node.depth + 1, next_id++};
        child.fixings.emplace_back(frac_var, side);
        open.push(std::move(child));
      }
      continue;
    }

    // Binaries integral: try the exact completion, then the disjunctions.
    // Completion starts from the relaxed iterate, so it is only meaningful
    // when the relaxation actually converged.
    bool closed_by_repair = false;
    if (p.repair && reliable) {
      Vec u(p.binaries.size());
      for (std::size_t i = 0; i < p.binaries.size(); ++i)
        u[i] = std::round(relaxed.x[p.binaries[i]]);
      if (auto fixed = p.repair(u, relaxed); fixed.has_value()) {
        // the node bound may have been discarded above, so price the
        // completed point directly from the problem data
        fixed->objective = p.qp.objective(fixed->x);
        accept(fixed->x, fixed->objective);
        closed_by_repair = fixed->objective <= bound + opt.gap_tol;
      }
    }
    int pair = -1;
    double viol =
        reliable ? detail::worst_sos1_product(p, relaxed.x, &pair) : 0.0;
    if (viol <= opt.sos_tol && reliable) {
      accept(relaxed.x, relaxed.objective);
      continue;
    }
    if (pair < 0) {  // no violated pair to split; branch any free one
      for (std::size_t k = 0; k < p.sos1.size(); ++k) {
        if (!fixed_value(p.sos1[k].first) && !fixed_value(p.sos1[k].second)) {
          pair = static_cast<int>(k);
          break;
        }
      }
    }
    if (pair < 0) continue;  // nothing left to branch on
    if (closed_by_repair) continue;
    for (int member : {p.sos1[pair].first, p.sos1[pair].second}) {
      detail::Node child{node.fixings, bound, node.depth + 1, next_id++};
      child.fixings.emplace_back(member, 0.0);
      open.push(std::move(child));
    }
  }

  if (best.objective < inf) {
    lower = best.objective;
    return finish(qp::QpStatus::kOptimal);
  }
  return finish(any_feasible_node ? qp::QpStatus::kMaxIterations
                                  : qp::QpStatus::kInfeasible);
}

/// Exhaustive enumeration over every binary pattern and every SOS1 side
/// choice, one QP per pattern. Test oracle only; guarded by size.
inline BnbResult brute_force_oracle(const MixedIntegerKktProblem& p,
                                    const qp::QpOptions& opt = {}) {
  const std::size_t nb = p.binaries.size(), ns = p.sos1.size();
  if (nb + ns > 18)
    throw std::invalid_argument("brute_force_oracle: instance too large");
  BnbResult best;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << (nb + ns)); ++mask) {
    std::vector<std::pair<int, double>> fix;
    fix.reserve(nb + ns);
    for (std::size_t i = 0; i < nb; ++i)
      fix.emplace_back(p.binaries[i], (mask >> i) & 1 ? 1.0 : 0.0);
    for (std::size_t i = 0; i < ns; ++i)
      fix.emplace_back((mask >> (nb + i)) & 1 ? p.sos1[i].second
                                              : p.sos1[i].first,
                       0.0);
    auto sol = qp::solve_qp(p.qp.with_fixings(fix), opt);
    if (sol.status != qp::QpStatus::kOptimal) continue;
    if (sol.objective < best.objective) {
      best.status = qp::QpStatus::kOptimal;
      best.objective = sol.objective;
      best.x = sol.x;
    }
  }
  best.report.incumbent = best.objective;
  best.report.gap = 0.0;
  return best;
}

}  // namespace flexgrid::bilevel
