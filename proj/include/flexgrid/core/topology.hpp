#pragma once

// Space-time shift topology: incidence construction and shift application.

#include "flexgrid/core/types.hpp"

namespace flexgrid {

/// Builds the space-time incidence matrix for n data centers over tau hours.
///
/// Rows are indexed data-center-major within each hour: row (t * n + i) is
/// data center i at hour t. Columns come in a fixed, documented order:
///   1. spatial links of hour 1, then hour 2, ..., hour tau; within an hour
///      the pairs (i, j), i < j, in lexicographic order, oriented +1 at i
///      and -1 at j (a positive shift moves load from j to i);
///   2. temporal links grouped by data center, hour t -> t+1, oriented +1
///      at hour t and -1 at hour t+1 (a positive shift advances load).
inline SpaceTimeTopology build_incidence(int n, int tau) {
  if (n < 1 || tau < 1)
    throw ValidationError("build_incidence: n and tau must be >= 1");
  SpaceTimeTopology topo;
  topo.n_dc = n;
  topo.horizon = tau;
  topo.n_links = (n * (n - 1) / 2) * tau + n * (tau - 1);
  topo.incidence = Mat::Zero(n * tau, topo.n_links);
  int col = 0;
  for (int t = 0; t < tau; ++t)
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        topo.incidence(t * n + i, col) = 1.0;
        topo.incidence(t * n + j, col) = -1.0;
        ++col;
      }
  for (int i = 0; i < n; ++i)
    for (int t = 0; t + 1 < tau; ++t) {
      topo.incidence(t * n + i, col) = 1.0;
      topo.incidence((t + 1) * n + i, col) = -1.0;
      ++col;
    }
  return topo;
}

/// Applies a shift vector along the virtual links: returns loading + A*shift.
/// Total loading is conserved exactly (every column of A sums to zero).
inline Vec apply_shift(const SpaceTimeTopology& topo, const Vec& shift,
                       const Vec& loading) {
  if (shift.size() != topo.n_links)
    throw ValidationError("apply_shift: shift length must equal the link count");
  if (loading.size() != topo.n_dc * topo.horizon)
    throw ValidationError("apply_shift: loading length must be n_dc * horizon");
  return loading + topo.incidence * shift;
}

}  // namespace flexgrid
