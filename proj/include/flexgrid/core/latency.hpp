#pragma once

// Aggregate latency proxy: distance-weighted sum of the task allocation.

#include "flexgrid/core/types.hpp"

namespace flexgrid {

/// Frobenius inner product of the distance matrix and an allocation.
inline double latency(const Mat& allocation, const Mat& distance) {
  if (allocation.rows() != distance.rows() || allocation.cols() != distance.cols())
    throw ValidationError("latency: allocation and distance shapes must match");
  return distance.cwiseProduct(allocation).sum();
}

}  // namespace flexgrid
