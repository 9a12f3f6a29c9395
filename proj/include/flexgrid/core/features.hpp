#pragma once

// Contextual feature vector assembly.
//
// Features are the public grid quantities a coordination policy may act on:
// zonal demands, zonal prices, zonal renewable output, and inter-zonal
// flows, concatenated in that fixed order. The segment lengths form the
// dataset schema; the NYISO-like default (11 zones, 12 interfaces) gives a
// 45-entry vector.

#include "flexgrid/core/types.hpp"

#include <cstdint>

namespace flexgrid {

struct FeatureSchema {
  int n_demand = 0;
  int n_price = 0;
  int n_renewable = 0;
  int n_flow = 0;

  int total() const { return n_demand + n_price + n_renewable + n_flow; }

  bool operator==(const FeatureSchema&) const = default;

  /// Stable schema fingerprint, stored in serialized policies so that a
  /// policy is never applied to records with a different layout.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (int v : {n_demand, n_price, n_renewable, n_flow}) {
      h ^= static_cast<std::uint64_t>(v);
      h *= 1099511628211ull;
    }
    return h;
  }
};

struct RawFeatures {
  Vec demand;
  Vec price;
  Vec renewable;
  Vec flow;
};

inline FeatureSchema schema_of(const RawFeatures& raw) {
  return {static_cast<int>(raw.demand.size()), static_cast<int>(raw.price.size()),
          static_cast<int>(raw.renewable.size()), static_cast<int>(raw.flow.size())};
}

/// Concatenates the raw segments in schema order (d, lambda, r, f).
inline Vec features_assemble(const RawFeatures& raw, const FeatureSchema& schema) {
  if (schema_of(raw) != schema)
    throw ValidationError("features_assemble: segment lengths do not match schema");
  Vec x(schema.total());
  x << raw.demand, raw.price, raw.renewable, raw.flow;
  return x;
}

/// Inverse of features_assemble.
inline RawFeatures features_disassemble(const Vec& x, const FeatureSchema& schema) {
  if (x.size() != schema.total())
    throw ValidationError("features_disassemble: vector length does not match schema");
  RawFeatures raw;
  int off = 0;
  raw.demand = x.segment(off, schema.n_demand);
  off += schema.n_demand;
  raw.price = x.segment(off, schema.n_price);
  off += schema.n_price;
  raw.renewable = x.segment(off, schema.n_renewable);
  off += schema.n_renewable;
  raw.flow = x.segment(off, schema.n_flow);
  return raw;
}

}  // namespace flexgrid
