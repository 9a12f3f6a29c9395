#pragma once

// Versioned structured-text serialization of PolicySpec. Line-oriented
// key/value format with a schema hash over the coefficient shape so a policy
// file cannot silently be applied to a system with a different feature or
// link layout.

#include "flexgrid/core/types.hpp"

#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace flexgrid::policy {

inline constexpr const char* kPolicyFileHeader = "flexgrid-policy v1";

/// FNV-1a over the coefficient shape; identifies the feature/link layout a
/// policy was trained for.
inline std::uint64_t policy_schema_hash(int n_links, int n_features) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  mix(static_cast<std::uint64_t>(n_links));
  mix(static_cast<std::uint64_t>(n_features));
  return h;
}

inline void save_policy(std::ostream& os, const PolicySpec& spec) {
  spec.validate();
  const int k = spec.n_links(), nf = spec.n_features();
  os << kPolicyFileHeader << "\n";
  os << std::setprecision(17);
  os << "links " << k << "\n";
  os << "features " << nf << "\n";
  os << "schema_hash " << std::hex << policy_schema_hash(k, nf) << std::dec
     << "\n";
  os << "l1_budget " << spec.l1_budget << "\n";
  os << "l1_includes_intercept " << (spec.l1_includes_intercept ? 1 : 0)
     << "\n";
  auto vec = [&os](const char* key, const Vec& v) {
    os << key;
    for (int i = 0; i < v.size(); ++i) os << " " << v[i];
    os << "\n";
  };
  vec("intercept", spec.intercept);
  vec("feature_mean", spec.feature_mean);
  vec("feature_std", spec.feature_std);
  for (int l = 0; l < k; ++l) vec("weights", spec.weights.row(l).transpose());
  os << "end\n";
}

namespace detail {

class PolicyReader {
 public:
  explicit PolicyReader(std::istream& is) : is_(is) {}

  [[noreturn]] void fail(const std::string& m) const {
    throw ValidationError("policy file line " + std::to_string(line_no_) +
                          ": " + m);
  }

  std::istringstream line(const std::string& expect_key) {
    std::string raw;
    if (!std::getline(is_, raw)) fail("unexpected end of file");
    ++line_no_;
    std::istringstream ls(raw);
    std::string key;
    ls >> key;
    if (key != expect_key) fail("expected '" + expect_key + "', got '" + key + "'");
    return ls;
  }

  template <typename T>
  T scalar(const std::string& key) {
    auto ls = line(key);
    T v{};
    if (!(ls >> v)) fail("bad value for '" + key + "'");
    return v;
  }

  Vec vector(const std::string& key, int len) {
    auto ls = line(key);
    Vec v(len);
    for (int i = 0; i < len; ++i)
      if (!(ls >> v[i])) fail("'" + key + "' needs " + std::to_string(len) + " values");
    double extra;
    if (ls >> extra) fail("'" + key + "' has trailing values");
    return v;
  }

 private:
  std::istream& is_;
  int line_no_ = 0;
};

}  // namespace detail

inline PolicySpec load_policy(std::istream& is) {
  detail::PolicyReader r(is);
  {
    std::string raw;
    if (!std::getline(is, raw)) throw ValidationError("policy file: empty");
    if (raw != kPolicyFileHeader)
      throw ValidationError("policy file line 1: bad header '" + raw + "'");
  }
  PolicySpec spec;
  const int k = r.scalar<int>("links");
  const int nf = r.scalar<int>("features");
  if (k < 1 || nf < 0) r.fail("bad dimensions");
  {
    auto ls = r.line("schema_hash");
    std::uint64_t h = 0;
    if (!(ls >> std::hex >> h)) r.fail("bad schema_hash");
    if (h != policy_schema_hash(k, nf))
      r.fail("schema hash does not match the stated dimensions");
  }
  spec.l1_budget = r.scalar<double>("l1_budget");
  spec.l1_includes_intercept = r.scalar<int>("l1_includes_intercept") != 0;
  spec.intercept = r.vector("intercept", k);
  spec.feature_mean = r.vector("feature_mean", nf);
  spec.feature_std = r.vector("feature_std", nf);
  spec.weights = Mat(k, nf);
  for (int l = 0; l < k; ++l)
    spec.weights.row(l) = r.vector("weights", nf).transpose();
  r.line("end");
  spec.validate();
  return spec;
}

}  // namespace flexgrid::policy
