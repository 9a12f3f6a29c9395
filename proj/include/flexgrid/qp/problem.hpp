#pragma once

// Convex quadratic program container and incremental builder.
//
// Canonical form:
//   minimize    1/2 x'Qx + c'x
//   subject to  E x  = e
//               A x <= b
// with Q symmetric PSD. All matrices are sparse; every solver in the
// project funnels its instances through this type.

#include "flexgrid/core/types.hpp"

#include <Eigen/Sparse>

#include <ostream>
#include <vector>

namespace flexgrid::qp {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

struct QuadraticProgram {
  int n = 0;
  SpMat Q;   // n x n, symmetric
  Vec c;     // n
  SpMat E;   // m_eq x n
  Vec e;     // m_eq
  SpMat A;   // m_in x n
  Vec b;     // m_in

  int n_eq() const { return static_cast<int>(e.size()); }
  int n_in() const { return static_cast<int>(b.size()); }

  double objective(const Vec& x) const {
    return 0.5 * x.dot(Q * x) + c.dot(x);
  }

  /// Copy with extra equality rows x[i] = v, used for branching and for
  /// pattern enumeration.
  QuadraticProgram with_fixings(
      const std::vector<std::pair<int, double>>& fixings) const;
};

/// Assembles a QuadraticProgram from incremental terms. Rows keep the order
/// in which they were opened, so callers can map duals back to constraints.
class QpBuilder {
 public:
  int add_var() {
    c_.push_back(0.0);
    return n_++;
  }
  int add_vars(int k) {
    int first = n_;
    for (int i = 0; i < k; ++i) add_var();
    return first;
  }

  void obj_lin(int i, double v) { c_[i] += v; }
  /// Adds the objective term coef * x_i * x_j.
  void obj_quad(int i, int j, double coef) {
    if (i == j) {
      q_.emplace_back(i, i, 2.0 * coef);
    } else {
      q_.emplace_back(i, j, coef);
      q_.emplace_back(j, i, coef);
    }
  }

  int begin_eq(double rhs) {
    e_.push_back(rhs);
    return static_cast<int>(e_.size()) - 1;
  }
  void eq_add(int row, int var, double coef) { et_.emplace_back(row, var, coef); }

  int begin_le(double rhs) {
    b_.push_back(rhs);
    return static_cast<int>(b_.size()) - 1;
  }
  void le_add(int row, int var, double coef) { at_.emplace_back(row, var, coef); }

  /// Convenience: lo <= x_i <= hi as two inequality rows; returns the row
  /// index of the upper-bound row (the lower-bound row follows it).
  int bound(int var, double lo, double hi) {
    int up = begin_le(hi);
    le_add(up, var, 1.0);
    int dn = begin_le(-lo);
    le_add(dn, var, -1.0);
    return up;
  }

  int n_vars() const { return n_; }
  int n_eq() const { return static_cast<int>(e_.size()); }
  int n_in() const { return static_cast<int>(b_.size()); }

  QuadraticProgram build() const {
    QuadraticProgram p;
    p.n = n_;
    p.Q.resize(n_, n_);
    p.Q.setFromTriplets(q_.begin(), q_.end());
    p.c = Eigen::Map<const Vec>(c_.data(), n_);
    p.E.resize(n_eq(), n_);
    p.E.setFromTriplets(et_.begin(), et_.end());
    p.e = Eigen::Map<const Vec>(e_.data(), n_eq());
    p.A.resize(n_in(), n_);
    p.A.setFromTriplets(at_.begin(), at_.end());
    p.b = Eigen::Map<const Vec>(b_.data(), n_in());
    return p;
  }

 private:
  int n_ = 0;
  std::vector<double> c_, e_, b_;
  std::vector<Triplet> q_, et_, at_;
};

inline QuadraticProgram QuadraticProgram::with_fixings(
    const std::vector<std::pair<int, double>>& fixings) const {
  if (fixings.empty()) return *this;
  QuadraticProgram p = *this;
  const int m0 = n_eq();
  const int m = m0 + static_cast<int>(fixings.size());
  SpMat Efix(m, n);
  std::vector<Triplet> t;
  t.reserve(E.nonZeros() + fixings.size());
  for (int k = 0; k < E.outerSize(); ++k)
    for (SpMat::InnerIterator it(E, k); it; ++it)
      t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                     it.value());
  Vec efix(m);
  efix.head(m0) = e;
  std::vector<char> pinned(n, 0);
  std::vector<double> pinned_value(n, 0.0);
  for (size_t i = 0; i < fixings.size(); ++i) {
    t.emplace_back(m0 + static_cast<int>(i), fixings[i].first, 1.0);
    efix[m0 + i] = fixings[i].second;
    pinned[fixings[i].first] = 1;
    pinned_value[fixings[i].first] = fixings[i].second;
  }
  Efix.setFromTriplets(t.begin(), t.end());
  p.E = std::move(Efix);
  p.e = std::move(efix);

  // Substitute the pinned values out of the inequality rows. Left in place,
  // box rows such as u <= 1 with u pinned to 1 are tight at every feasible
  // point, and the interior the barrier solver needs does not exist. Rows
  // that lose all their coefficients are dropped when satisfied; a violated
  // one is kept empty so infeasibility is still reported.
  Eigen::SparseMatrix<double, Eigen::RowMajor> by_row = A;
  std::vector<Triplet> at;
  std::vector<double> bt;
  at.reserve(A.nonZeros());
  bt.reserve(n_in());
  for (int r = 0; r < by_row.outerSize(); ++r) {
    double rhs = b[r];
    int kept = 0;
    const int out_row = static_cast<int>(bt.size());
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(by_row,
                                                                        r);
         it; ++it) {
      const int j = static_cast<int>(it.col());
      if (pinned[j]) {
        rhs -= it.value() * pinned_value[j];
      } else {
        at.emplace_back(out_row, j, it.value());
        ++kept;
      }
    }
    if (kept == 0 && rhs >= 0.0) continue;
    bt.push_back(rhs);
  }
  p.A.resize(static_cast<int>(bt.size()), n);
  p.A.setFromTriplets(at.begin(), at.end());
  p.b = Eigen::Map<const Vec>(bt.data(), static_cast<Eigen::Index>(bt.size()));
  return p;
}

/// Plain-text instance dump for cross-checking against external tools.
///
/// Format: a `qp <n> <m_eq> <m_in>` header, then `c`, `e`, `b` lines of
/// numbers, then one `Q|E|A <row> <col> <value>` line per nonzero.
inline void dump(const QuadraticProgram& p, std::ostream& os) {
  os << "qp " << p.n << ' ' << p.n_eq() << ' ' << p.n_in() << '\n';
  auto vec = [&os](const char* name, const Vec& v) {
    os << name;
    for (int i = 0; i < v.size(); ++i) os << ' ' << v[i];
    os << '\n';
  };
  vec("c", p.c);
  vec("e", p.e);
  vec("b", p.b);
  auto mat = [&os](const char* name, const SpMat& m) {
    for (int k = 0; k < m.outerSize(); ++k)
      for (SpMat::InnerIterator it(m, k); it; ++it)
        os << name << ' ' << it.row() << ' ' << it.col() << ' ' << it.value()
           << '\n';
  };
  mat("Q", p.Q);
  mat("E", p.E);
  mat("A", p.A);
}

}  // namespace flexgrid::qp
