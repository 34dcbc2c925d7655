#ifndef FASTW1_COLT_HPP
#define FASTW1_COLT_HPP

#include <cmath>
#include <cstddef>

#include "fastw1/common.hpp"
#include "fastw1/dense.hpp"

namespace fastw1 {

// Collinear triangular matrices. A lower-collinear triangular (L-CoLT) matrix
// has every row a fixed multiple of the row above, so it is determined by its
// diagonal and one ratio per adjacent row pair:
//
//   m[i][j] = diag[j] * ratios[j] * ... * ratios[i-1]   (j <= i, 0-based)
//
// The strictly-upper analogue (U-CoLT) is determined by its superdiagonal and
// ratios that couple row i to row i+1:
//
//   m[i][j] = sup[j-1] * ratios[i] * ... * ratios[j-2]  (i < j)
//
// A Colt is the sum of one of each; this family is closed under Hadamard
// products and diagonal scaling, which is what keeps the transport iterations
// in O(N) per step.

struct LowerColt {
  Vec diag;    // N entries
  Vec ratios;  // N-1 entries, ratios[i] relates rows i and i+1
};

struct UpperColt {
  Vec sup;     // N-1 superdiagonal entries (empty when N == 1)
  Vec ratios;  // N-2 entries, ratios[i] relates rows i and i+1
};

struct Colt {
  LowerColt lower;
  UpperColt upper;
  std::size_t size() const { return lower.diag.size(); }
};

namespace detail {

inline void check_lower(const LowerColt& m) {
  if (m.diag.empty()) throw invalid_input("LowerColt: empty diagonal");
  if (m.ratios.size() + 1 != m.diag.size())
    throw invalid_input("LowerColt: ratio vector must have N-1 entries");
}

inline void check_upper(const UpperColt& m, std::size_t n) {
  std::size_t want_sup = n >= 1 ? n - 1 : 0;
  std::size_t want_ratio = n >= 2 ? n - 2 : 0;
  if (m.sup.size() != want_sup || m.ratios.size() != want_ratio)
    throw invalid_input("UpperColt: inconsistent vector lengths");
}

inline void check_colt(const Colt& m) {
  check_lower(m.lower);
  check_upper(m.upper, m.size());
}

inline void check_dense_guard(std::size_t n, std::size_t guard) {
  if (n > guard)
    throw invalid_input("dense reconstruction refused: size " + std::to_string(n) +
                        " exceeds guard " + std::to_string(guard));
}

// cmv on raw coefficient arrays into a caller-owned buffer. No validation;
// the solver loops keep their state in exactly this layout.
inline void cmv_into(const Vec& diag, const Vec& lower_ratios, const Vec& sup,
                     const Vec& upper_ratios, const Vec& y, Vec& out) {
  const std::size_t n = y.size();
  instrument::counters().ratio_steps += 2 * n - 3;
  instrument::counters().diag_mults += 2 * n - 1;
  double p = diag[0] * y[0];
  out[0] = p;
  for (std::size_t i = 1; i < n; ++i) {
    p = lower_ratios[i - 1] * p + diag[i] * y[i];
    out[i] = p;
  }
  double q = sup[n - 2] * y[n - 1];
  out[n - 2] += q;
  for (std::size_t i = n - 2; i-- > 0;) {
    q = upper_ratios[i] * q + sup[i] * y[i + 1];
    out[i] += q;
  }
}

}  // namespace detail

/// True iff every ratio entry is nonzero (set membership per the definition;
/// zero diagonal/superdiagonal data is allowed).
inline bool is_valid_member(const Colt& m) {
  detail::check_colt(m);
  for (double r : m.lower.ratios)
    if (r == 0.0) return false;
  for (double r : m.upper.ratios)
    if (r == 0.0) return false;
  return true;
}

inline DenseMatrix to_dense(const LowerColt& m, std::size_t guard = kDenseGuard) {
  detail::check_lower(m);
  const std::size_t n = m.diag.size();
  detail::check_dense_guard(n, guard);
  instrument::counters().dense_ops += n * n;
  DenseMatrix out(n, n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    out(j, j) = m.diag[j];
    for (std::size_t i = j + 1; i < n; ++i) out(i, j) = out(i - 1, j) * m.ratios[i - 1];
  }
  return out;
}

inline DenseMatrix to_dense(const UpperColt& m, std::size_t n,
                            std::size_t guard = kDenseGuard) {
  detail::check_upper(m, n);
  detail::check_dense_guard(n, guard);
  instrument::counters().dense_ops += n * n;
  DenseMatrix out(n, n, 0.0);
  for (std::size_t j = 1; j < n; ++j) {
    out(j - 1, j) = m.sup[j - 1];
    for (std::size_t i = j - 1; i-- > 0;) out(i, j) = out(i + 1, j) * m.ratios[i];
  }
  return out;
}

inline DenseMatrix to_dense(const Colt& m, std::size_t guard = kDenseGuard) {
  DenseMatrix lo = to_dense(m.lower, guard);
  DenseMatrix up = to_dense(m.upper, m.size(), guard);
  for (std::size_t k = 0; k < lo.data().size(); ++k) lo.data()[k] += up.data()[k];
  return lo;
}

/// p[i] = sum_{j<=i} m[i][j] y[j] via p[i+1] = ratios[i]*p[i] + diag[i+1]*y[i+1].
inline Vec lcmv(const LowerColt& m, const Vec& y) {
  detail::check_lower(m);
  const std::size_t n = m.diag.size();
  if (y.size() != n) throw invalid_input("lcmv: length mismatch");
  instrument::counters().ratio_steps += n - 1;
  instrument::counters().diag_mults += n;
  Vec p(n);
  p[0] = m.diag[0] * y[0];
  for (std::size_t i = 0; i + 1 < n; ++i) p[i + 1] = m.ratios[i] * p[i] + m.diag[i + 1] * y[i + 1];
  return p;
}

/// q[i] = sum_{j>i} m[i][j] y[j] via q[i] = ratios[i]*q[i+1] + sup[i]*y[i+1],
/// swept upward from the last row.
inline Vec ucmv(const UpperColt& m, const Vec& y) {
  const std::size_t n = y.size();
  detail::check_upper(m, n);
  Vec q(n, 0.0);
  if (n < 2) return q;
  instrument::counters().ratio_steps += n - 2;
  instrument::counters().diag_mults += n - 1;
  q[n - 2] = m.sup[n - 2] * y[n - 1];
  for (std::size_t i = n - 2; i-- > 0;) q[i] = m.ratios[i] * q[i + 1] + m.sup[i] * y[i + 1];
  return q;
}

inline Vec cmv(const Colt& m, const Vec& y) {
  Vec p = lcmv(m.lower, y);
  Vec q = ucmv(m.upper, y);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] += q[i];
  return p;
}

/// Checks whether the transpose stays in the class: both triangles of the
/// transpose inherit collinear structure iff sup[j] == diag[j+1]*ratios'[j]
/// for every admissible j (the upper band must extend the collinearity across
/// the diagonal). Verified against dense transposes in the test suite.
inline bool is_cross_compatible(const Colt& m, double rtol = 1e-9) {
  detail::check_colt(m);
  const std::size_t n = m.size();
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (m.lower.diag[i] == 0.0) return false;
  for (std::size_t j = 0; j + 2 < n; ++j) {
    double lhs = m.upper.sup[j];
    double rhs = m.lower.diag[j + 1] * m.upper.ratios[j];
    if (std::abs(lhs - rhs) > rtol * std::max(std::abs(lhs), std::abs(rhs))) return false;
  }
  return true;
}

/// Transpose representation. The lower triangle of m^T comes from m's upper
/// band (ratios sup[i]/diag[i]); the strictly upper triangle comes from m's
/// subdiagonal: sup'[i] = diag[i]*ratios[i], ratios'[i] = diag[i]*ratios[i]/diag[i+1].
inline Colt transpose(const Colt& m) {
  if (!is_cross_compatible(m))
    throw invalid_input("transpose: representation is not cross-compatible");
  const std::size_t n = m.size();
  Colt t;
  t.lower.diag = m.lower.diag;
  t.lower.ratios.resize(n >= 1 ? n - 1 : 0);
  for (std::size_t i = 0; i + 1 < n; ++i) t.lower.ratios[i] = m.upper.sup[i] / m.lower.diag[i];
  t.upper.sup.resize(n >= 1 ? n - 1 : 0);
  for (std::size_t i = 0; i + 1 < n; ++i) t.upper.sup[i] = m.lower.diag[i] * m.lower.ratios[i];
  t.upper.ratios.resize(n >= 2 ? n - 2 : 0);
  for (std::size_t i = 0; i + 2 < n; ++i)
    t.upper.ratios[i] = m.lower.diag[i] * m.lower.ratios[i] / m.lower.diag[i + 1];
  return t;
}

/// dense(m)^T * y in O(N). Requires cross-compatibility.
inline Vec cmv_transpose(const Colt& m, const Vec& y) { return cmv(transpose(m), y); }

inline Colt hadamard(const Colt& a, const Colt& b) {
  detail::check_colt(a);
  detail::check_colt(b);
  if (a.size() != b.size()) throw invalid_input("hadamard: size mismatch");
  Colt out = a;
  for (std::size_t i = 0; i < out.lower.diag.size(); ++i) out.lower.diag[i] *= b.lower.diag[i];
  for (std::size_t i = 0; i < out.lower.ratios.size(); ++i) out.lower.ratios[i] *= b.lower.ratios[i];
  for (std::size_t i = 0; i < out.upper.sup.size(); ++i) out.upper.sup[i] *= b.upper.sup[i];
  for (std::size_t i = 0; i < out.upper.ratios.size(); ++i) out.upper.ratios[i] *= b.upper.ratios[i];
  return out;
}

inline Colt hadamard_inverse(const Colt& a) {
  detail::check_colt(a);
  for (double g : a.lower.diag)
    if (g == 0.0) throw invalid_input("hadamard_inverse: zero diagonal element");
  for (double g : a.upper.sup)
    if (g == 0.0) throw invalid_input("hadamard_inverse: zero superdiagonal element");
  Colt out = a;
  for (double& x : out.lower.diag) x = 1.0 / x;
  for (double& x : out.lower.ratios) x = 1.0 / x;
  for (double& x : out.upper.sup) x = 1.0 / x;
  for (double& x : out.upper.ratios) x = 1.0 / x;
  return out;
}

/// diag(x) * m on the representation.
inline Colt scale_rows(const Vec& x, const Colt& m) {
  detail::check_colt(m);
  const std::size_t n = m.size();
  if (x.size() != n) throw invalid_input("scale_rows: size mismatch");
  for (double xi : x)
    if (xi == 0.0) throw invalid_input("scale_rows: zero scaling entry");
  Colt out = m;
  for (std::size_t i = 0; i < n; ++i) out.lower.diag[i] *= x[i];
  for (std::size_t i = 0; i + 1 < n; ++i) {
    out.lower.ratios[i] *= x[i + 1] / x[i];
    out.upper.sup[i] *= x[i];
  }
  for (std::size_t i = 0; i + 2 < n; ++i) out.upper.ratios[i] *= x[i] / x[i + 1];
  return out;
}

/// m * diag(x); column scaling leaves the row ratios untouched.
inline Colt scale_cols(const Colt& m, const Vec& x) {
  detail::check_colt(m);
  const std::size_t n = m.size();
  if (x.size() != n) throw invalid_input("scale_cols: size mismatch");
  for (double xi : x)
    if (xi == 0.0) throw invalid_input("scale_cols: zero scaling entry");
  Colt out = m;
  for (std::size_t i = 0; i < n; ++i) out.lower.diag[i] *= x[i];
  for (std::size_t i = 0; i + 1 < n; ++i) out.upper.sup[i] *= x[i + 1];
  return out;
}

/// The all-ones matrix 1*1^T, identity of the Hadamard group.
inline Colt colt_identity(std::size_t n) {
  if (n < 2) throw invalid_input("colt_identity: need n >= 2");
  Colt out;
  out.lower.diag.assign(n, 1.0);
  out.lower.ratios.assign(n - 1, 1.0);
  out.upper.sup.assign(n - 1, 1.0);
  out.upper.ratios.assign(n - 2, 1.0);
  return out;
}

/// Geometric-decay kernel K[i][j] = lambda^|i-j| for the 1D grid cost.
inline Colt kernel_1d(std::size_t n, double lambda) {
  if (n < 2) throw invalid_input("kernel_1d: need n >= 2");
  if (!(lambda > 0.0 && lambda < 1.0)) throw invalid_input("kernel_1d: lambda must be in (0,1)");
  Colt out;
  out.lower.diag.assign(n, 1.0);
  out.lower.ratios.assign(n - 1, lambda);
  out.upper.sup.assign(n - 1, lambda);
  out.upper.ratios.assign(n - 2, lambda);
  return out;
}

}  // namespace fastw1

#endif  // FASTW1_COLT_HPP
