#ifndef FASTW1_COLT_BLOCK_HPP
#define FASTW1_COLT_BLOCK_HPP

#include <cstddef>

#include "fastw1/colt.hpp"
#include "fastw1/common.hpp"
#include "fastw1/dense.hpp"

namespace fastw1 {

// Block generalization for 2D grids: an MN x MN matrix split into M^2 blocks
// of size N. Diagonal blocks are free Colt members; every off-diagonal block
// is a diagonal scaling of the diagonal block in its column,
//
//   A[i+1][j] = diag(lower_ratios[i]) A[i][j]   (j <= i)
//   A[i-1][j] = diag(upper_ratios[i-1]) A[i][j] (i <= j)
//
// so only the diagonal blocks and 2(M-1) ratio vectors are stored: O(NM).

struct BlockColt {
  std::size_t inner = 0;          // N
  std::vector<Colt> blocks;       // M diagonal blocks
  std::vector<Vec> lower_ratios;  // M-1 vectors of length N
  std::vector<Vec> upper_ratios;  // M-1 vectors of length N

  std::size_t block_count() const { return blocks.size(); }
  std::size_t dim() const { return inner * blocks.size(); }
};

namespace detail {

inline void check_block(const BlockColt& a) {
  const std::size_t m = a.blocks.size();
  if (m == 0 || a.inner == 0) throw invalid_input("BlockColt: empty");
  if (a.lower_ratios.size() + 1 != m || a.upper_ratios.size() + 1 != m)
    throw invalid_input("BlockColt: need M-1 ratio vectors per side");
  for (const Colt& b : a.blocks)
    if (b.size() != a.inner) throw invalid_input("BlockColt: block size mismatch");
  for (std::size_t k = 0; k + 1 < m; ++k)
    if (a.lower_ratios[k].size() != a.inner || a.upper_ratios[k].size() != a.inner)
      throw invalid_input("BlockColt: ratio vector length mismatch");
}

}  // namespace detail

inline DenseMatrix to_dense(const BlockColt& a, std::size_t guard = kDenseGuard) {
  detail::check_block(a);
  const std::size_t n = a.inner, m = a.block_count(), dim = a.dim();
  detail::check_dense_guard(dim, guard);
  instrument::counters().dense_ops += dim * dim;
  DenseMatrix out(dim, dim, 0.0);
  for (std::size_t bj = 0; bj < m; ++bj) {
    DenseMatrix d = to_dense(a.blocks[bj], guard);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out(bj * n + i, bj * n + j) = d(i, j);
    // walk down then up from the diagonal block
    DenseMatrix cur = d;
    for (std::size_t bi = bj + 1; bi < m; ++bi) {
      cur = scale_rows(a.lower_ratios[bi - 1], cur);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out(bi * n + i, bj * n + j) = cur(i, j);
    }
    cur = d;
    for (std::size_t bi = bj; bi-- > 0;) {
      cur = scale_rows(a.upper_ratios[bi], cur);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out(bi * n + i, bj * n + j) = cur(i, j);
    }
  }
  return out;
}

namespace detail {

inline void check_block_vec(const BlockColt& a, const Vec& x) {
  if (x.size() != a.dim()) throw invalid_input("block matvec: dimension mismatch");
}

}  // namespace detail

/// dense(a) * x in O(NM): one diagonal-block cmv per block plus the two
/// running block recursions.
inline Vec block_cmv(const BlockColt& a, const Vec& x) {
  detail::check_block(a);
  detail::check_block_vec(a, x);
  const std::size_t n = a.inner, m = a.block_count();

  std::vector<Vec> t(m);  // t[k] = A_kk x_k
  for (std::size_t k = 0; k < m; ++k)
    t[k] = cmv(a.blocks[k], Vec(x.begin() + k * n, x.begin() + (k + 1) * n));

  Vec out(a.dim(), 0.0);
  Vec p = t[0];
  for (std::size_t i = 0; i < n; ++i) out[i] += p[i];
  for (std::size_t k = 1; k < m; ++k) {
    for (std::size_t i = 0; i < n; ++i) p[i] = a.lower_ratios[k - 1][i] * p[i] + t[k][i];
    for (std::size_t i = 0; i < n; ++i) out[k * n + i] += p[i];
  }
  Vec q(n, 0.0);
  for (std::size_t k = m; k-- > 1;) {
    for (std::size_t i = 0; i < n; ++i) q[i] = a.upper_ratios[k - 1][i] * (q[i] + t[k][i]);
    for (std::size_t i = 0; i < n; ++i) out[(k - 1) * n + i] += q[i];
  }
  return out;
}

/// dense(a)^T * x in O(NM). Only the diagonal blocks need to be
/// cross-compatible: block column k of the transpose collects
/// A_kk^T applied to ratio-weighted prefix/suffix sums of x.
inline Vec block_cmv_transpose(const BlockColt& a, const Vec& x) {
  detail::check_block(a);
  detail::check_block_vec(a, x);
  const std::size_t n = a.inner, m = a.block_count();

  // zu[k] = sum_{j<=k} prod(upper_ratios[j..k-1]) ⊙ x_j
  // zl[k] = sum_{j>k}  prod(lower_ratios[k..j-1]) ⊙ x_j
  std::vector<Vec> z(m);
  {
    Vec zu(x.begin(), x.begin() + n);
    z[0] = zu;
    for (std::size_t k = 1; k < m; ++k) {
      for (std::size_t i = 0; i < n; ++i)
        zu[i] = a.upper_ratios[k - 1][i] * zu[i] + x[k * n + i];
      z[k] = zu;
    }
    Vec zl(n, 0.0);
    for (std::size_t k = m; k-- > 1;) {
      for (std::size_t i = 0; i < n; ++i)
        zl[i] = a.lower_ratios[k - 1][i] * (zl[i] + x[k * n + i]);
      for (std::size_t i = 0; i < n; ++i) z[k - 1][i] += zl[i];
    }
  }
  Vec out(a.dim());
  for (std::size_t k = 0; k < m; ++k) {
    Vec yk = cmv_transpose(a.blocks[k], z[k]);
    std::copy(yk.begin(), yk.end(), out.begin() + k * n);
  }
  return out;
}

inline BlockColt block_hadamard(const BlockColt& a, const BlockColt& b) {
  detail::check_block(a);
  detail::check_block(b);
  if (a.inner != b.inner || a.block_count() != b.block_count())
    throw invalid_input("block_hadamard: shape mismatch");
  BlockColt out = a;
  for (std::size_t k = 0; k < a.block_count(); ++k)
    out.blocks[k] = hadamard(a.blocks[k], b.blocks[k]);
  for (std::size_t k = 0; k + 1 < a.block_count(); ++k)
    for (std::size_t i = 0; i < a.inner; ++i) {
      out.lower_ratios[k][i] *= b.lower_ratios[k][i];
      out.upper_ratios[k][i] *= b.upper_ratios[k][i];
    }
  return out;
}

/// diag(x) * a on the representation.
inline BlockColt block_scale_rows(const Vec& x, const BlockColt& a) {
  detail::check_block(a);
  detail::check_block_vec(a, x);
  const std::size_t n = a.inner, m = a.block_count();
  for (double xi : x)
    if (xi == 0.0) throw invalid_input("block_scale_rows: zero scaling entry");
  BlockColt out = a;
  for (std::size_t k = 0; k < m; ++k)
    out.blocks[k] = scale_rows(Vec(x.begin() + k * n, x.begin() + (k + 1) * n), a.blocks[k]);
  for (std::size_t k = 0; k + 1 < m; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      out.lower_ratios[k][i] *= x[(k + 1) * n + i] / x[k * n + i];
      out.upper_ratios[k][i] *= x[k * n + i] / x[(k + 1) * n + i];
    }
  return out;
}

/// a * diag(x); block ratios are untouched.
inline BlockColt block_scale_cols(const BlockColt& a, const Vec& x) {
  detail::check_block(a);
  detail::check_block_vec(a, x);
  const std::size_t n = a.inner, m = a.block_count();
  for (double xi : x)
    if (xi == 0.0) throw invalid_input("block_scale_cols: zero scaling entry");
  BlockColt out = a;
  for (std::size_t k = 0; k < m; ++k)
    out.blocks[k] = scale_cols(a.blocks[k], Vec(x.begin() + k * n, x.begin() + (k + 1) * n));
  return out;
}

/// 2D grid kernel: diagonal blocks are the 1D kernel for lambda1, block
/// ratios are constant lambda2, giving entries lambda1^|i1-i2| lambda2^|j1-j2|.
inline BlockColt kernel_2d(std::size_t n, std::size_t m, double lambda1, double lambda2) {
  if (n < 2 || m < 2) throw invalid_input("kernel_2d: need n,m >= 2");
  if (!(lambda2 > 0.0 && lambda2 < 1.0)) throw invalid_input("kernel_2d: lambda2 must be in (0,1)");
  BlockColt out;
  out.inner = n;
  out.blocks.assign(m, kernel_1d(n, lambda1));
  out.lower_ratios.assign(m - 1, Vec(n, lambda2));
  out.upper_ratios.assign(m - 1, Vec(n, lambda2));
  return out;
}

}  // namespace fastw1

#endif  // FASTW1_COLT_BLOCK_HPP
