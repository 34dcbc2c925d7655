#ifndef FASTW1_W1_COST_HPP
#define FASTW1_W1_COST_HPP

#include <cstddef>

#include "fastw1/colt.hpp"
#include "fastw1/colt_block.hpp"
#include "fastw1/common.hpp"
#include "fastw1/dense.hpp"

namespace fastw1 {

/// <C, plan> = sum_ij c_ij * plan_ij.
inline double w1_dense(const DenseMatrix& cost, const DenseMatrix& plan) {
  if (cost.rows() != plan.rows() || cost.cols() != plan.cols())
    throw invalid_input("w1_dense: shape mismatch");
  instrument::counters().dense_ops += cost.rows() * cost.cols();
  double s = 0;
  for (std::size_t k = 0; k < cost.data().size(); ++k) s += cost.data()[k] * plan.data()[k];
  return s;
}

namespace detail {

// Per-row sums of (C1 ⊙ plan) for the 1D grid cost c_ij = h|i-j|, in O(N).
//
// Lower triangle: carry the distance-weighted row sum and the plain row sum,
//   p[i]  = ratios[i-1] * (p[i-1] + pp[i-1]),   pp[i] = ratios[i-1]*pp[i-1] + h*diag[i],
// and symmetrically from below for the upper triangle:
//   q[i]  = ratios[i] * (q[i+1] + qq[i+1]) + h*sup[i],
//   qq[i] = ratios[i] * qq[i+1] + h*sup[i].
inline Vec w1_cost_rows(const Colt& plan, double h) {
  check_colt(plan);
  const std::size_t n = plan.size();
  Vec rows(n, 0.0);
  double p = 0.0, pp = h * plan.lower.diag[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double r = plan.lower.ratios[i - 1];
    p = r * (p + pp);
    pp = r * pp + h * plan.lower.diag[i];
    rows[i] += p;
  }
  if (n >= 2) {
    double q = h * plan.upper.sup[n - 2], qq = q;
    rows[n - 2] += q;
    for (std::size_t i = n - 2; i-- > 0;) {
      const double r = plan.upper.ratios[i];
      q = r * (q + qq) + h * plan.upper.sup[i];
      qq = r * qq + h * plan.upper.sup[i];
      rows[i] += q;
    }
  }
  return rows;
}

}  // namespace detail

/// <C, plan> for a plan in Colt form and cost c_ij = h|i-j|, in O(N).
inline double w1_colt(const Colt& plan, double h) {
  return sum(detail::w1_cost_rows(plan, h));
}

/// <C, plan> for a block plan and cost h1|i1-i2| + h2|j1-j2|, in O(NM).
/// Off-diagonal blocks are row scalings of the diagonal ones, so the block
/// sweep carries three vector accumulators built from per-block row sums.
inline double w1_block_colt(const BlockColt& plan, double h1, double h2) {
  detail::check_block(plan);
  const std::size_t n = plan.inner, m = plan.block_count();

  // s[k] = row sums of block k, w[k] = row sums of (C1 ⊙ block k)
  std::vector<Vec> s(m), w(m);
  const Vec ones(n, 1.0);
  for (std::size_t k = 0; k < m; ++k) {
    s[k] = cmv(plan.blocks[k], ones);
    w[k] = detail::w1_cost_rows(plan.blocks[k], h1);
  }

  double total = 0;
  for (std::size_t k = 0; k < m; ++k) total += sum(w[k]);

  // lower block triangle: a = sum of scaled s up to the diagonal,
  // b = block-distance-weighted version, e = scaled w strictly below diagonal
  {
    Vec a = s[0], b(n, 0.0), e(n, 0.0);
    for (std::size_t k = 1; k < m; ++k) {
      const Vec& r = plan.lower_ratios[k - 1];
      for (std::size_t i = 0; i < n; ++i) {
        b[i] = r[i] * (b[i] + a[i]);
        e[i] = r[i] * (e[i] + w[k - 1][i]);
        a[i] = r[i] * a[i] + s[k][i];
      }
      for (std::size_t i = 0; i < n; ++i) total += h2 * b[i] + e[i];
    }
  }
  // upper block triangle, swept from the last block row
  {
    Vec a = s[m - 1], b(n, 0.0), e(n, 0.0);
    for (std::size_t k = m - 1; k-- > 0;) {
      const Vec& r = plan.upper_ratios[k];
      for (std::size_t i = 0; i < n; ++i) {
        b[i] = r[i] * (b[i] + a[i]);
        e[i] = r[i] * (e[i] + w[k + 1][i]);
        a[i] = r[i] * a[i] + s[k][i];
      }
      for (std::size_t i = 0; i < n; ++i) total += h2 * b[i] + e[i];
    }
  }
  return total;
}

}  // namespace fastw1

#endif  // FASTW1_W1_COST_HPP
