#ifndef FASTW1_ORACLES_HPP
#define FASTW1_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "fastw1/common.hpp"
#include "fastw1/dense.hpp"

namespace fastw1 {
namespace oracles {

/// Closed-form 1D Wasserstein-1 on a shared uniform grid:
/// h * sum_k |CumSum(u)_k - CumSum(v)_k|.
inline double w1_1d_exact(const Vec& u, const Vec& v, double h) {
  if (u.size() != v.size()) throw invalid_input("w1_1d_exact: length mismatch");
  if (std::abs(sum(u) - sum(v)) > 1e-9) throw invalid_input("w1_1d_exact: unequal mass");
  instrument::counters().dense_ops += u.size();
  double cu = 0, cv = 0, total = 0;
  for (std::size_t k = 0; k + 1 < u.size(); ++k) {
    cu += u[k];
    cv += v[k];
    total += std::abs(cu - cv);
  }
  return h * total;
}

/// l1 grid cost, 1D: c_ij = h|i-j|.
inline DenseMatrix cost_matrix_1d(std::size_t n, double h) {
  DenseMatrix c(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      c(i, j) = h * static_cast<double>(i > j ? i - j : j - i);
  return c;
}

/// l1 grid cost on an n x m grid in column-major node order
/// (node (i,j) -> i + j*n): c = h1|i1-i2| + h2|j1-j2|.
inline DenseMatrix cost_matrix_2d(std::size_t n, std::size_t m, double h1, double h2) {
  const std::size_t dim = n * m;
  DenseMatrix c(dim, dim);
  for (std::size_t a = 0; a < dim; ++a) {
    const std::size_t i1 = a % n, j1 = a / n;
    for (std::size_t b = 0; b < dim; ++b) {
      const std::size_t i2 = b % n, j2 = b / n;
      c(a, b) = h1 * static_cast<double>(i1 > i2 ? i1 - i2 : i2 - i1) +
                h2 * static_cast<double>(j1 > j2 ? j1 - j2 : j2 - j1);
    }
  }
  return c;
}

struct LpSolution {
  double objective = 0;
  DenseMatrix plan;
  Vec row_duals, col_duals;
  int pivots = 0;
};

namespace detail {

struct Cell {
  std::size_t i, j;
};

}  // namespace detail

/// Exact optimum of the balanced transportation problem by the transportation
/// simplex: northwest-corner start, dual pricing on the basis tree, loop
/// pivoting. Entering variable is the most negative reduced cost with
/// lowest-index tie-breaking; after a pivot budget it falls back to Bland's
/// rule, which cannot cycle. Desk-scale only (guarded).
inline LpSolution lp_transport_exact(const Vec& u, const Vec& v, const DenseMatrix& cost,
                                     std::size_t guard = 64) {
  const std::size_t nr = u.size(), nc = v.size();
  if (cost.rows() != nr || cost.cols() != nc) throw invalid_input("lp_transport_exact: shape mismatch");
  if (nr > guard || nc > guard)
    throw invalid_input("lp_transport_exact: instance exceeds desk-scale guard");
  if (std::abs(sum(u) - sum(v)) > 1e-9) throw invalid_input("lp_transport_exact: unbalanced marginals");
  instrument::counters().dense_ops += nr * nc;

  DenseMatrix x(nr, nc, 0.0);
  std::vector<std::vector<char>> basic(nr, std::vector<char>(nc, 0));

  // Northwest corner: always keep exactly nr+nc-1 basic cells (zeros allowed).
  {
    Vec ru = u, rv = v;
    std::size_t i = 0, j = 0;
    while (true) {
      const double q = std::min(ru[i], rv[j]);
      x(i, j) = q;
      basic[i][j] = 1;
      ru[i] -= q;
      rv[j] -= q;
      if (i + 1 == nr && j + 1 == nc) break;
      if (i + 1 == nr) ++j;
      else if (j + 1 == nc) ++i;
      else if (ru[i] <= rv[j]) ++i;
      else ++j;
    }
  }

  Vec du(nr), dv(nc);
  std::vector<char> du_set(nr), dv_set(nc);
  std::vector<std::vector<std::size_t>> row_cells(nr), col_cells(nc);

  const double scale = [&] {
    double mx = 1.0;
    for (double c : cost.data()) mx = std::max(mx, std::abs(c));
    return mx;
  }();
  const double eps = 1e-12 * scale;

  int pivots = 0;
  const int bland_after = 64 * static_cast<int>(nr + nc) * static_cast<int>(nr + nc);
  const int hard_cap = 4'000'000;

  while (true) {
    // duals from the basis tree, anchored at row 0
    std::fill(du_set.begin(), du_set.end(), 0);
    std::fill(dv_set.begin(), dv_set.end(), 0);
    for (auto& rc : row_cells) rc.clear();
    for (auto& cc : col_cells) cc.clear();
    for (std::size_t i = 0; i < nr; ++i)
      for (std::size_t j = 0; j < nc; ++j)
        if (basic[i][j]) {
          row_cells[i].push_back(j);
          col_cells[j].push_back(i);
        }
    du[0] = 0;
    du_set[0] = 1;
    // walk rows/cols alternately; basis is a spanning tree so this covers all
    std::vector<std::size_t> row_todo{0};
    std::vector<std::size_t> col_todo;
    while (!row_todo.empty() || !col_todo.empty()) {
      if (!row_todo.empty()) {
        std::size_t i = row_todo.back();
        row_todo.pop_back();
        for (std::size_t j : row_cells[i])
          if (!dv_set[j]) {
            dv[j] = cost(i, j) - du[i];
            dv_set[j] = 1;
            col_todo.push_back(j);
          }
      } else {
        std::size_t j = col_todo.back();
        col_todo.pop_back();
        for (std::size_t i : col_cells[j])
          if (!du_set[i]) {
            du[i] = cost(i, j) - dv[j];
            du_set[i] = 1;
            row_todo.push_back(i);
          }
      }
    }
    for (std::size_t i = 0; i < nr; ++i)
      if (!du_set[i]) throw numerical_error("lp_transport_exact: basis not spanning");
    for (std::size_t j = 0; j < nc; ++j)
      if (!dv_set[j]) throw numerical_error("lp_transport_exact: basis not spanning");

    // price nonbasic cells
    std::size_t bi = nr, bj = nc;
    double best = -eps;
    bool bland = pivots >= bland_after;
    for (std::size_t i = 0; i < nr && (bi == nr || !bland); ++i)
      for (std::size_t j = 0; j < nc; ++j) {
        if (basic[i][j]) continue;
        const double red = cost(i, j) - du[i] - dv[j];
        if (red < best) {
          best = red;
          bi = i;
          bj = j;
          if (bland) break;
        }
      }
    if (bi == nr) break;  // optimal

    // unique cycle through (bi,bj): path in the basis tree from row bi to col bj
    // found by depth-first search alternating row -> col -> row moves.
    std::vector<detail::Cell> cycle;
    {
      std::vector<detail::Cell> path;
      std::vector<char> row_vis(nr, 0), col_vis(nc, 0);
      row_vis[bi] = 1;
      // find path of basic cells r0=bi -> ... -> column bj
      std::function<bool(std::size_t)> from_row = [&](std::size_t i) -> bool {
        for (std::size_t j : row_cells[i]) {
          if (col_vis[j]) continue;
          col_vis[j] = 1;
          path.push_back({i, j});
          if (j == bj) return true;
          for (std::size_t i2 : col_cells[j]) {
            if (row_vis[i2]) continue;
            row_vis[i2] = 1;
            path.push_back({i2, j});
            if (from_row(i2)) return true;
            path.pop_back();
          }
          path.pop_back();
        }
        return false;
      };
      if (!from_row(bi)) throw numerical_error("lp_transport_exact: basis lost connectivity");
      cycle.push_back({bi, bj});
      cycle.insert(cycle.end(), path.begin(), path.end());
    }

    // alternate signs along the cycle; entering cell gets +
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave = 1;
    for (std::size_t k = 1; k < cycle.size(); k += 2) {
      const double q = x(cycle[k].i, cycle[k].j);
      if (q < theta - 1e-15 ||
          (q < theta + 1e-15 && (cycle[k].i < cycle[leave].i ||
                                 (cycle[k].i == cycle[leave].i && cycle[k].j < cycle[leave].j)))) {
        theta = q;
        leave = k;
      }
    }
    for (std::size_t k = 0; k < cycle.size(); ++k) {
      double& q = x(cycle[k].i, cycle[k].j);
      q += (k % 2 == 0) ? theta : -theta;
    }
    basic[cycle[leave].i][cycle[leave].j] = 0;
    x(cycle[leave].i, cycle[leave].j) = 0;
    basic[bi][bj] = 1;
    if (++pivots > hard_cap) throw numerical_error("lp_transport_exact: pivot cap exceeded");
  }

  LpSolution sol;
  sol.plan = x;
  sol.row_duals = du;
  sol.col_duals = dv;
  sol.pivots = pivots;
  double obj = 0;
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nc; ++j) obj += cost(i, j) * x(i, j);
  sol.objective = obj;
  return sol;
}

}  // namespace oracles
}  // namespace fastw1

#endif  // FASTW1_ORACLES_HPP
