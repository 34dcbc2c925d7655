#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "fastw1/data_io.hpp"
#include "fastw1/oracles.hpp"
#include "testutil.hpp"

using namespace fastw1;
using namespace fastw1::oracles;
using testutil::rel_err;

namespace {

Vec random_marginal(std::size_t n, std::mt19937_64& eng) {
  std::uniform_real_distribution<double> d(0.05, 1.0);
  Vec v(n);
  double s = 0;
  for (double& x : v) s += (x = d(eng));
  for (double& x : v) x /= s;
  return v;
}

}  // namespace

TEST_CASE("w1_1d_exact basics") {
  Vec u{0.5, 0.5, 0.0}, v{0.0, 0.5, 0.5};
  REQUIRE(w1_1d_exact(u, v, 1.0) == 1.0);
  REQUIRE(w1_1d_exact(u, u, 1.0) == 0.0);

  // point mass translated by k-1 nodes
  Vec a(6, 0.0), b(6, 0.0);
  a[0] = 1.0;
  b[4] = 1.0;
  REQUIRE(w1_1d_exact(a, b, 0.5) == 4 * 0.5);

  REQUIRE_THROWS_AS(w1_1d_exact(Vec{1.0, 0.0}, Vec{0.3, 0.3}, 1.0), invalid_input);
}

TEST_CASE("w1_1d_exact scale covariance") {
  std::mt19937_64 eng(1);
  Vec u = random_marginal(17, eng), v = random_marginal(17, eng);
  const double base = w1_1d_exact(u, v, 1.0);
  REQUIRE(rel_err(w1_1d_exact(u, v, 2.5), 2.5 * base) < 1e-14);
}

TEST_CASE("cost matrices") {
  DenseMatrix c = cost_matrix_1d(3, 1.0);
  const double want[3][3] = {{0, 1, 2}, {1, 0, 1}, {2, 1, 0}};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) REQUIRE(c(i, j) == want[i][j]);

  DenseMatrix c2 = cost_matrix_2d(2, 2, 1.0, 1.0);
  double mx = 0;
  for (double x : c2.data()) mx = std::max(mx, x);
  REQUIRE(mx == 2.0);  // opposite corners
  // exp(-C/delta) equals the dense kernel for matching lambdas
  const double delta = 0.8, h1 = 0.3, h2 = 0.5;
  DenseMatrix k = exp_neg_scaled(cost_matrix_2d(3, 3, h1, h2), delta);
  DenseMatrix kd = to_dense(kernel_2d(3, 3, std::exp(-h1 / delta), std::exp(-h2 / delta)));
  REQUIRE(testutil::max_rel_entrywise(k, kd) < 1e-14);
}

TEST_CASE("lp hand case: 2x2 cross transport") {
  Vec u{0.7, 0.3}, v{0.2, 0.8};
  DenseMatrix c(2, 2, 0.0);
  c(0, 1) = 1.0;
  c(1, 0) = 1.0;
  LpSolution s = lp_transport_exact(u, v, c);
  REQUIRE(s.objective == Catch::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("lp: identical marginals with zero-diagonal cost give zero") {
  std::mt19937_64 eng(2);
  Vec u = random_marginal(9, eng);
  DenseMatrix c = cost_matrix_1d(9, 1.0);
  LpSolution s = lp_transport_exact(u, u, c);
  REQUIRE(s.objective == Catch::Approx(0.0).margin(1e-12));
  for (std::size_t i = 0; i < 9; ++i) REQUIRE(s.plan(i, i) == Catch::Approx(u[i]).margin(1e-12));
}

TEST_CASE("lp agrees with the closed-form 1D oracle on random instances") {
  std::mt19937_64 eng(3);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + static_cast<std::size_t>(eng() % 31);
    Vec u = random_marginal(n, eng), v = random_marginal(n, eng);
    const double h = 0.25;
    LpSolution s = lp_transport_exact(u, v, cost_matrix_1d(n, h));
    const double cdf = w1_1d_exact(u, v, h);
    REQUIRE(std::abs(s.objective - cdf) < 1e-10);
  }
}

TEST_CASE("lp solution is feasible and satisfies complementary slackness") {
  std::mt19937_64 eng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 4 + static_cast<std::size_t>(eng() % 4);
    Vec u = random_marginal(n * n, eng), v = random_marginal(n * n, eng);
    DenseMatrix c = cost_matrix_2d(n, n, 0.7, 0.3);
    LpSolution s = lp_transport_exact(u, v, c);

    // marginals
    for (std::size_t i = 0; i < n * n; ++i) {
      double ru = 0, rv = 0;
      for (std::size_t j = 0; j < n * n; ++j) {
        ru += s.plan(i, j);
        rv += s.plan(j, i);
        REQUIRE(s.plan(i, j) >= -1e-15);
      }
      REQUIRE(ru == Catch::Approx(u[i]).margin(1e-10));
      REQUIRE(rv == Catch::Approx(v[i]).margin(1e-10));
    }
    // objective equals <C, plan>
    double obj = 0;
    for (std::size_t i = 0; i < n * n; ++i)
      for (std::size_t j = 0; j < n * n; ++j) obj += c(i, j) * s.plan(i, j);
    REQUIRE(rel_err(obj, s.objective) < 1e-12);
    // duals price every cell nonnegatively
    for (std::size_t i = 0; i < n * n; ++i)
      for (std::size_t j = 0; j < n * n; ++j)
        REQUIRE(c(i, j) - s.row_duals[i] - s.col_duals[j] >= -1e-9);
  }
}

TEST_CASE("lp guard and validation") {
  Vec u(100, 0.01), v(100, 0.01);
  REQUIRE_THROWS_AS(lp_transport_exact(u, v, DenseMatrix(100, 100, 1.0)), invalid_input);
  REQUIRE_THROWS_AS(lp_transport_exact(Vec{0.6, 0.4}, Vec{0.5, 0.4}, DenseMatrix(2, 2, 1.0)),
                    invalid_input);
}

TEST_CASE("lp handles degenerate equal marginals with ties") {
  // many zero-allocation pivots: uniform marginals, asymmetric cost
  const std::size_t n = 8;
  Vec u(n, 1.0 / n), v(n, 1.0 / n);
  std::mt19937_64 eng(5);
  DenseMatrix c(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      c(i, j) = static_cast<double>((eng() >> 40) % 16);
  LpSolution s = lp_transport_exact(u, v, c);
  // optimum is at least the row-minimum bound
  double lower = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double mi = c(i, 0);
    for (std::size_t j = 1; j < n; ++j) mi = std::min(mi, c(i, j));
    lower += mi / n;
  }
  REQUIRE(s.objective >= lower - 1e-12);
}
