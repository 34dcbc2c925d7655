#ifndef FASTW1_SOLVERS_HPP
#define FASTW1_SOLVERS_HPP

#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <variant>

#include "fastw1/colt.hpp"
#include "fastw1/colt_block.hpp"
#include "fastw1/common.hpp"
#include "fastw1/dense.hpp"
#include "fastw1/w1_cost.hpp"

namespace fastw1 {

struct Problem1D {
  Vec u, v;
  double h = 1.0;      // grid spacing
  double delta = 1.0;  // proximal regularization
  int inner_iters = 20;
  int outer_iters = 500;
};

struct Problem2D {
  Vec u, v;                  // length n*m, column-major grid order
  std::size_t n = 0, m = 0;  // n nodes per column block, m blocks
  double h1 = 1.0, h2 = 1.0;
  double delta = 1.0;
  int inner_iters = 20;
  int outer_iters = 500;
};

struct TraceRow {
  int iteration = 0;  // outer index for proximal solvers, sweep index for entropic ones
  double w1 = 0;
  double residual_u = 0;  // ||plan 1 - u||_1
  double residual_v = 0;  // ||plan^T 1 - v||_1
  double seconds = 0;     // cumulative wall time
};

using ConvergenceTrace = std::vector<TraceRow>;

using TransportPlan = std::variant<DenseMatrix, Colt, BlockColt>;

inline DenseMatrix plan_to_dense(const TransportPlan& p, std::size_t guard = kDenseGuard) {
  if (std::holds_alternative<DenseMatrix>(p)) return std::get<DenseMatrix>(p);
  if (std::holds_alternative<Colt>(p)) return to_dense(std::get<Colt>(p), guard);
  return to_dense(std::get<BlockColt>(p), guard);
}

/// Outer-index -> regularization hook. Constant by default.
inline std::function<double(int)> constant_delta(double delta) {
  return [delta](int) { return delta; };
}

/// Default proximal regularization schedule: constant 1.
inline double proximal_schedule(int) { return 1.0; }

namespace detail {

inline void validate_marginals(const Vec& u, const Vec& v, bool strictly_positive) {
  if (u.size() != v.size() || u.size() < 2) throw invalid_input("marginals: bad sizes");
  if (std::abs(sum(u) - 1.0) > 1e-9 || std::abs(sum(v) - 1.0) > 1e-9)
    throw invalid_input("marginals must sum to 1");
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] < 0 || v[i] < 0) throw invalid_input("marginals must be nonnegative");
    if (strictly_positive && (u[i] == 0 || v[i] == 0))
      throw invalid_input("marginals must be strictly positive (rescale first)");
  }
}

inline void validate(const Problem1D& p, bool strictly_positive = false) {
  validate_marginals(p.u, p.v, strictly_positive);
  if (!(p.h > 0) || !(p.delta > 0)) throw invalid_input("need h > 0 and delta > 0");
  if (p.inner_iters < 1 || p.outer_iters < 1) throw invalid_input("need L, itr_max >= 1");
}

inline void validate(const Problem2D& p, bool strictly_positive = false) {
  if (p.n < 2 || p.m < 1 || p.u.size() != p.n * p.m)
    throw invalid_input("Problem2D: bad grid shape");
  validate_marginals(p.u, p.v, strictly_positive);
  if (!(p.h1 > 0) || !(p.h2 > 0) || !(p.delta > 0)) throw invalid_input("need h > 0 and delta > 0");
  if (p.inner_iters < 1 || p.outer_iters < 1) throw invalid_input("need L, itr_max >= 1");
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void check_finite(const Vec& x, const char* who, int iteration) {
  if (!all_finite(x))
    throw numerical_error(std::string(who) + ": non-finite value at iteration " +
                          std::to_string(iteration));
}

// Gauge normalization shared by the entropic solvers: rescales (phi, psi) ->
// (t*phi, psi/t), which leaves the plan diag(phi) K diag(psi) unchanged while
// keeping both factors inside double range for small epsilon.
inline void rebalance(Vec& phi, Vec& psi) {
  double mp = 0, mq = 0;
  for (double x : phi) mp = std::max(mp, std::abs(x));
  for (double x : psi) mq = std::max(mq, std::abs(x));
  if (!(mp > 0) || !(mq > 0)) return;
  const double t = std::sqrt(mq / mp);
  for (double& x : phi) x *= t;
  for (double& x : psi) x /= t;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Entropic solvers (Sinkhorn baseline and its O(N) kernel-structured twin)
// ---------------------------------------------------------------------------

struct SinkhornOptions {
  bool record_trace = true;
  int trace_every = 1;  // evaluate the W1 estimate every k sweeps
};

struct DenseSolveResult {
  double w1 = 0;
  DenseMatrix plan;
  ConvergenceTrace trace;
};

/// Alternating scaling on the dense kernel exp(-cost/epsilon).
inline DenseSolveResult sinkhorn_dense(const Vec& u, const Vec& v, const DenseMatrix& cost,
                                       double epsilon, int iters,
                                       const SinkhornOptions& opt = {}) {
  detail::validate_marginals(u, v, false);
  if (!(epsilon > 0) || iters < 1) throw invalid_input("sinkhorn_dense: bad parameters");
  const std::size_t n = u.size();
  if (cost.rows() != n || cost.cols() != n) throw invalid_input("sinkhorn_dense: shape mismatch");
  const DenseMatrix kernel = exp_neg_scaled(cost, epsilon);

  detail::Stopwatch clock;
  Vec phi(n, 1.0 / static_cast<double>(n)), psi = phi;
  DenseSolveResult res;
  for (int it = 1; it <= iters; ++it) {
    Vec r = matvec_transpose(kernel, phi);
    for (std::size_t i = 0; i < n; ++i) {
      if (r[i] == 0) throw numerical_error("sinkhorn_dense: zero column sum (unreachable mass)");
      psi[i] = v[i] / r[i];
    }
    Vec s = matvec(kernel, psi);
    for (std::size_t i = 0; i < n; ++i) {
      if (s[i] == 0) throw numerical_error("sinkhorn_dense: zero row sum (unreachable mass)");
      phi[i] = u[i] / s[i];
    }
    detail::rebalance(phi, psi);
    if (it % 64 == 0 || it == iters) {
      detail::check_finite(phi, "sinkhorn_dense", it);
      detail::check_finite(psi, "sinkhorn_dense", it);
    }
    if (opt.record_trace && (it % opt.trace_every == 0 || it == iters)) {
      DenseMatrix plan = scale_rows(phi, scale_cols(kernel, psi));
      Vec mu = matvec(plan, Vec(n, 1.0));
      Vec mv = matvec_transpose(plan, Vec(n, 1.0));
      double ru = 0, rv = 0;
      for (std::size_t i = 0; i < n; ++i) {
        ru += std::abs(mu[i] - u[i]);
        rv += std::abs(mv[i] - v[i]);
      }
      res.trace.push_back({it, w1_dense(cost, plan), ru, rv, clock.seconds()});
    }
  }
  res.plan = scale_rows(phi, scale_cols(kernel, psi));
  res.w1 = w1_dense(cost, res.plan);
  return res;
}

struct Fs1Result {
  double w1 = 0;
  Vec phi, psi;  // plan = diag(phi) K diag(psi), K the grid kernel
  ConvergenceTrace trace;
};

/// Entropic Sinkhorn where every kernel product runs through the structured
/// representation: O(N) per sweep.
inline Fs1Result fs1_1d(const Problem1D& p, double epsilon, int iters,
                        const SinkhornOptions& opt = {}) {
  detail::validate(p);
  if (!(epsilon > 0) || iters < 1) throw invalid_input("fs1_1d: bad parameters");
  const std::size_t n = p.u.size();
  const double lambda = std::exp(-p.h / epsilon);
  const Colt kernel = kernel_1d(n, lambda);

  detail::Stopwatch clock;
  Fs1Result res;
  res.phi.assign(n, 1.0 / static_cast<double>(n));
  res.psi = res.phi;
  Vec r(n), s(n);
  const Vec ones(n, 1.0);
  for (int it = 1; it <= iters; ++it) {
    // the kernel is symmetric, so K^T phi = K phi
    detail::cmv_into(kernel.lower.diag, kernel.lower.ratios, kernel.upper.sup,
                     kernel.upper.ratios, res.phi, r);
    for (std::size_t i = 0; i < n; ++i) {
      if (r[i] == 0) throw numerical_error("fs1_1d: zero column sum (unreachable mass)");
      res.psi[i] = p.v[i] / r[i];
    }
    detail::cmv_into(kernel.lower.diag, kernel.lower.ratios, kernel.upper.sup,
                     kernel.upper.ratios, res.psi, s);
    for (std::size_t i = 0; i < n; ++i) {
      if (s[i] == 0) throw numerical_error("fs1_1d: zero row sum (unreachable mass)");
      res.phi[i] = p.u[i] / s[i];
    }
    detail::rebalance(res.phi, res.psi);
    if (it % 64 == 0 || it == iters) {
      detail::check_finite(res.phi, "fs1_1d", it);
      detail::check_finite(res.psi, "fs1_1d", it);
    }
    if (opt.record_trace && (it % opt.trace_every == 0 || it == iters)) {
      Colt plan = scale_rows(res.phi, scale_cols(kernel, res.psi));
      Vec mu = cmv(plan, ones);
      Vec mv = cmv_transpose(plan, ones);
      double ru = 0, rv = 0;
      for (std::size_t i = 0; i < n; ++i) {
        ru += std::abs(mu[i] - p.u[i]);
        rv += std::abs(mv[i] - p.v[i]);
      }
      res.trace.push_back({it, w1_colt(plan, p.h), ru, rv, clock.seconds()});
    }
  }
  res.w1 = w1_colt(scale_rows(res.phi, scale_cols(kernel, res.psi)), p.h);
  return res;
}

/// 2D variant of fs1_1d on the block kernel: O(NM) per sweep.
inline Fs1Result fs1_2d(const Problem2D& p, double epsilon, int iters,
                        const SinkhornOptions& opt = {}) {
  detail::validate(p);
  if (!(epsilon > 0) || iters < 1) throw invalid_input("fs1_2d: bad parameters");
  if (p.m < 2) throw invalid_input("fs1_2d: need m >= 2 (use fs1_1d)");
  const std::size_t dim = p.u.size();
  const BlockColt kernel =
      kernel_2d(p.n, p.m, std::exp(-p.h1 / epsilon), std::exp(-p.h2 / epsilon));

  detail::Stopwatch clock;
  Fs1Result res;
  res.phi.assign(dim, 1.0 / static_cast<double>(dim));
  res.psi = res.phi;
  const Vec ones(dim, 1.0);
  for (int it = 1; it <= iters; ++it) {
    Vec r = block_cmv(kernel, res.phi);  // symmetric kernel
    for (std::size_t i = 0; i < dim; ++i) {
      if (r[i] == 0) throw numerical_error("fs1_2d: zero column sum (unreachable mass)");
      res.psi[i] = p.v[i] / r[i];
    }
    Vec s = block_cmv(kernel, res.psi);
    for (std::size_t i = 0; i < dim; ++i) {
      if (s[i] == 0) throw numerical_error("fs1_2d: zero row sum (unreachable mass)");
      res.phi[i] = p.u[i] / s[i];
    }
    detail::rebalance(res.phi, res.psi);
    if (it % 64 == 0 || it == iters) {
      detail::check_finite(res.phi, "fs1_2d", it);
      detail::check_finite(res.psi, "fs1_2d", it);
    }
    if (opt.record_trace && (it % opt.trace_every == 0 || it == iters)) {
      BlockColt plan = block_scale_rows(res.phi, block_scale_cols(kernel, res.psi));
      Vec mu = block_cmv(plan, ones);
      Vec mv = block_cmv_transpose(plan, ones);
      double ru = 0, rv = 0;
      for (std::size_t i = 0; i < dim; ++i) {
        ru += std::abs(mu[i] - p.u[i]);
        rv += std::abs(mv[i] - p.v[i]);
      }
      res.trace.push_back({it, w1_block_colt(plan, p.h1, p.h2), ru, rv, clock.seconds()});
    }
  }
  res.w1 = w1_block_colt(block_scale_rows(res.phi, block_scale_cols(kernel, res.psi)), p.h1, p.h2);
  return res;
}

// ---------------------------------------------------------------------------
// Proximal point solvers
// ---------------------------------------------------------------------------

struct IpotOptions {
  std::function<double(int)> delta_schedule;  // 1-based outer index -> delta
  double early_stop_tol = -1.0;               // stop when ||plan^T 1 - v||_1 <= tol
  bool record_trace = true;
  std::function<void(int, const DenseMatrix&)> plan_observer;  // after each outer step
};

/// Proximal point iteration with dense storage: outer steps damp the running
/// plan by the kernel, inner Sinkhorn-type sweeps restore the marginals.
inline DenseSolveResult ipot_dense(const Vec& u, const Vec& v, const DenseMatrix& cost,
                                   double delta, int inner_iters, int outer_iters,
                                   const IpotOptions& opt = {}) {
  detail::validate_marginals(u, v, false);
  if (!(delta > 0) || inner_iters < 1 || outer_iters < 1)
    throw invalid_input("ipot_dense: bad parameters");
  const std::size_t n = u.size();
  if (cost.rows() != n || cost.cols() != n) throw invalid_input("ipot_dense: shape mismatch");
  const auto schedule = opt.delta_schedule ? opt.delta_schedule : constant_delta(delta);

  detail::Stopwatch clock;
  double cur_delta = schedule(1);
  DenseMatrix kernel = exp_neg_scaled(cost, cur_delta);
  DenseMatrix plan(n, n, 1.0);  // 1 1^T
  Vec phi(n, 1.0 / static_cast<double>(n)), psi = phi;
  const Vec ones(n, 1.0);

  DenseSolveResult res;
  for (int t = 1; t <= outer_iters; ++t) {
    const double dt = schedule(t);
    if (dt != cur_delta) {
      cur_delta = dt;
      kernel = exp_neg_scaled(cost, cur_delta);
    }
    DenseMatrix q = hadamard(kernel, plan);
    for (int l = 0; l < inner_iters; ++l) {
      Vec r = matvec_transpose(q, phi);
      for (std::size_t i = 0; i < n; ++i) {
        if (r[i] == 0) throw numerical_error("ipot_dense: division by zero in scaling");
        psi[i] = v[i] / r[i];
      }
      Vec s = matvec(q, psi);
      for (std::size_t i = 0; i < n; ++i) {
        if (s[i] == 0) throw numerical_error("ipot_dense: division by zero in scaling");
        phi[i] = u[i] / s[i];
      }
    }
    plan = scale_rows(phi, scale_cols(q, psi));
    detail::check_finite(plan.data(), "ipot_dense", t);

    double rv = 0;
    if (opt.record_trace || opt.early_stop_tol >= 0) {
      Vec mu = matvec(plan, ones);
      Vec mv = matvec_transpose(plan, ones);
      double ru = 0;
      for (std::size_t i = 0; i < n; ++i) {
        ru += std::abs(mu[i] - u[i]);
        rv += std::abs(mv[i] - v[i]);
      }
      if (opt.record_trace) res.trace.push_back({t, w1_dense(cost, plan), ru, rv, clock.seconds()});
    }
    if (opt.plan_observer) opt.plan_observer(t, plan);
    if (opt.early_stop_tol >= 0 && rv <= opt.early_stop_tol) break;
  }
  res.plan = plan;
  res.w1 = w1_dense(cost, res.plan);
  return res;
}

// ---------------------------------------------------------------------------
// FS-2: the proximal iteration carried entirely on representations
// ---------------------------------------------------------------------------

// State of the implicit iteration. q_* are the coefficients of Q = K (.) plan;
// qt_* those of Q^T. Q is not symmetric once phi != psi, so the transpose
// carries its own superdiagonal (the subdiagonal of Q) and ratio vectors;
// both sides share the diagonal.
struct Fs2State1D {
  double lambda = 0;
  Vec phi, psi;
  Vec q_diag, q_lower_ratios, q_sup, q_upper_ratios;
  Vec qt_lower_ratios, qt_sup, qt_upper_ratios;

  Colt q() const { return Colt{{q_diag, q_lower_ratios}, {q_sup, q_upper_ratios}}; }
  Colt q_transpose() const { return Colt{{q_diag, qt_lower_ratios}, {qt_sup, qt_upper_ratios}}; }
};

struct Fs2Result1D {
  double w1 = 0;
  Colt plan;
  Fs2State1D state;
  ConvergenceTrace trace;
};

struct Fs2Options1D {
  std::function<double(int)> delta_schedule;
  double early_stop_tol = -1.0;
  bool record_trace = true;
  std::function<void(int, const Colt&)> plan_observer;
  std::function<void(int, const Fs2State1D&)> state_observer;
};

inline Fs2Result1D fs2_1d(const Problem1D& p, const Fs2Options1D& opt = {}) {
  detail::validate(p, /*strictly_positive=*/true);
  const std::size_t n = p.u.size();
  const auto schedule = opt.delta_schedule ? opt.delta_schedule : constant_delta(p.delta);
  const auto lambda_for = [&](int t) {
    const double d = schedule(t);
    if (!(d > 0)) throw invalid_input("fs2_1d: schedule produced nonpositive delta");
    return std::exp(-p.h / d);
  };

  detail::Stopwatch clock;
  Fs2State1D st;
  st.lambda = lambda_for(1);
  st.phi.assign(n, 1.0 / static_cast<double>(n));
  st.psi = st.phi;
  st.q_diag.assign(n, 1.0);
  st.q_lower_ratios.assign(n - 1, st.lambda);
  st.q_sup.assign(n - 1, st.lambda);
  st.q_upper_ratios.assign(n >= 2 ? n - 2 : 0, st.lambda);
  st.qt_lower_ratios = st.q_lower_ratios;
  st.qt_sup = st.q_sup;
  st.qt_upper_ratios = st.q_upper_ratios;

  Vec r(n), s(n);
  const Vec ones(n, 1.0);
  Colt plan;
  plan.lower.diag.resize(n);
  plan.lower.ratios.resize(n - 1);
  plan.upper.sup.resize(n - 1);
  plan.upper.ratios.resize(n >= 2 ? n - 2 : 0);

  Fs2Result1D res;
  for (int t = 1; t <= p.outer_iters; ++t) {
    for (int l = 0; l < p.inner_iters; ++l) {
      detail::cmv_into(st.q_diag, st.qt_lower_ratios, st.qt_sup, st.qt_upper_ratios, st.phi, r);
      for (std::size_t i = 0; i < n; ++i) {
        if (r[i] == 0) throw numerical_error("fs2_1d: zero scaling denominator");
        st.psi[i] = p.v[i] / r[i];
      }
      detail::cmv_into(st.q_diag, st.q_lower_ratios, st.q_sup, st.q_upper_ratios, st.psi, s);
      for (std::size_t i = 0; i < n; ++i) {
        if (s[i] == 0) throw numerical_error("fs2_1d: zero scaling denominator");
        st.phi[i] = p.u[i] / s[i];
      }
    }
    detail::check_finite(st.phi, "fs2_1d", t);
    detail::check_finite(st.psi, "fs2_1d", t);

    // plan = diag(phi) Q diag(psi), assembled on the representation
    for (std::size_t i = 0; i < n; ++i) plan.lower.diag[i] = st.phi[i] * st.q_diag[i] * st.psi[i];
    for (std::size_t i = 0; i + 1 < n; ++i) {
      plan.lower.ratios[i] = st.q_lower_ratios[i] * st.phi[i + 1] / st.phi[i];
      plan.upper.sup[i] = st.phi[i] * st.q_sup[i] * st.psi[i + 1];
    }
    for (std::size_t i = 0; i + 2 < n; ++i)
      plan.upper.ratios[i] = st.q_upper_ratios[i] * st.phi[i] / st.phi[i + 1];

    double rv = 0;
    if (opt.record_trace || opt.early_stop_tol >= 0) {
      // row marginal is enforced exactly by the phi-update; column residual
      // needs one fresh transpose product
      detail::cmv_into(st.q_diag, st.qt_lower_ratios, st.qt_sup, st.qt_upper_ratios, st.phi, r);
      double ru = 0;
      for (std::size_t i = 0; i < n; ++i) {
        ru += std::abs(st.phi[i] * s[i] - p.u[i]);
        rv += std::abs(st.psi[i] * r[i] - p.v[i]);
      }
      if (opt.record_trace)
        res.trace.push_back({t, w1_colt(plan, p.h), ru, rv, clock.seconds()});
    }
    if (opt.plan_observer) opt.plan_observer(t, plan);
    if (opt.state_observer) opt.state_observer(t, st);
    if (opt.early_stop_tol >= 0 && rv <= opt.early_stop_tol) break;

    // Q <- K (.) plan and its transpose, both on coefficients
    const double lam = lambda_for(t + 1);
    st.lambda = lam;
    st.q_diag = plan.lower.diag;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      st.q_lower_ratios[i] = lam * plan.lower.ratios[i];
      st.q_sup[i] = lam * plan.upper.sup[i];
      st.qt_lower_ratios[i] *= lam * st.psi[i + 1] / st.psi[i];
      st.qt_sup[i] *= lam * st.phi[i + 1] * st.psi[i];
    }
    for (std::size_t i = 0; i + 2 < n; ++i) {
      st.q_upper_ratios[i] = lam * plan.upper.ratios[i];
      st.qt_upper_ratios[i] *= lam * st.psi[i] / st.psi[i + 1];
    }
  }
  res.w1 = w1_colt(plan, p.h);
  res.plan = plan;
  res.state = std::move(st);
  return res;
}

/// 2D FS-2 state: per-column-block coefficients of Q's diagonal blocks (and
/// their transposes) plus the block-level ratio vectors.
struct Fs2State2D {
  double lambda1 = 0, lambda2 = 0;
  Vec phi, psi;
  std::vector<Vec> q_diag, q_lower_ratios, q_sup, q_upper_ratios;  // per block
  std::vector<Vec> qt_lower_ratios, qt_sup, qt_upper_ratios;
  std::vector<Vec> block_lower, block_upper;      // ratio vectors of Q (M-1 x N)
  std::vector<Vec> block_lower_t, block_upper_t;  // ratio vectors of Q^T

  BlockColt q() const {
    BlockColt b;
    b.inner = q_diag.empty() ? 0 : q_diag[0].size();
    for (std::size_t k = 0; k < q_diag.size(); ++k)
      b.blocks.push_back(Colt{{q_diag[k], q_lower_ratios[k]}, {q_sup[k], q_upper_ratios[k]}});
    b.lower_ratios = block_lower;
    b.upper_ratios = block_upper;
    return b;
  }
  BlockColt q_transpose() const {
    BlockColt b;
    b.inner = q_diag.empty() ? 0 : q_diag[0].size();
    for (std::size_t k = 0; k < q_diag.size(); ++k)
      b.blocks.push_back(Colt{{q_diag[k], qt_lower_ratios[k]}, {qt_sup[k], qt_upper_ratios[k]}});
    b.lower_ratios = block_lower_t;
    b.upper_ratios = block_upper_t;
    return b;
  }
};

struct Fs2Result2D {
  double w1 = 0;
  BlockColt plan;
  Fs2State2D state;
  ConvergenceTrace trace;
};

struct Fs2Options2D {
  std::function<double(int)> delta_schedule;
  double early_stop_tol = -1.0;
  bool record_trace = true;
  std::function<void(int, const BlockColt&)> plan_observer;
  std::function<void(int, const Fs2State2D&)> state_observer;
};

inline Fs2Result2D fs2_2d(const Problem2D& p, const Fs2Options2D& opt = {}) {
  detail::validate(p, /*strictly_positive=*/true);
  const std::size_t n = p.n, m = p.m, dim = n * m;
  const auto schedule = opt.delta_schedule ? opt.delta_schedule : constant_delta(p.delta);
  const auto lambdas_for = [&](int t) {
    const double d = schedule(t);
    if (!(d > 0)) throw invalid_input("fs2_2d: schedule produced nonpositive delta");
    return std::pair<double, double>{std::exp(-p.h1 / d), std::exp(-p.h2 / d)};
  };

  detail::Stopwatch clock;
  Fs2State2D st;
  std::tie(st.lambda1, st.lambda2) = lambdas_for(1);
  st.phi.assign(dim, 1.0 / static_cast<double>(dim));
  st.psi = st.phi;
  st.q_diag.assign(m, Vec(n, 1.0));
  st.q_lower_ratios.assign(m, Vec(n - 1, st.lambda1));
  st.q_sup.assign(m, Vec(n - 1, st.lambda1));
  st.q_upper_ratios.assign(m, Vec(n >= 2 ? n - 2 : 0, st.lambda1));
  st.qt_lower_ratios = st.q_lower_ratios;
  st.qt_sup = st.q_sup;
  st.qt_upper_ratios = st.q_upper_ratios;
  st.block_lower.assign(m >= 1 ? m - 1 : 0, Vec(n, st.lambda2));
  st.block_upper = st.block_lower;
  st.block_lower_t = st.block_lower;
  st.block_upper_t = st.block_lower;

  // work buffers
  std::vector<Vec> tk(m, Vec(n));
  Vec acc(n), out(dim), s_saved(dim);
  const Vec ones(n, 1.0);

  // out <- A x where A has the given per-block and block-level coefficients
  const auto block_apply = [&](const std::vector<Vec>& diag, const std::vector<Vec>& lr,
                               const std::vector<Vec>& sup, const std::vector<Vec>& ur,
                               const std::vector<Vec>& bl, const std::vector<Vec>& bu,
                               const Vec& x) {
    for (std::size_t k = 0; k < m; ++k) {
      Vec xk(x.begin() + k * n, x.begin() + (k + 1) * n);
      detail::cmv_into(diag[k], lr[k], sup[k], ur[k], xk, tk[k]);
    }
    acc = tk[0];
    std::copy(acc.begin(), acc.end(), out.begin());
    for (std::size_t k = 1; k < m; ++k) {
      for (std::size_t i = 0; i < n; ++i) acc[i] = bl[k - 1][i] * acc[i] + tk[k][i];
      std::copy(acc.begin(), acc.end(), out.begin() + k * n);
    }
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t k = m; k-- > 1;) {
      for (std::size_t i = 0; i < n; ++i) acc[i] = bu[k - 1][i] * (acc[i] + tk[k][i]);
      for (std::size_t i = 0; i < n; ++i) out[(k - 1) * n + i] += acc[i];
    }
  };

  BlockColt plan;
  plan.inner = n;
  plan.blocks.assign(m, Colt{{Vec(n), Vec(n - 1)}, {Vec(n - 1), Vec(n >= 2 ? n - 2 : 0)}});
  plan.lower_ratios.assign(m >= 1 ? m - 1 : 0, Vec(n));
  plan.upper_ratios = plan.lower_ratios;

  Fs2Result2D res;
  for (int t = 1; t <= p.outer_iters; ++t) {
    for (int l = 0; l < p.inner_iters; ++l) {
      block_apply(st.q_diag, st.qt_lower_ratios, st.qt_sup, st.qt_upper_ratios, st.block_lower_t,
                  st.block_upper_t, st.phi);
      for (std::size_t i = 0; i < dim; ++i) {
        if (out[i] == 0) throw numerical_error("fs2_2d: zero scaling denominator");
        st.psi[i] = p.v[i] / out[i];
      }
      block_apply(st.q_diag, st.q_lower_ratios, st.q_sup, st.q_upper_ratios, st.block_lower,
                  st.block_upper, st.psi);
      s_saved = out;
      for (std::size_t i = 0; i < dim; ++i) {
        if (out[i] == 0) throw numerical_error("fs2_2d: zero scaling denominator");
        st.phi[i] = p.u[i] / out[i];
      }
    }
    detail::check_finite(st.phi, "fs2_2d", t);
    detail::check_finite(st.psi, "fs2_2d", t);

    // plan = diag(phi) Q diag(psi)
    for (std::size_t k = 0; k < m; ++k) {
      Colt& b = plan.blocks[k];
      const double* ph = st.phi.data() + k * n;
      const double* ps = st.psi.data() + k * n;
      for (std::size_t i = 0; i < n; ++i) b.lower.diag[i] = ph[i] * st.q_diag[k][i] * ps[i];
      for (std::size_t i = 0; i + 1 < n; ++i) {
        b.lower.ratios[i] = st.q_lower_ratios[k][i] * ph[i + 1] / ph[i];
        b.upper.sup[i] = ph[i] * st.q_sup[k][i] * ps[i + 1];
      }
      for (std::size_t i = 0; i + 2 < n; ++i)
        b.upper.ratios[i] = st.q_upper_ratios[k][i] * ph[i] / ph[i + 1];
    }
    for (std::size_t k = 0; k + 1 < m; ++k)
      for (std::size_t i = 0; i < n; ++i) {
        plan.lower_ratios[k][i] =
            st.block_lower[k][i] * st.phi[(k + 1) * n + i] / st.phi[k * n + i];
        plan.upper_ratios[k][i] =
            st.block_upper[k][i] * st.phi[k * n + i] / st.phi[(k + 1) * n + i];
      }

    double rv = 0;
    if (opt.record_trace || opt.early_stop_tol >= 0) {
      block_apply(st.q_diag, st.qt_lower_ratios, st.qt_sup, st.qt_upper_ratios, st.block_lower_t,
                  st.block_upper_t, st.phi);
      double ru = 0;
      for (std::size_t i = 0; i < dim; ++i) {
        ru += std::abs(st.phi[i] * s_saved[i] - p.u[i]);
        rv += std::abs(st.psi[i] * out[i] - p.v[i]);
      }
      if (opt.record_trace)
        res.trace.push_back({t, w1_block_colt(plan, p.h1, p.h2), ru, rv, clock.seconds()});
    }
    if (opt.plan_observer) opt.plan_observer(t, plan);
    if (opt.state_observer) opt.state_observer(t, st);
    if (opt.early_stop_tol >= 0 && rv <= opt.early_stop_tol) break;

    const auto [lam1, lam2] = lambdas_for(t + 1);
    st.lambda1 = lam1;
    st.lambda2 = lam2;
    for (std::size_t k = 0; k < m; ++k) {
      const double* ph = st.phi.data() + k * n;
      const double* ps = st.psi.data() + k * n;
      st.q_diag[k] = plan.blocks[k].lower.diag;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        st.q_lower_ratios[k][i] = lam1 * plan.blocks[k].lower.ratios[i];
        st.q_sup[k][i] = lam1 * plan.blocks[k].upper.sup[i];
        st.qt_lower_ratios[k][i] *= lam1 * ps[i + 1] / ps[i];
        st.qt_sup[k][i] *= lam1 * ph[i + 1] * ps[i];
      }
      for (std::size_t i = 0; i + 2 < n; ++i) {
        st.q_upper_ratios[k][i] = lam1 * plan.blocks[k].upper.ratios[i];
        st.qt_upper_ratios[k][i] *= lam1 * ps[i] / ps[i + 1];
      }
    }
    for (std::size_t k = 0; k + 1 < m; ++k)
      for (std::size_t i = 0; i < n; ++i) {
        st.block_lower[k][i] = lam2 * plan.lower_ratios[k][i];
        st.block_upper[k][i] = lam2 * plan.upper_ratios[k][i];
        st.block_lower_t[k][i] *= lam2 * st.psi[(k + 1) * n + i] / st.psi[k * n + i];
        st.block_upper_t[k][i] *= lam2 * st.psi[k * n + i] / st.psi[(k + 1) * n + i];
      }
  }
  res.w1 = w1_block_colt(plan, p.h1, p.h2);
  res.plan = plan;
  res.state = std::move(st);
  return res;
}

}  // namespace fastw1

#endif  // FASTW1_SOLVERS_HPP
