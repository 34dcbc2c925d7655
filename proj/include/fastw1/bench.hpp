#ifndef FASTW1_BENCH_HPP
#define FASTW1_BENCH_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fastw1/common.hpp"
#include "fastw1/data_io.hpp"
#include "fastw1/oracles.hpp"
#include "fastw1/solvers.hpp"

namespace fastw1 {
namespace bench {

enum class ProblemKind { gaussian1d, random2d, images };
enum class SolverKind { sinkhorn, fs1, ipot, fs2 };

inline const char* to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::gaussian1d: return "gaussian1d";
    case ProblemKind::random2d: return "random2d";
    default: return "images";
  }
}

inline const char* to_string(SolverKind k) {
  switch (k) {
    case SolverKind::sinkhorn: return "sinkhorn";
    case SolverKind::fs1: return "fs1";
    case SolverKind::ipot: return "ipot";
    default: return "fs2";
  }
}

inline ProblemKind problem_from_string(const std::string& s) {
  if (s == "gaussian1d") return ProblemKind::gaussian1d;
  if (s == "random2d") return ProblemKind::random2d;
  if (s == "images") return ProblemKind::images;
  throw invalid_input("unknown problem kind: " + s);
}

inline SolverKind solver_from_string(const std::string& s) {
  if (s == "sinkhorn") return SolverKind::sinkhorn;
  if (s == "fs1") return SolverKind::fs1;
  if (s == "ipot") return SolverKind::ipot;
  if (s == "fs2") return SolverKind::fs2;
  throw invalid_input("unknown solver: " + s);
}

struct ExperimentConfig {
  ProblemKind problem = ProblemKind::gaussian1d;
  std::vector<std::size_t> sizes;  // N for 1D, grid side for 2D kinds
  std::vector<SolverKind> solvers;
  std::vector<double> epsilons = {0.05};  // entropic solvers run once per epsilon
  double delta = 1.0;
  int inner_iters = 20;
  int outer_iters = 500;
  std::uint64_t seed = 0;
  int repetitions = 1;
  double eta = 1e-5;
  std::string out_dir;
  bool timing = false;  // sequential cells, no traces, no dense work in timed regions
  std::string image_a, image_b;
};

struct TimingRecord {
  std::string solver;
  double epsilon = std::numeric_limits<double>::quiet_NaN();  // NaN for proximal solvers
  std::size_t size = 0;
  std::size_t points = 0;
  int repetitions = 1;
  double median_seconds = 0;
  double mean_seconds = 0;
  double w1 = std::numeric_limits<double>::quiet_NaN();
  double oracle_error = std::numeric_limits<double>::quiet_NaN();  // relative, when an oracle applies
  double plan_frobenius_vs_ref = std::numeric_limits<double>::quiet_NaN();
  double speedup_vs_ipot = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";
};

/// Least-squares fit of log(time) against log(size).
struct FitResult {
  double slope = 0, intercept = 0, r2 = 0;
};

inline FitResult fit_complexity(const std::vector<double>& sizes,
                                const std::vector<double>& times) {
  if (sizes.size() != times.size() || sizes.size() < 3)
    throw invalid_input("fit_complexity: need at least 3 matching points");
  const std::size_t n = sizes.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(sizes[i] > 0) || !(times[i] > 0))
      throw invalid_input("fit_complexity: sizes and times must be positive");
    const double x = std::log(sizes[i]), y = std::log(times[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double dn = static_cast<double>(n);
  const double denom = dn * sxx - sx * sx;
  if (denom == 0) throw invalid_input("fit_complexity: degenerate abscissas");
  FitResult f;
  f.slope = (dn * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / dn;
  double ss_res = 0;
  const double mean_y = sy / dn;
  double ss_tot = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = std::log(times[i]);
    const double fit = f.intercept + f.slope * std::log(sizes[i]);
    ss_res += (y - fit) * (y - fit);
    ss_tot += (y - mean_y) * (y - mean_y);
  }
  f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

/// Frobenius norm of the difference; implicit plans are densified under the guard.
inline double compare_plans(const TransportPlan& a, const TransportPlan& b,
                            std::size_t guard = kDenseGuard) {
  return frobenius_distance(plan_to_dense(a, guard), plan_to_dense(b, guard));
}

namespace detail {

inline std::string fmt17(double x) {
  if (std::isnan(x)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string solver_label(SolverKind k, double eps) {
  std::string s = to_string(k);
  if (k == SolverKind::sinkhorn || k == SolverKind::fs1) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "-eps%g", eps);
    s += buf;
  }
  return s;
}

struct Built1D {
  Problem1D p;
};
struct Built2D {
  Problem2D p;
};

struct CellSpec {
  SolverKind solver = SolverKind::fs2;
  double epsilon = 0.05;
  std::size_t size = 0;
};

struct CellResult {
  TimingRecord record;
  ConvergenceTrace trace;
  std::optional<TransportPlan> plan;
};

inline unsigned worker_count(const ExperimentConfig& cfg) {
  if (cfg.timing) return 1;
  if (const char* env = std::getenv("W1BENCH_WORKERS")) {
    const long w = std::strtol(env, nullptr, 10);
    if (w > 1) return static_cast<unsigned>(std::min<long>(w, 64));
  }
  return 1;
}

}  // namespace detail

/// Runs every (solver, epsilon, size) cell of the configuration, writes one
/// trace CSV per cell plus summary.csv into cfg.out_dir, and returns the
/// summary rows. Deterministic for a fixed config and seed; wall-clock fields
/// are the only nondeterministic columns.
inline std::vector<TimingRecord> run_experiment(const ExperimentConfig& cfg) {
  if (cfg.sizes.empty()) throw invalid_input("run_experiment: empty size list");
  if (cfg.solvers.empty()) throw invalid_input("run_experiment: empty solver list");
  if (cfg.repetitions < 1) throw invalid_input("run_experiment: repetitions must be >= 1");
  if (cfg.epsilons.empty() &&
      std::any_of(cfg.solvers.begin(), cfg.solvers.end(), [](SolverKind s) {
        return s == SolverKind::sinkhorn || s == SolverKind::fs1;
      }))
    throw invalid_input("run_experiment: entropic solvers need at least one epsilon");

  // images are loaded once, downsampled per size
  std::optional<Image2D> img_a, img_b;
  if (cfg.problem == ProblemKind::images) {
    if (cfg.image_a.empty() || cfg.image_b.empty())
      throw invalid_input("run_experiment: images problem needs two image paths");
    img_a = load_pgm(cfg.image_a);
    img_b = load_pgm(cfg.image_b);
  }

  const auto build_1d = [&](std::size_t n) {
    GridSpec1D grid{0.0, 100.0, n};
    Problem1D p;
    p.u = rescale(mixture_source(grid), cfg.eta);
    p.v = rescale(mixture_target(grid), cfg.eta);
    p.h = grid.spacing();
    p.delta = cfg.delta;
    p.inner_iters = cfg.inner_iters;
    p.outer_iters = cfg.outer_iters;
    return p;
  };
  const auto build_2d = [&](std::size_t side) {
    Problem2D p;
    p.n = p.m = side;
    if (cfg.problem == ProblemKind::random2d) {
      p.u = rescale(uniform_random_2d(side, side, cfg.seed), cfg.eta);
      p.v = rescale(uniform_random_2d(side, side, cfg.seed + 0x9e3779b97f4a7c15ull), cfg.eta);
      p.h1 = p.h2 = 0.1;
    } else {
      p.u = image_to_marginal(block_average(*img_a, side, side), cfg.eta);
      p.v = image_to_marginal(block_average(*img_b, side, side), cfg.eta);
      p.h1 = p.h2 = 1.0;
    }
    p.delta = cfg.delta;
    p.inner_iters = cfg.inner_iters;
    p.outer_iters = cfg.outer_iters;
    return p;
  };

  // expand cells
  std::vector<detail::CellSpec> cells;
  for (SolverKind s : cfg.solvers) {
    const bool entropic = (s == SolverKind::sinkhorn || s == SolverKind::fs1);
    for (double eps : entropic ? cfg.epsilons : std::vector<double>{0.0})
      for (std::size_t size : cfg.sizes) cells.push_back({s, eps, size});
  }

  const bool is1d = cfg.problem == ProblemKind::gaussian1d;
  const int total_sweeps = cfg.outer_iters * cfg.inner_iters;

  const auto run_cell = [&](const detail::CellSpec& cell) {
    detail::CellResult out;
    TimingRecord& rec = out.record;
    rec.solver = detail::solver_label(cell.solver, cell.epsilon);
    const bool entropic = (cell.solver == SolverKind::sinkhorn || cell.solver == SolverKind::fs1);
    if (entropic) rec.epsilon = cell.epsilon;
    rec.size = cell.size;
    rec.points = is1d ? cell.size : cell.size * cell.size;
    rec.repetitions = cfg.repetitions;
    const bool keep_plan = !cfg.timing && rec.points <= kDenseGuard;
    const bool structured = (cell.solver == SolverKind::fs1 || cell.solver == SolverKind::fs2);

    try {
      Problem1D p1;
      Problem2D p2;
      DenseMatrix cost;  // dense baselines only
      if (is1d) {
        p1 = build_1d(cell.size);
        if (!structured) cost = oracles::cost_matrix_1d(p1.u.size(), p1.h);
      } else {
        p2 = build_2d(cell.size);
        if (!structured) cost = oracles::cost_matrix_2d(p2.n, p2.m, p2.h1, p2.h2);
      }

      std::vector<double> times;
      for (int rep = 0; rep < cfg.repetitions; ++rep) {
        const bool record_trace = !cfg.timing && rep == 0;
        const std::uint64_t dense_before = instrument::counters().dense_ops;
        fastw1::detail::Stopwatch clock;
        switch (cell.solver) {
          case SolverKind::sinkhorn: {
            SinkhornOptions o;
            o.record_trace = record_trace;
            auto r = is1d ? sinkhorn_dense(p1.u, p1.v, cost, cell.epsilon, total_sweeps, o)
                          : sinkhorn_dense(p2.u, p2.v, cost, cell.epsilon, total_sweeps, o);
            times.push_back(clock.seconds());
            if (rep == 0) {
              rec.w1 = r.w1;
              out.trace = std::move(r.trace);
              if (keep_plan) out.plan = std::move(r.plan);
            }
            break;
          }
          case SolverKind::fs1: {
            SinkhornOptions o;
            o.record_trace = record_trace;
            auto r = is1d ? fs1_1d(p1, cell.epsilon, total_sweeps, o)
                          : fs1_2d(p2, cell.epsilon, total_sweeps, o);
            times.push_back(clock.seconds());
            if (rep == 0) {
              rec.w1 = r.w1;
              out.trace = std::move(r.trace);
              if (keep_plan) {
                if (is1d) {
                  Colt k = kernel_1d(p1.u.size(), std::exp(-p1.h / cell.epsilon));
                  out.plan = scale_rows(r.phi, scale_cols(k, r.psi));
                } else {
                  BlockColt k = kernel_2d(p2.n, p2.m, std::exp(-p2.h1 / cell.epsilon),
                                          std::exp(-p2.h2 / cell.epsilon));
                  out.plan = block_scale_rows(r.phi, block_scale_cols(k, r.psi));
                }
              }
            }
            break;
          }
          case SolverKind::ipot: {
            IpotOptions o;
            o.record_trace = record_trace;
            auto r = is1d ? ipot_dense(p1.u, p1.v, cost, cfg.delta, cfg.inner_iters,
                                       cfg.outer_iters, o)
                          : ipot_dense(p2.u, p2.v, cost, cfg.delta, cfg.inner_iters,
                                       cfg.outer_iters, o);
            times.push_back(clock.seconds());
            if (rep == 0) {
              rec.w1 = r.w1;
              out.trace = std::move(r.trace);
              if (keep_plan) out.plan = std::move(r.plan);
            }
            break;
          }
          case SolverKind::fs2: {
            if (is1d) {
              Fs2Options1D o;
              o.record_trace = record_trace;
              auto r = fs2_1d(p1, o);
              times.push_back(clock.seconds());
              if (rep == 0) {
                rec.w1 = r.w1;
                out.trace = std::move(r.trace);
                if (keep_plan) out.plan = std::move(r.plan);
              }
            } else {
              Fs2Options2D o;
              o.record_trace = record_trace;
              auto r = fs2_2d(p2, o);
              times.push_back(clock.seconds());
              if (rep == 0) {
                rec.w1 = r.w1;
                out.trace = std::move(r.trace);
                if (keep_plan) out.plan = std::move(r.plan);
              }
            }
            break;
          }
        }
        if (cfg.timing && structured && instrument::counters().dense_ops != dense_before)
          throw std::logic_error("dense path executed inside a timed region");
      }
      std::sort(times.begin(), times.end());
      rec.median_seconds = times[times.size() / 2];
      if (times.size() % 2 == 0)
        rec.median_seconds = 0.5 * (times[times.size() / 2 - 1] + times[times.size() / 2]);
      double mean = 0;
      for (double t : times) mean += t;
      rec.mean_seconds = mean / static_cast<double>(times.size());

      // oracle comparison outside any timed region
      if (!cfg.timing) {
        if (is1d) {
          Problem1D p = build_1d(cell.size);
          const double exact = oracles::w1_1d_exact(p.u, p.v, p.h);
          if (exact > 0) rec.oracle_error = std::abs(rec.w1 - exact) / exact;
        } else if (cfg.problem == ProblemKind::random2d && cell.size <= 8) {
          Problem2D p = build_2d(cell.size);
          const auto lp = oracles::lp_transport_exact(
              p.u, p.v, oracles::cost_matrix_2d(p.n, p.m, p.h1, p.h2));
          if (lp.objective > 0) rec.oracle_error = std::abs(rec.w1 - lp.objective) / lp.objective;
        }
      }
    } catch (const numerical_error& e) {
      rec.status = std::string("failed: ") + e.what();
    } catch (const std::bad_alloc&) {
      rec.status = "failed: out of memory";
    }
    return out;
  };

  std::vector<detail::CellResult> results(cells.size());
  const unsigned workers = detail::worker_count(cfg);
  if (workers <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) results[i] = run_cell(cells[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < cells.size();)
          results[i] = run_cell(cells[i]);
      });
    for (auto& th : pool) th.join();
  }

  // reference plans (first solver listed) and speed-up ratios, per size
  for (std::size_t size : cfg.sizes) {
    const detail::CellResult* ref = nullptr;
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (cells[i].size == size && results[i].plan) {
        ref = &results[i];
        break;
      }
    if (ref)
      for (std::size_t i = 0; i < cells.size(); ++i)
        if (cells[i].size == size && results[i].plan && &results[i] != ref)
          results[i].record.plan_frobenius_vs_ref =
              compare_plans(*ref->plan, *results[i].plan);
    double ipot_time = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (cells[i].size == size && cells[i].solver == SolverKind::ipot &&
          results[i].record.status == "ok")
        ipot_time = results[i].record.median_seconds;
    if (!std::isnan(ipot_time))
      for (std::size_t i = 0; i < cells.size(); ++i)
        if (cells[i].size == size && cells[i].solver == SolverKind::fs2 &&
            results[i].record.median_seconds > 0)
          results[i].record.speedup_vs_ipot = ipot_time / results[i].record.median_seconds;
  }

  std::vector<TimingRecord> records;
  records.reserve(results.size());
  for (auto& r : results) records.push_back(r.record);

  if (!cfg.out_dir.empty()) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw io_error("cannot create output directory " + cfg.out_dir);

    std::ofstream summary(fs::path(cfg.out_dir) / "summary.csv");
    if (!summary) throw io_error("cannot write summary.csv");
    summary << "solver,epsilon,size,points,repetitions,median_seconds,mean_seconds,w1,"
               "oracle_error,plan_frobenius_vs_ref,speedup_vs_ipot,status\n";
    for (const auto& r : records) {
      summary << r.solver << ',' << detail::fmt17(r.epsilon) << ',' << r.size << ',' << r.points
              << ',' << r.repetitions << ',' << detail::fmt17(r.median_seconds) << ','
              << detail::fmt17(r.mean_seconds) << ',' << detail::fmt17(r.w1) << ','
              << detail::fmt17(r.oracle_error) << ',' << detail::fmt17(r.plan_frobenius_vs_ref)
              << ',' << detail::fmt17(r.speedup_vs_ipot) << ',' << r.status << '\n';
    }
    if (!summary) throw io_error("write failed for summary.csv");

    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (results[i].trace.empty()) continue;
      std::ostringstream name;
      name << "trace_" << records[i].solver << "_" << cells[i].size << ".csv";
      std::ofstream tf(fs::path(cfg.out_dir) / name.str());
      if (!tf) throw io_error("cannot write " + name.str());
      tf << "iteration,w1,residual_u,residual_v,seconds\n";
      for (const TraceRow& row : results[i].trace)
        tf << row.iteration << ',' << detail::fmt17(row.w1) << ','
           << detail::fmt17(row.residual_u) << ',' << detail::fmt17(row.residual_v) << ','
           << detail::fmt17(row.seconds) << '\n';
      if (!tf) throw io_error("write failed for " + name.str());
    }
  }
  return records;
}

/// Minimal reader for the summary schema above (used by the `fit` command).
struct SummaryRow {
  std::string solver;
  std::size_t size = 0, points = 0;
  double median_seconds = std::numeric_limits<double>::quiet_NaN();
  std::string status;
};

inline std::vector<SummaryRow> read_summary_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw io_error("empty summary: " + path);
  std::vector<std::string> header;
  {
    std::istringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) header.push_back(col);
  }
  const auto col_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw io_error("summary missing column " + name);
  };
  const std::size_t c_solver = col_of("solver"), c_size = col_of("size"),
                    c_points = col_of("points"), c_median = col_of("median_seconds"),
                    c_status = col_of("status");
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    f.resize(header.size());
    SummaryRow r;
    r.solver = f[c_solver];
    r.size = static_cast<std::size_t>(std::strtoull(f[c_size].c_str(), nullptr, 10));
    r.points = static_cast<std::size_t>(std::strtoull(f[c_points].c_str(), nullptr, 10));
    if (!f[c_median].empty()) r.median_seconds = std::strtod(f[c_median].c_str(), nullptr);
    r.status = f[c_status];
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace bench
}  // namespace fastw1

#endif  // FASTW1_BENCH_HPP
