// w1bench: Wasserstein-1 solvers and benchmark harness on uniform grids.
//
// Subcommands: w1-1d, w1-2d, image-w1, bench, fit. Exit codes: 0 success,
// 1 validation error, 2 numerical failure, 3 I/O error.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fastw1/fastw1.hpp"

namespace {

using namespace fastw1;

struct CommonFlags {
  double delta = 1.0;
  double epsilon = 0.05;
  int inner = 20;
  int outer = 500;
  double eta = 1e-5;
  std::string solver = "fs2";
  bool oracle = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--delta", f.delta, "proximal regularization (ipot/fs2)");
  cmd->add_option("--epsilon", f.epsilon, "entropic regularization (sinkhorn/fs1)");
  cmd->add_option("--inner", f.inner, "inner loop count L");
  cmd->add_option("--outer", f.outer, "outer iteration count");
  cmd->add_option("--eta", f.eta, "rescaling shift for zero mass");
  cmd->add_option("--solver", f.solver, "sinkhorn | fs1 | ipot | fs2")
      ->check(CLI::IsMember({"sinkhorn", "fs1", "ipot", "fs2"}));
  cmd->add_flag("--oracle", f.oracle, "also print the exact reference value");
}

void print_w1(double w1) { std::printf("w1=%.17g\n", w1); }

double solve_1d(const CommonFlags& f, const Problem1D& p) {
  const bench::SolverKind kind = bench::solver_from_string(f.solver);
  switch (kind) {
    case bench::SolverKind::fs2: return fs2_1d(p).w1;
    case bench::SolverKind::ipot:
      return ipot_dense(p.u, p.v, oracles::cost_matrix_1d(p.u.size(), p.h), p.delta,
                        p.inner_iters, p.outer_iters)
          .w1;
    case bench::SolverKind::fs1:
      return fs1_1d(p, f.epsilon, p.inner_iters * p.outer_iters).w1;
    default:
      return sinkhorn_dense(p.u, p.v, oracles::cost_matrix_1d(p.u.size(), p.h), f.epsilon,
                            p.inner_iters * p.outer_iters)
          .w1;
  }
}

double solve_2d(const CommonFlags& f, const Problem2D& p) {
  const bench::SolverKind kind = bench::solver_from_string(f.solver);
  switch (kind) {
    case bench::SolverKind::fs2: return fs2_2d(p).w1;
    case bench::SolverKind::ipot:
      return ipot_dense(p.u, p.v, oracles::cost_matrix_2d(p.n, p.m, p.h1, p.h2), p.delta,
                        p.inner_iters, p.outer_iters)
          .w1;
    case bench::SolverKind::fs1:
      return fs1_2d(p, f.epsilon, p.inner_iters * p.outer_iters).w1;
    default:
      return sinkhorn_dense(p.u, p.v, oracles::cost_matrix_2d(p.n, p.m, p.h1, p.h2), f.epsilon,
                            p.inner_iters * p.outer_iters)
          .w1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wasserstein-1 distances on uniform grids in linear time"};
  app.require_subcommand(1);

  // ---- w1-1d -------------------------------------------------------------
  auto* c1 = app.add_subcommand("w1-1d", "W1 between two 1D marginals");
  std::size_t n1 = 100;
  std::string u_file, v_file;
  CommonFlags f1;
  c1->add_option("--n", n1, "grid size (built-in Gaussian mixtures)");
  c1->add_option("--u", u_file, "source marginal CSV (one value per line)");
  c1->add_option("--v", v_file, "target marginal CSV");
  add_common(c1, f1);

  // ---- w1-2d -------------------------------------------------------------
  auto* c2 = app.add_subcommand("w1-2d", "W1 between two random 2D fields");
  std::size_t n2 = 16, m2 = 0;
  std::uint64_t seed2 = 0;
  CommonFlags f2;
  c2->add_option("--n", n2, "grid rows");
  c2->add_option("--m", m2, "grid columns (defaults to --n)");
  c2->add_option("--seed", seed2, "random seed");
  add_common(c2, f2);

  // ---- image-w1 ----------------------------------------------------------
  auto* c3 = app.add_subcommand("image-w1", "W1 between two grayscale PGM images");
  std::string img_a, img_b;
  std::size_t n3 = 32, m3 = 0;
  CommonFlags f3;
  c3->add_option("image_a", img_a, "first PGM image")->required();
  c3->add_option("image_b", img_b, "second PGM image")->required();
  c3->add_option("--n", n3, "downsampled grid rows");
  c3->add_option("--m", m3, "downsampled grid columns (defaults to --n)");
  add_common(c3, f3);

  // ---- bench -------------------------------------------------------------
  auto* c4 = app.add_subcommand("bench", "run an experiment grid, emit CSV");
  std::string problem = "gaussian1d";
  std::vector<std::size_t> sizes;
  std::vector<std::string> solvers;
  std::vector<double> epsilons{0.05};
  bench::ExperimentConfig cfg;
  std::string image_a4, image_b4;
  c4->add_option("--problem", problem, "gaussian1d | random2d | images")
      ->check(CLI::IsMember({"gaussian1d", "random2d", "images"}));
  c4->add_option("--sizes", sizes, "grid sizes (N or side lengths)")
      ->required()
      ->delimiter(',');
  c4->add_option("--solvers", solvers, "solvers to run")->required()->delimiter(',');
  c4->add_option("--epsilon", epsilons, "epsilons for entropic solvers")->delimiter(',');
  c4->add_option("--delta", cfg.delta, "proximal regularization");
  c4->add_option("--inner", cfg.inner_iters, "inner loop count L");
  c4->add_option("--outer", cfg.outer_iters, "outer iteration count");
  c4->add_option("--seed", cfg.seed, "random seed");
  c4->add_option("--reps", cfg.repetitions, "repetitions per cell");
  c4->add_option("--eta", cfg.eta, "rescaling shift");
  c4->add_option("--out", cfg.out_dir, "output directory for CSV files")->required();
  c4->add_flag("--timing", cfg.timing, "timing mode: sequential, no traces");
  c4->add_option("--image-a", image_a4, "first image (images problem)");
  c4->add_option("--image-b", image_b4, "second image (images problem)");

  // ---- fit ---------------------------------------------------------------
  auto* c5 = app.add_subcommand("fit", "fit log(time) vs log(points) from a summary CSV");
  std::string csv_path, fit_solver;
  c5->add_option("--csv", csv_path, "summary.csv produced by bench")->required();
  c5->add_option("--solver", fit_solver, "restrict to one solver label");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c1) {
      Problem1D p;
      if (u_file.empty() != v_file.empty())
        throw invalid_input("w1-1d: provide both --u and --v or neither");
      if (!u_file.empty()) {
        p.u = rescale(read_vector_csv(u_file), f1.eta);
        p.v = rescale(read_vector_csv(v_file), f1.eta);
        if (p.u.size() != p.v.size()) throw invalid_input("w1-1d: marginal sizes differ");
        p.h = 1.0;
        n1 = p.u.size();
      } else {
        GridSpec1D grid{0.0, 100.0, n1};
        p.u = rescale(mixture_source(grid), f1.eta);
        p.v = rescale(mixture_target(grid), f1.eta);
        p.h = grid.spacing();
      }
      p.delta = f1.delta;
      p.inner_iters = f1.inner;
      p.outer_iters = f1.outer;
      const double w1 = solve_1d(f1, p);
      print_w1(w1);
      if (f1.oracle) {
        const double exact = oracles::w1_1d_exact(p.u, p.v, p.h);
        std::printf("oracle=%.17g\nrel_error=%.17g\n", exact,
                    std::abs(w1 - exact) / std::max(exact, 1e-300));
      }
    } else if (*c2) {
      if (m2 == 0) m2 = n2;
      Problem2D p;
      p.n = n2;
      p.m = m2;
      p.u = rescale(uniform_random_2d(n2, m2, seed2), f2.eta);
      p.v = rescale(uniform_random_2d(n2, m2, seed2 + 0x9e3779b97f4a7c15ull), f2.eta);
      p.h1 = p.h2 = 0.1;
      p.delta = f2.delta;
      p.inner_iters = f2.inner;
      p.outer_iters = f2.outer;
      const double w1 = solve_2d(f2, p);
      print_w1(w1);
      if (f2.oracle) {
        if (n2 * m2 > 64)
          throw invalid_input("w1-2d: --oracle limited to grids of at most 64 points");
        const auto lp = oracles::lp_transport_exact(
            p.u, p.v, oracles::cost_matrix_2d(p.n, p.m, p.h1, p.h2));
        std::printf("oracle=%.17g\nrel_error=%.17g\n", lp.objective,
                    std::abs(w1 - lp.objective) / std::max(lp.objective, 1e-300));
      }
    } else if (*c3) {
      if (m3 == 0) m3 = n3;
      Problem2D p;
      p.n = n3;
      p.m = m3;
      p.u = image_to_marginal(block_average(load_pgm(img_a), n3, m3), f3.eta);
      p.v = image_to_marginal(block_average(load_pgm(img_b), n3, m3), f3.eta);
      p.h1 = p.h2 = 1.0;  // pixel units
      p.delta = f3.delta;
      p.inner_iters = f3.inner;
      p.outer_iters = f3.outer;
      print_w1(solve_2d(f3, p));
    } else if (*c4) {
      cfg.problem = bench::problem_from_string(problem);
      cfg.sizes = sizes;
      for (const std::string& s : solvers) cfg.solvers.push_back(bench::solver_from_string(s));
      cfg.epsilons = epsilons;
      cfg.image_a = image_a4;
      cfg.image_b = image_b4;
      const auto records = bench::run_experiment(cfg);
      int failed = 0;
      for (const auto& r : records) {
        std::printf("%s size=%zu median=%.6gs w1=%.12g %s\n", r.solver.c_str(), r.size,
                    r.median_seconds, r.w1, r.status.c_str());
        if (r.status != "ok") ++failed;
      }
      std::printf("wrote %s/summary.csv\n", cfg.out_dir.c_str());
      if (failed) {
        std::fprintf(stderr, "%d cell(s) failed\n", failed);
        return 2;
      }
    } else if (*c5) {
      const auto rows = bench::read_summary_csv(csv_path);
      std::vector<std::string> labels;
      for (const auto& r : rows)
        if ((fit_solver.empty() || r.solver == fit_solver) && r.status == "ok" &&
            std::find(labels.begin(), labels.end(), r.solver) == labels.end())
          labels.push_back(r.solver);
      if (labels.empty()) throw invalid_input("fit: no matching rows in " + csv_path);
      for (const std::string& label : labels) {
        std::vector<double> pts, times;
        for (const auto& r : rows)
          if (r.solver == label && r.status == "ok" && r.median_seconds > 0) {
            pts.push_back(static_cast<double>(r.points));
            times.push_back(r.median_seconds);
          }
        const auto fit = bench::fit_complexity(pts, times);
        std::printf("%s slope=%.4f intercept=%.4f r2=%.4f\n", label.c_str(), fit.slope,
                    fit.intercept, fit.r2);
      }
    }
  } catch (const invalid_input& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const numerical_error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  } catch (const io_error& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return 3;
  }
  return 0;
}
