#pragma once

// Command-line front end. `run_cli` is the whole program; tools/seqot.cpp only
// forwards argv, so tests can drive every subcommand in-process.
//
// Exit codes: 0 ok, 1 input error, 2 not converged, 3 oracle scale exceeded.

#include "seqot/core.hpp"
#include "seqot/error.hpp"
#include "seqot/io.hpp"
#include "seqot/oracle.hpp"
#include "seqot/random.hpp"
#include "seqot/sinkhorn.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace seqot::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kNotConverged = 2, kScaleExceeded = 3 };

struct SolverFlags {
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::optional<double> tolerance;
  std::string criterion = "auto";
  std::string backend = "log";
  std::size_t max_iters = 100000;
  std::size_t trace_stride = 1;
};

inline void add_solver_flags(CLI::App& cmd, SolverFlags& f) {
  cmd.add_option("--epsilon", f.epsilon, "Regularization strength (overrides the value derived from --delta)")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--delta", f.delta, "Target suboptimality")->check(CLI::PositiveNumber);
  cmd.add_option("--tolerance", f.tolerance, "Explicit residual threshold (required when M > 2)")
      ->check(CLI::NonNegativeNumber);
  cmd.add_option("--criterion", f.criterion, "Stopping criterion")
      ->check(CLI::IsMember({"auto", "halfstep", "boundary"}));
  cmd.add_option("--backend", f.backend, "Iteration backend")->check(CLI::IsMember({"linear", "log"}));
  cmd.add_option("--max-iters", f.max_iters, "Iteration cap");
  cmd.add_option("--trace-stride", f.trace_stride, "Record every k-th iteration")->check(CLI::PositiveNumber);
}

inline SolveConfig to_config(const SolverFlags& f, const Problem& p) {
  SolveConfig cfg;
  cfg.epsilon = f.epsilon;
  cfg.delta = f.delta;
  cfg.residual_tolerance = f.tolerance;
  cfg.max_iters = f.max_iters;
  cfg.trace_stride = f.trace_stride;
  cfg.backend = f.backend == "linear" ? Backend::Linear : Backend::LogDomain;
  if (f.criterion == "auto") {
    cfg.criterion = p.chain_length() == 2 ? Criterion::HalfStepResidual : Criterion::BoundaryResidual;
  } else {
    cfg.criterion = f.criterion == "halfstep" ? Criterion::HalfStepResidual : Criterion::BoundaryResidual;
  }
  return cfg;
}

struct RunOutput {
  int code = kOk;
  std::string report;  // JSON text
  std::string trace;   // CSV text
  std::string diagnostics;
};

inline RunOutput run_one(const std::string& path, const SolverFlags& flags, bool with_oracle, bool use_reference,
                         const std::string& report_path, const std::string& trace_path) {
  RunOutput out;
  try {
    const Problem p = io::load_problem(path);
    validate_problem(p);
    const SolveConfig cfg = to_config(flags, p);

    std::optional<ReferenceVectors> ref;
    std::optional<ContractionReport> bounds;
    if (use_reference) {
      double eps = 0.0;
      if (cfg.epsilon) {
        eps = *cfg.epsilon;
      } else if (cfg.delta && p.chain_length() == 2) {
        eps = epsilon_from_delta(p, *cfg.delta);
      } else {
        throw Error(Errc::InvalidConfig, "--reference needs --epsilon or --delta");
      }
      ref = high_precision_reference(p, eps);
      const GibbsKernels k = build_kernels(p, eps);
      bounds = with_reference(contraction_bound(k), init_state(k, Backend::LogDomain), ref->log_u_hat);
    }

    const SolveReport rep = solve(p, cfg, ref ? &ref->log_u_hat : nullptr);

    io::RunManifest m;
    m.problem_path = path;
    m.epsilon = rep.epsilon;
    m.delta = rep.delta;
    m.criterion = rep.criterion;
    m.backend = rep.backend;
    m.max_iters = cfg.max_iters;
    m.terminal_n = rep.iterations();
    m.converged = rep.converged();
    m.threshold = rep.threshold;
    m.terminal_residual = rep.terminal_residual;
    if (rep.rounded_objective) m.rounded_objective = rep.rounded_objective->cost;
    m.induced_objective = rep.induced_objective.cost;
    m.suboptimality_guarantee = rep.suboptimality_guarantee;
    m.warnings = rep.warnings;
    m.report_path = report_path;
    m.trace_path = trace_path;
    if (with_oracle) {
      try {
        m.oracle_optimum = exact_seqot(p).optimum;
      } catch (const Error& e) {
        if (e.code() != Errc::ScaleExceeded) throw;
        out.diagnostics += std::string("oracle skipped: ") + e.what() + "\n";
        out.code = kScaleExceeded;
      }
    }
    io::Json j = io::manifest_to_json(m);
    j["plans"] = io::plans_to_json(rep.rounded ? *rep.rounded : rep.induced);
    out.report = io::dump(j);
    out.trace = io::trace_to_csv(rep.trace, bounds ? &*bounds : nullptr);
    for (const auto& w : rep.warnings) out.diagnostics += "warning: " + w + "\n";
    if (out.code == kOk && !rep.converged()) {
      out.code = kNotConverged;
      out.diagnostics += "not converged after " + std::to_string(rep.iterations()) + " iterations\n";
    }
  } catch (const Error& e) {
    out.code = kInputError;
    out.diagnostics += std::string("error: ") + e.what() + "\n";
  }
  return out;
}

inline int worst(int a, int b) {
  // input errors dominate, then scale, then non-convergence
  auto rank = [](int c) { return c == kInputError ? 3 : c == kScaleExceeded ? 2 : c == kNotConverged ? 1 : 0; };
  return rank(a) >= rank(b) ? a : b;
}

inline int cmd_solve(const std::vector<std::string>& problems, const SolverFlags& flags, bool oracle, bool reference,
                     const std::string& report_path, const std::string& trace_path, const std::string& out_dir,
                     std::size_t jobs, std::ostream& out, std::ostream& err) {
  if (problems.size() > 1 && out_dir.empty()) {
    err << "error: several problems need --out-dir\n";
    return kInputError;
  }
  struct Job {
    std::string problem, report, trace;
  };
  std::vector<Job> work;
  for (const auto& pr : problems) {
    if (out_dir.empty()) {
      work.push_back({pr, report_path, trace_path});
    } else {
      const std::string stem = std::filesystem::path(pr).stem().string();
      const auto dir = std::filesystem::path(out_dir);
      work.push_back({pr, (dir / (stem + ".report.json")).string(), (dir / (stem + ".trace.csv")).string()});
    }
  }
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  std::vector<RunOutput> results(work.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < work.size(); i = next++) {
      results[i] = run_one(work[i].problem, flags, oracle, reference, work[i].report, work[i].trace);
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(work.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int code = kOk;
  for (std::size_t i = 0; i < work.size(); ++i) {
    const RunOutput& r = results[i];
    err << r.diagnostics;
    code = worst(code, r.code);
    if (r.code == kInputError) continue;
    try {
      if (work[i].report.empty()) {
        out << r.report;
      } else {
        io::write_file(work[i].report, r.report);
      }
      if (!work[i].trace.empty()) io::write_file(work[i].trace, r.trace);
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      code = worst(code, kInputError);
    }
  }
  return code;
}

inline int cmd_trace(const std::string& problem, const SolverFlags& flags, bool reference, const std::string& out_path,
                     std::ostream& out, std::ostream& err) {
  const RunOutput r = run_one(problem, flags, false, reference, "", out_path);
  err << r.diagnostics;
  if (r.code == kInputError) return r.code;
  try {
    if (out_path.empty()) {
      out << r.trace;
    } else {
      io::write_file(out_path, r.trace);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return r.code;
}

inline int cmd_oracle(const std::string& problem, const std::string& out_path, std::ostream& out, std::ostream& err) {
  try {
    const Problem p = io::load_problem(problem);
    const ExactSolution sol = exact_seqot(p);
    io::Json j{{"problem", problem}, {"optimum", sol.optimum}, {"plans", io::plans_to_json(sol.plans)}};
    if (sol.dual_certificate) {
      io::Json pots = io::Json::array();
      for (const auto& v : *sol.dual_certificate) pots.push_back(io::to_json(v));
      j["potentials"] = std::move(pots);
    }
    if (p.chain_length() == 2) {
      const ReducedSolution red = reduce_to_ot(p);
      j["reduce_to_ot"] = io::Json{{"optimum", red.optimum}, {"delta", std::abs(red.optimum - sol.optimum)}};
    }
    const std::string text = io::dump(j);
    if (out_path.empty()) {
      out << text;
    } else {
      io::write_file(out_path, text);
    }
    return kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == Errc::ScaleExceeded ? kScaleExceeded : kInputError;
  }
}

struct GenFlags {
  std::uint64_t seed = 0;
  std::size_t chain_length = 2;
  std::vector<Index> dims;
  Index min_dim = 2;
  Index max_dim = 8;
  double cost_max = 1.0;
  std::size_t count = 1;
};

inline int cmd_gen(const GenFlags& g, const std::string& out_path, const std::string& out_dir, std::ostream& out,
                   std::ostream& err) {
  RandomProblemSpec spec;
  spec.chain_length = g.dims.empty() ? g.chain_length : g.dims.size() - 1;
  spec.dims = g.dims;
  spec.min_dim = g.min_dim;
  spec.max_dim = g.max_dim;
  spec.cost_max = g.cost_max;
  if (spec.chain_length < 2 || g.min_dim < 1 || g.max_dim < g.min_dim) {
    err << "error: need M >= 2 and 1 <= min-dim <= max-dim\n";
    return kInputError;
  }
  if (g.count > 1 && out_dir.empty()) {
    err << "error: --count > 1 needs --out-dir\n";
    return kInputError;
  }
  std::mt19937_64 rng(g.seed);
  try {
    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
    for (std::size_t i = 0; i < g.count; ++i) {
      const std::string text = io::dump(io::problem_to_json(random_problem(rng, spec)));
      if (!out_dir.empty()) {
        char name[32];
        std::snprintf(name, sizeof name, "problem_%04zu.json", i);
        io::write_file((std::filesystem::path(out_dir) / name).string(), text);
      } else if (!out_path.empty()) {
        io::write_file(out_path, text);
      } else {
        out << text;
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kOk;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sinkhorn solver for sequentially composed optimal transport", "seqot"};
  app.require_subcommand(1);

  SolverFlags solve_flags;
  std::vector<std::string> solve_problems;
  bool solve_oracle = false;
  bool solve_reference = false;
  std::string solve_report, solve_trace, solve_out_dir;
  std::size_t jobs = 1;
  auto* solve_cmd = app.add_subcommand("solve", "Solve, round to a feasible pair and write a report");
  solve_cmd->add_option("problem", solve_problems, "Problem JSON file(s)")->required();
  add_solver_flags(*solve_cmd, solve_flags);
  solve_cmd->add_flag("--oracle", solve_oracle, "Also compute the exact optimum");
  solve_cmd->add_flag("--reference", solve_reference, "Add Hilbert distances to a high-precision reference");
  solve_cmd->add_option("--report", solve_report, "Report JSON path (default: stdout)");
  solve_cmd->add_option("--trace", solve_trace, "Trace CSV path");
  solve_cmd->add_option("--out-dir", solve_out_dir, "Directory for per-problem outputs");
  solve_cmd->add_option("--jobs", jobs, "Parallel solves")->check(CLI::PositiveNumber);

  SolverFlags trace_flags;
  std::string trace_problem, trace_out;
  bool trace_reference = false;
  auto* trace_cmd = app.add_subcommand("trace", "Write the per-iteration trace as CSV");
  trace_cmd->add_option("problem", trace_problem, "Problem JSON file")->required();
  add_solver_flags(*trace_cmd, trace_flags);
  trace_cmd->add_flag("--reference", trace_reference, "Add hilbert_i and bound_i columns");
  trace_cmd->add_option("--out", trace_out, "CSV path (default: stdout)");

  std::string oracle_problem, oracle_out;
  auto* oracle_cmd = app.add_subcommand("oracle", "Exact unregularized optimum by min-cost flow");
  oracle_cmd->add_option("problem", oracle_problem, "Problem JSON file")->required();
  oracle_cmd->add_option("--out", oracle_out, "JSON path (default: stdout)");

  GenFlags gen;
  std::string gen_out, gen_out_dir;
  auto* gen_cmd = app.add_subcommand("gen", "Emit seeded random problems");
  gen_cmd->add_option("--seed", gen.seed, "RNG seed");
  gen_cmd->add_option("--chain-length,-M", gen.chain_length, "Number of cost matrices");
  gen_cmd->add_option("--dims", gen.dims, "Explicit m_1 .. m_{M+1}")->delimiter(',');
  gen_cmd->add_option("--min-dim", gen.min_dim, "Smallest random dimension");
  gen_cmd->add_option("--max-dim", gen.max_dim, "Largest random dimension");
  gen_cmd->add_option("--cost-max", gen.cost_max, "Costs are uniform in [0, cost-max]")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--count", gen.count, "Number of problems")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--out", gen_out, "Output path (default: stdout)");
  gen_cmd->add_option("--out-dir", gen_out_dir, "Directory for problem_NNNN.json files");

  std::vector<const char*> argv{"seqot"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  if (*solve_cmd) {
    return cmd_solve(solve_problems, solve_flags, solve_oracle, solve_reference, solve_report, solve_trace,
                     solve_out_dir, jobs, out, err);
  }
  if (*trace_cmd) return cmd_trace(trace_problem, trace_flags, trace_reference, trace_out, out, err);
  if (*oracle_cmd) return cmd_oracle(oracle_problem, oracle_out, out, err);
  if (*gen_cmd) return cmd_gen(gen, gen_out, gen_out_dir, out, err);
  return kInputError;
}

}  // namespace seqot::cli
