#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "hcbl/continuation.hpp"
#include "hcbl/metrics.hpp"
#include "hcbl/scenario.hpp"
#include "hcbl/version.hpp"

namespace hcbl {

namespace detail {

inline std::string csv_num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string csv_num(int v) { return std::to_string(v); }
inline std::string csv_num(long v) { return std::to_string(v); }

inline std::string csv_header(const char* subcommand, const Scenario& sc) {
  std::string out;
  out += std::string("# hcbl ") + subcommand + " " + kVersion + "\n";
  out += "# scenario: " + sc.name + "\n";
  out += "# config: " + scenario_to_json(sc).dump() + "\n";
  return out;
}

}  // namespace detail

enum class RunStatus { ok, solver_failure, trace_failure };

/// One accepted time step of the marching loop.
struct SolveStep {
  int step = 0;
  double time = 0.0;
  int pc_steps = 0;
  int newton_iters = 0;
  std::string verdict;
  std::vector<double> profile;
};

struct SolveResult {
  RunStatus status = RunStatus::ok;
  std::string detail;
  double cfl = 0.0;
  std::vector<SolveStep> steps;
  std::string csv;

  bool ok() const { return status == RunStatus::ok; }
};

namespace detail {

// A lambda-independent homotopy needs no continuation: one predictor jump
// from lambda = 1 to 0 retraces the baseline Newton solve.
inline TraceConfig effective_trace_config(const Scenario& sc, HomotopyKind kind) {
  TraceConfig cfg = sc.trace;
  if (kind == HomotopyKind::target_only) {
    cfg.dlambda_init = 1.0;
    cfg.dlambda_max = 1.0;
    cfg.mode = TraceMode::lambda_stepping;
  }
  return cfg;
}

struct StepOutcome {
  bool ok = false;
  std::vector<double> profile;
  int pc_steps = 0;
  int newton_iters = 0;
  std::string verdict;
};

/// Advances one implicit step with the scenario's configured method:
/// plain Newton for target_only, a full curve trace otherwise.
inline StepOutcome advance_step(const Scenario& sc, HomotopyKind kind,
                                const HomotopyProblem& problem) {
  StepOutcome out;
  if (kind == HomotopyKind::target_only) {
    const NewtonReport rep =
        newton_solve(problem, 0.0, problem.step().s_prev, sc.solver);
    out.ok = rep.converged();
    out.pc_steps = 0;
    out.newton_iters = rep.iterations;
    out.verdict = to_string(rep.verdict);
    out.profile = rep.x_final;
  } else {
    const TraceResult tr = trace(problem, sc.trace);
    out.ok = tr.ok();
    out.pc_steps = static_cast<int>(tr.points.size()) - 1;
    out.newton_iters = 0;
    for (const CurvePoint& pt : tr.points) out.newton_iters += pt.corrector_iters;
    out.verdict = to_string(tr.status);
    if (tr.ok()) out.profile = tr.points.back().x;
  }
  return out;
}

/// Marches the first `n_march` steps; empty result on failure.
struct MarchResult {
  bool ok = true;
  int failed_step = -1;
  std::string verdict;
  std::vector<double> profile;
};

inline MarchResult march_to(const Scenario& sc, int n_march) {
  MarchResult out;
  out.profile = sc.initial_profile();
  if (n_march == 0) return out;
  HomotopyProblem problem = sc.make_problem(sc.homotopy.kind);
  for (int n = 1; n <= n_march; ++n) {
    const HomotopyProblem step_problem =
        problem.with_step(TimeStep(sc.tau, out.profile, sc.s_inflow));
    const StepOutcome st = advance_step(sc, sc.homotopy.kind, step_problem);
    if (!st.ok) {
      out.ok = false;
      out.failed_step = n;
      out.verdict = st.verdict;
      return out;
    }
    out.profile = st.profile;
  }
  return out;
}

}  // namespace detail

/// Marches all time steps with the scenario's homotopy (plain Newton for
/// target_only), recording the profile and solver effort per step.
inline SolveResult run_solve(const Scenario& sc) {
  SolveResult result;
  result.cfl = sc.diagnostics().cfl;

  std::vector<double> profile = sc.initial_profile();
  result.steps.push_back({0, 0.0, 0, 0, "initial", profile});

  HomotopyProblem problem = sc.make_problem(sc.homotopy.kind);
  for (int n = 1; n <= sc.n_steps; ++n) {
    const HomotopyProblem step_problem =
        problem.with_step(TimeStep(sc.tau, profile, sc.s_inflow));
    detail::StepOutcome st = detail::advance_step(sc, sc.homotopy.kind, step_problem);
    result.steps.push_back(
        {n, n * sc.tau, st.pc_steps, st.newton_iters, st.verdict, st.profile});
    if (!st.ok) {
      result.status = RunStatus::solver_failure;
      result.detail = "step " + std::to_string(n) + " failed: " + st.verdict;
      break;
    }
    profile = std::move(st.profile);
  }

  std::string csv = detail::csv_header("solve", sc);
  csv += "step,time,pc_steps,newton_iters,verdict,cfl";
  for (int k = 1; k <= sc.n_cells; ++k) csv += ",S_" + std::to_string(k);
  csv += "\n";
  for (const SolveStep& row : result.steps) {
    csv += detail::csv_num(row.step) + "," + detail::csv_num(row.time) + "," +
           detail::csv_num(row.pc_steps) + "," + detail::csv_num(row.newton_iters) + "," +
           row.verdict + "," + detail::csv_num(result.cfl);
    for (double v : row.profile) csv += "," + detail::csv_num(v);
    for (std::size_t k = row.profile.size(); k < static_cast<std::size_t>(sc.n_cells); ++k)
      csv += ",nan";
    csv += "\n";
  }
  result.csv = std::move(csv);
  return result;
}

struct TraceRun {
  RunStatus status = RunStatus::ok;
  std::string detail;
  TraceResult trace;
  std::string csv;

  bool ok() const { return status == RunStatus::ok; }
};

/// Traces the homotopy curve of the configured time step (default: the
/// first) and emits one row per accepted curve point.
inline TraceRun run_trace(const Scenario& sc, HomotopyKind kind) {
  TraceRun result;
  const detail::MarchResult pre = detail::march_to(sc, sc.trace_step_index);
  if (!pre.ok) {
    result.status = RunStatus::solver_failure;
    result.detail = "marching to step " + std::to_string(sc.trace_step_index) +
                    " failed at step " + std::to_string(pre.failed_step) + ": " + pre.verdict;
    result.csv = detail::csv_header("trace", sc);
    return result;
  }
  const HomotopyProblem problem = sc.make_problem(kind, TimeStep(sc.tau, pre.profile, sc.s_inflow));
  result.trace = trace(problem, detail::effective_trace_config(sc, kind));
  if (!result.trace.ok()) {
    result.status = RunStatus::trace_failure;
    result.detail = std::string(to_string(result.trace.status)) + ": " + result.trace.detail;
  }

  std::string csv = detail::csv_header("trace", sc);
  csv += "# homotopy: " + std::string(to_string(kind)) + "\n";
  csv += "# status: " + std::string(to_string(result.trace.status)) + "\n";
  csv += "step_index,s,lambda,corrector_iters";
  for (int k = 1; k <= sc.n_cells; ++k) csv += ",S_" + std::to_string(k);
  csv += "\n";
  for (std::size_t i = 0; i < result.trace.points.size(); ++i) {
    const CurvePoint& pt = result.trace.points[i];
    csv += detail::csv_num(static_cast<int>(i)) + "," + detail::csv_num(pt.arclength) + "," +
           detail::csv_num(pt.lambda) + "," + detail::csv_num(pt.corrector_iters);
    for (double v : pt.x) csv += "," + detail::csv_num(v);
    csv += "\n";
  }
  result.csv = std::move(csv);
  return result;
}

inline TraceRun run_trace(const Scenario& sc) { return run_trace(sc, sc.homotopy.kind); }

struct MetricsRun {
  RunStatus status = RunStatus::ok;
  std::string detail;
  TraceResult trace;
  std::vector<MetricsRecord> records;
  double s_tot = 0.0;
  std::string csv;

  bool ok() const { return status == RunStatus::ok; }
};

/// Re-traces the configured step with constant arclength steps (metrics.ds)
/// and sweeps curvature and predictor radius over the interior samples.
inline MetricsRun run_metrics(const Scenario& sc, HomotopyKind kind) {
  MetricsRun result;
  const detail::MarchResult pre = detail::march_to(sc, sc.trace_step_index);
  if (!pre.ok) {
    result.status = RunStatus::solver_failure;
    result.detail = "marching to step " + std::to_string(sc.trace_step_index) +
                    " failed at step " + std::to_string(pre.failed_step) + ": " + pre.verdict;
    result.csv = detail::csv_header("metrics", sc);
    return result;
  }
  const HomotopyProblem problem = sc.make_problem(kind, TimeStep(sc.tau, pre.profile, sc.s_inflow));
  TraceConfig arc_cfg = sc.trace;
  arc_cfg.mode = TraceMode::arclength_stepping;
  arc_cfg.ds = sc.metrics.ds;
  result.trace = trace(problem, arc_cfg);
  if (!result.trace.ok()) {
    result.status = RunStatus::trace_failure;
    result.detail = std::string(to_string(result.trace.status)) + ": " + result.trace.detail;
  } else {
    result.s_tot = result.trace.points.back().arclength;
    result.records = sweep_metrics(problem, result.trace.points, sc.metrics, sc.solver);
  }

  std::string csv = detail::csv_header("metrics", sc);
  csv += "# homotopy: " + std::string(to_string(kind)) + "\n";
  csv += "# status: " + std::string(to_string(result.trace.status)) + "\n";
  csv += "# s_tot: " + detail::csv_num(result.s_tot) + "\n";
  csv += "s,lambda,kappa,r,r_tilde,gamma_max,err_scale\n";
  for (const MetricsRecord& rec : result.records) {
    csv += detail::csv_num(rec.s) + "," + detail::csv_num(rec.lambda) + "," +
           detail::csv_num(rec.kappa) + "," + detail::csv_num(rec.r) + "," +
           detail::csv_num(rec.r_tilde) + "," + detail::csv_num(rec.gamma_max) + "," +
           detail::csv_num(rec.err_scale) + "\n";
  }
  result.csv = std::move(csv);
  return result;
}

inline MetricsRun run_metrics(const Scenario& sc) { return run_metrics(sc, sc.homotopy.kind); }

struct CompareRow {
  HomotopyKind kind = HomotopyKind::target_only;
  bool success = false;
  int pc_steps = 0;
  int newton_iters = 0;
  double s_tot = std::numeric_limits<double>::quiet_NaN();
  double kappa_max = std::numeric_limits<double>::quiet_NaN();
  double r_tilde_min = std::numeric_limits<double>::quiet_NaN();
};

struct CompareResult {
  std::vector<CompareRow> rows;
  std::string csv;
};

/// Side-by-side summary of several homotopy choices on the same time step:
/// tracing effort from the lambda-stepped run, curve statistics from the
/// arclength-stepped metrics run. Per-kind failures leave a flagged row.
inline CompareResult compare_homotopies(const Scenario& sc,
                                        const std::vector<HomotopyKind>& kinds) {
  if (kinds.size() < 2)
    throw std::invalid_argument("compare_homotopies needs at least two kinds");
  CompareResult result;
  for (HomotopyKind kind : kinds) {
    CompareRow row;
    row.kind = kind;
    const TraceRun tr = run_trace(sc, kind);
    row.success = tr.ok();
    if (!tr.trace.points.empty()) {
      row.pc_steps = static_cast<int>(tr.trace.points.size()) - 1;
      row.newton_iters = 0;
      for (const CurvePoint& pt : tr.trace.points) row.newton_iters += pt.corrector_iters;
    }
    if (row.success) {
      const MetricsRun mr = run_metrics(sc, kind);
      if (mr.ok()) {
        row.s_tot = mr.s_tot;
        double kmax = std::numeric_limits<double>::quiet_NaN();
        double rmin = std::numeric_limits<double>::quiet_NaN();
        for (const MetricsRecord& rec : mr.records) {
          if (!std::isnan(rec.kappa) && (std::isnan(kmax) || rec.kappa > kmax)) kmax = rec.kappa;
          if (std::isnan(rmin) || rec.r_tilde < rmin) rmin = rec.r_tilde;
        }
        row.kappa_max = kmax;
        row.r_tilde_min = rmin;
      }
    }
    result.rows.push_back(row);
  }

  std::string csv = detail::csv_header("compare", sc);
  csv += "kind,pc_steps,newton_iters,s_tot,kappa_max,r_tilde_min,success\n";
  for (const CompareRow& row : result.rows) {
    csv += std::string(to_string(row.kind)) + "," + detail::csv_num(row.pc_steps) + "," +
           detail::csv_num(row.newton_iters) + "," + detail::csv_num(row.s_tot) + "," +
           detail::csv_num(row.kappa_max) + "," + detail::csv_num(row.r_tilde_min) + "," +
           (row.success ? "true" : "false") + "\n";
  }
  result.csv = std::move(csv);
  return result;
}

}  // namespace hcbl
