#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hcbl/continuation.hpp"
#include "hcbl/discretization.hpp"
#include "hcbl/metrics.hpp"
#include "hcbl/newton.hpp"

namespace hcbl {

class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void scenario_fail(const std::string& path, const std::string& msg) {
  throw ScenarioError("scenario config error at '" + path + "': " + msg);
}

/// Strict-schema accessor: every key must be consumed, leftovers are
/// reported as unknown (config drift protection).
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) scenario_fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string member(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* optional(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* v = optional(key);
    if (v == nullptr) scenario_fail(path_.empty() ? "<root>" : path_,
                                    "missing required field '" + key + "'");
    return *v;
  }

  double req_number(const std::string& key) { return as_number(require(key), key); }
  double opt_number(const std::string& key, double def) {
    const json* v = optional(key);
    return v ? as_number(*v, key) : def;
  }
  int req_int(const std::string& key) { return as_int(require(key), key); }
  int opt_int(const std::string& key, int def) {
    const json* v = optional(key);
    return v ? as_int(*v, key) : def;
  }
  long opt_long(const std::string& key, long def) {
    const json* v = optional(key);
    return v ? static_cast<long>(as_int(*v, key)) : def;
  }
  std::string req_string(const std::string& key) { return as_string(require(key), key); }
  std::string opt_string(const std::string& key, const std::string& def) {
    const json* v = optional(key);
    return v ? as_string(*v, key) : def;
  }

  void finish() {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) scenario_fail(member(item.key()), "unknown key");
  }

 private:
  double as_number(const json& v, const std::string& key) const {
    if (!v.is_number()) scenario_fail(member(key), "expected a number");
    return v.get<double>();
  }
  int as_int(const json& v, const std::string& key) const {
    if (!v.is_number_integer()) scenario_fail(member(key), "expected an integer");
    return v.get<int>();
  }
  std::string as_string(const json& v, const std::string& key) const {
    if (!v.is_string()) scenario_fail(member(key), "expected a string");
    return v.get<std::string>();
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline HomotopyKind parse_homotopy_kind(const std::string& s, const std::string& path) {
  if (s == "target_only") return HomotopyKind::target_only;
  if (s == "vanishing_diffusion") return HomotopyKind::vanishing_diffusion;
  if (s == "linear_relperm") return HomotopyKind::linear_relperm;
  if (s == "hull") return HomotopyKind::hull;
  scenario_fail(path, "unknown homotopy kind '" + s +
                          "' (expected target_only|vanishing_diffusion|linear_relperm|hull)");
}

inline FluxSign parse_flux_sign(const std::string& s, const std::string& path) {
  if (s == "as_printed") return FluxSign::as_printed;
  if (s == "upwind_standard") return FluxSign::upwind_standard;
  scenario_fail(path, "unknown flux_sign '" + s + "' (expected as_printed|upwind_standard)");
}

inline DiffusionScaling parse_diffusion_scaling(const std::string& s, const std::string& path) {
  if (s == "as_printed") return DiffusionScaling::as_printed;
  if (s == "laplacian") return DiffusionScaling::laplacian;
  scenario_fail(path, "unknown diffusion_scaling '" + s + "' (expected as_printed|laplacian)");
}

inline DiffusionSign parse_diffusion_sign(const std::string& s, const std::string& path) {
  if (s == "as_printed") return DiffusionSign::as_printed;
  if (s == "stabilizing") return DiffusionSign::stabilizing;
  scenario_fail(path, "unknown diffusion_sign '" + s + "' (expected as_printed|stabilizing)");
}

inline TraceMode parse_trace_mode(const std::string& s, const std::string& path) {
  if (s == "lambda_stepping") return TraceMode::lambda_stepping;
  if (s == "arclength_stepping") return TraceMode::arclength_stepping;
  scenario_fail(path, "unknown trace mode '" + s +
                          "' (expected lambda_stepping|arclength_stepping)");
}

inline const char* to_string(FluxSign s) {
  return s == FluxSign::as_printed ? "as_printed" : "upwind_standard";
}
inline const char* to_string(DiffusionScaling s) {
  return s == DiffusionScaling::as_printed ? "as_printed" : "laplacian";
}
inline const char* to_string(DiffusionSign s) {
  return s == DiffusionSign::as_printed ? "as_printed" : "stabilizing";
}
inline const char* to_string(TraceMode m) {
  return m == TraceMode::lambda_stepping ? "lambda_stepping" : "arclength_stepping";
}

}  // namespace detail

struct HomotopySelection {
  HomotopyKind kind = HomotopyKind::hull;
  double omega = kDefaultOmega;
  FluxSign flux_sign = FluxSign::upwind_standard;
  DiffusionScaling diffusion_scaling = DiffusionScaling::as_printed;
  DiffusionSign diffusion_sign = DiffusionSign::stabilizing;
};

struct Diagnostics {
  double cfl = 0.0;
};

/// Fully resolved experiment description: physics, discretization, the
/// homotopy choice and the solver/tracer/metrics settings. Immutable in
/// spirit; loaded from strict JSON.
struct Scenario {
  std::string name;
  double n_w = 2.0;
  double n_n = 2.0;
  double viscosity_ratio = 1.0;
  int n_cells = 100;
  double length = 1.0;
  double tau = 0.025;
  int n_steps = 10;
  double s_inflow = 1.0;
  bool ic_uniform = true;
  double s_initial_value = 0.0;
  std::vector<double> s_initial_cells;
  HomotopySelection homotopy;
  NewtonConfig solver;
  TraceConfig trace;
  int trace_step_index = 0;
  MetricsConfig metrics;

  CoreyFlux corey() const { return CoreyFlux(n_w, n_n, viscosity_ratio); }
  Grid make_grid() const { return Grid(n_cells, length); }

  std::vector<double> initial_profile() const {
    if (ic_uniform) return std::vector<double>(static_cast<std::size_t>(n_cells), s_initial_value);
    return s_initial_cells;
  }

  double initial_mean() const {
    if (ic_uniform) return s_initial_value;
    double acc = 0.0;
    for (double v : s_initial_cells) acc += v;
    return acc / static_cast<double>(s_initial_cells.size());
  }

  TimeStep first_time_step() const { return TimeStep(tau, initial_profile(), s_inflow); }

  Diagnostics diagnostics() const {
    return Diagnostics{tau * max_abs_d1(FluxModel(corey())) / make_grid().dx};
  }

  HomotopyProblem make_problem(HomotopyKind kind, TimeStep step) const {
    const HomotopyProblem::Options opt{homotopy.flux_sign, homotopy.diffusion_scaling,
                                       homotopy.diffusion_sign};
    CoreyFlux target = corey();
    switch (kind) {
      case HomotopyKind::target_only:
        return HomotopyProblem::target_only(target, make_grid(), std::move(step), opt);
      case HomotopyKind::vanishing_diffusion: {
        const double beta = calibrate_beta(FluxModel(target), homotopy.omega);
        return HomotopyProblem::vanishing_diffusion(target, beta, make_grid(), std::move(step),
                                                    opt);
      }
      case HomotopyKind::linear_relperm:
        return HomotopyProblem::linear_relperm(target, make_grid(), std::move(step), opt);
      case HomotopyKind::hull: {
        HullFlux aux = build_hull(target, s_inflow, initial_mean());
        return HomotopyProblem::hull(target, std::move(aux), make_grid(), std::move(step), opt);
      }
    }
    throw std::logic_error("unreachable homotopy kind");
  }

  HomotopyProblem make_problem(HomotopyKind kind) const {
    return make_problem(kind, first_time_step());
  }
};

inline Scenario scenario_from_json(const nlohmann::json& j) {
  using detail::ObjectReader;
  Scenario sc;
  ObjectReader root(j, "");

  sc.name = root.req_string("name");
  if (sc.name.empty()) detail::scenario_fail("name", "must be non-empty");

  {
    ObjectReader flux(root.require("flux"), "flux");
    sc.n_w = flux.req_number("n_w");
    sc.n_n = flux.req_number("n_n");
    sc.viscosity_ratio = flux.req_number("M");
    flux.finish();
    if (!(sc.n_w >= 1.0)) detail::scenario_fail("flux.n_w", "must be >= 1");
    if (!(sc.n_n >= 1.0)) detail::scenario_fail("flux.n_n", "must be >= 1");
    if (!(sc.viscosity_ratio > 0.0)) detail::scenario_fail("flux.M", "must be > 0");
  }
  {
    ObjectReader grid(root.require("grid"), "grid");
    sc.n_cells = grid.req_int("n_cells");
    sc.length = grid.req_number("length");
    grid.finish();
    if (sc.n_cells < 1) detail::scenario_fail("grid.n_cells", "must be >= 1");
    if (!(sc.length > 0.0)) detail::scenario_fail("grid.length", "must be > 0");
  }
  {
    ObjectReader time(root.require("time"), "time");
    sc.tau = time.req_number("tau");
    sc.n_steps = time.req_int("n_steps");
    time.finish();
    if (!(sc.tau > 0.0)) detail::scenario_fail("time.tau", "must be > 0");
    if (sc.n_steps < 1) detail::scenario_fail("time.n_steps", "must be >= 1");
  }
  {
    ObjectReader bc(root.require("bc"), "bc");
    sc.s_inflow = bc.req_number("s_inflow");
    bc.finish();
    if (!(sc.s_inflow >= 0.0 && sc.s_inflow <= 1.0))
      detail::scenario_fail("bc.s_inflow", "must lie in [0,1]");
  }
  {
    ObjectReader ic(root.require("ic"), "ic");
    const nlohmann::json& s0 = ic.require("s_initial");
    if (s0.is_number()) {
      sc.ic_uniform = true;
      sc.s_initial_value = s0.get<double>();
      if (!(sc.s_initial_value >= 0.0 && sc.s_initial_value <= 1.0))
        detail::scenario_fail("ic.s_initial", "must lie in [0,1]");
    } else if (s0.is_array()) {
      sc.ic_uniform = false;
      sc.s_initial_cells.clear();
      for (const auto& v : s0) {
        if (!v.is_number()) detail::scenario_fail("ic.s_initial", "expected numbers");
        sc.s_initial_cells.push_back(v.get<double>());
      }
      if (static_cast<int>(sc.s_initial_cells.size()) != sc.n_cells)
        detail::scenario_fail("ic.s_initial", "per-cell list must have grid.n_cells entries");
      for (double v : sc.s_initial_cells)
        if (!(v >= 0.0 && v <= 1.0)) detail::scenario_fail("ic.s_initial", "must lie in [0,1]");
    } else {
      detail::scenario_fail("ic.s_initial", "expected a number or a per-cell array");
    }
    ic.finish();
  }
  {
    ObjectReader hom(root.require("homotopy"), "homotopy");
    sc.homotopy.kind = detail::parse_homotopy_kind(hom.req_string("kind"), "homotopy.kind");
    sc.homotopy.omega = hom.opt_number("omega", kDefaultOmega);
    sc.homotopy.flux_sign =
        detail::parse_flux_sign(hom.opt_string("flux_sign", "upwind_standard"),
                                "homotopy.flux_sign");
    sc.homotopy.diffusion_scaling = detail::parse_diffusion_scaling(
        hom.opt_string("diffusion_scaling", "as_printed"), "homotopy.diffusion_scaling");
    sc.homotopy.diffusion_sign = detail::parse_diffusion_sign(
        hom.opt_string("diffusion_sign", "stabilizing"), "homotopy.diffusion_sign");
    hom.finish();
    if (!(sc.homotopy.omega > 0.0)) detail::scenario_fail("homotopy.omega", "must be > 0");
  }
  if (const nlohmann::json* s = root.optional("solver")) {
    ObjectReader solver(*s, "solver");
    sc.solver.tol_abs = solver.opt_number("tol_abs", sc.solver.tol_abs);
    sc.solver.tol_step = solver.opt_number("tol_step", sc.solver.tol_step);
    sc.solver.max_iter = solver.opt_int("max_iter", sc.solver.max_iter);
    sc.solver.diverge_factor = solver.opt_number("diverge_factor", sc.solver.diverge_factor);
    solver.finish();
    try {
      sc.solver.validate();
    } catch (const std::invalid_argument& e) {
      detail::scenario_fail("solver", e.what());
    }
  }
  if (const nlohmann::json* t = root.optional("trace")) {
    ObjectReader trace(*t, "trace");
    sc.trace.dlambda_init = trace.opt_number("dlambda_init", sc.trace.dlambda_init);
    sc.trace.dlambda_min = trace.opt_number("dlambda_min", sc.trace.dlambda_min);
    sc.trace.dlambda_max = trace.opt_number("dlambda_max", sc.trace.dlambda_max);
    sc.trace.grow = trace.opt_number("grow", sc.trace.grow);
    sc.trace.shrink = trace.opt_number("shrink", sc.trace.shrink);
    sc.trace.mode = detail::parse_trace_mode(
        trace.opt_string("mode", detail::to_string(sc.trace.mode)), "trace.mode");
    sc.trace.ds = trace.opt_number("ds", sc.trace.ds);
    sc.trace.max_points = trace.opt_long("max_points", sc.trace.max_points);
    sc.trace_step_index = trace.opt_int("time_step_index", sc.trace_step_index);
    trace.finish();
    if (sc.trace_step_index < 0 || sc.trace_step_index >= sc.n_steps)
      detail::scenario_fail("trace.time_step_index", "must lie in [0, time.n_steps)");
  }
  if (const nlohmann::json* m = root.optional("metrics")) {
    ObjectReader metrics(*m, "metrics");
    sc.metrics.ds = metrics.opt_number("ds", sc.metrics.ds);
    sc.metrics.n_gamma = metrics.opt_int("n_gamma", sc.metrics.n_gamma);
    sc.metrics.fd_step = metrics.opt_number("fd_step", sc.metrics.fd_step);
    metrics.finish();
    try {
      sc.metrics.validate();
    } catch (const std::invalid_argument& e) {
      detail::scenario_fail("metrics", e.what());
    }
  }
  root.finish();

  // the tracer's corrector always uses the scenario solver settings
  sc.trace.newton = sc.solver;
  try {
    sc.trace.validate();
  } catch (const std::invalid_argument& e) {
    detail::scenario_fail("trace", e.what());
  }
  return sc;
}

inline nlohmann::json scenario_to_json(const Scenario& sc) {
  nlohmann::json j;
  j["name"] = sc.name;
  j["flux"] = {{"n_w", sc.n_w}, {"n_n", sc.n_n}, {"M", sc.viscosity_ratio}};
  j["grid"] = {{"n_cells", sc.n_cells}, {"length", sc.length}};
  j["time"] = {{"tau", sc.tau}, {"n_steps", sc.n_steps}};
  j["bc"] = {{"s_inflow", sc.s_inflow}};
  if (sc.ic_uniform)
    j["ic"] = {{"s_initial", sc.s_initial_value}};
  else
    j["ic"] = {{"s_initial", sc.s_initial_cells}};
  j["homotopy"] = {{"kind", to_string(sc.homotopy.kind)},
                   {"omega", sc.homotopy.omega},
                   {"flux_sign", detail::to_string(sc.homotopy.flux_sign)},
                   {"diffusion_scaling", detail::to_string(sc.homotopy.diffusion_scaling)},
                   {"diffusion_sign", detail::to_string(sc.homotopy.diffusion_sign)}};
  j["solver"] = {{"tol_abs", sc.solver.tol_abs},
                 {"tol_step", sc.solver.tol_step},
                 {"max_iter", sc.solver.max_iter},
                 {"diverge_factor", sc.solver.diverge_factor}};
  j["trace"] = {{"dlambda_init", sc.trace.dlambda_init},
                {"dlambda_min", sc.trace.dlambda_min},
                {"dlambda_max", sc.trace.dlambda_max},
                {"grow", sc.trace.grow},
                {"shrink", sc.trace.shrink},
                {"mode", detail::to_string(sc.trace.mode)},
                {"ds", sc.trace.ds},
                {"max_points", sc.trace.max_points},
                {"time_step_index", sc.trace_step_index}};
  j["metrics"] = {{"ds", sc.metrics.ds},
                  {"n_gamma", sc.metrics.n_gamma},
                  {"fd_step", sc.metrics.fd_step}};
  return j;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError("scenario parse error in '" + path + "': " + e.what());
  }
  return scenario_from_json(j);
}

/// Applies "dotted.path=value" style overrides to the raw JSON before
/// validation. The value is parsed as JSON when possible, else kept as a
/// string.
inline void apply_override(nlohmann::json& j, const std::string& key_path,
                           const std::string& value) {
  if (key_path.empty()) throw ScenarioError("override with empty key");
  std::string pointer = "/";
  for (char c : key_path) pointer += (c == '.') ? '/' : c;
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(value);
  } catch (const nlohmann::json::parse_error&) {
    parsed = value;
  }
  j[nlohmann::json::json_pointer(pointer)] = parsed;
}

}  // namespace hcbl
