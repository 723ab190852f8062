#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hcbl/runner.hpp"
#include "hcbl/scenario.hpp"

using namespace hcbl;
using nlohmann::json;

namespace {

const std::string kScenarioDir = HCBL_SCENARIO_DIR;

json minimal_scenario_json() {
  return json::parse(R"({
    "name": "unit",
    "flux": {"n_w": 2.0, "n_n": 2.0, "M": 1.0},
    "grid": {"n_cells": 10, "length": 1.0},
    "time": {"tau": 0.01, "n_steps": 3},
    "bc": {"s_inflow": 1.0},
    "ic": {"s_initial": 0.0},
    "homotopy": {"kind": "hull"}
  })");
}

std::string csv_body(const std::string& csv) {
  std::string body;
  std::stringstream ss(csv);
  std::string line;
  while (std::getline(ss, line))
    if (line.empty() || line[0] != '#') body += line + "\n";
  return body;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

}  // namespace

TEST_CASE("bundled scenarios parse and validate") {
  for (const char* name : {"smooth_small_cfl", "sshape_large_cfl", "degenerate_injection",
                           "degenerate_drainage"}) {
    const Scenario sc = load_scenario(kScenarioDir + "/" + name + ".json");
    CHECK(sc.name == name);
    CHECK_NOTHROW(sc.corey());
    CHECK_NOTHROW(sc.make_grid());
  }
  const Scenario degen = load_scenario(kScenarioDir + "/degenerate_injection.json");
  CHECK(degen.n_w == 2.0);
  CHECK(degen.n_n == 2.0);
  CHECK(degen.viscosity_ratio == 1.0);
  CHECK(degen.s_inflow == 1.0);
  CHECK(degen.s_initial_value == 0.0);
  CHECK(degen.n_cells == 100);
  CHECK(degen.diagnostics().cfl == doctest::Approx(5.0).epsilon(1e-12));

  const Scenario smooth = load_scenario(kScenarioDir + "/smooth_small_cfl.json");
  CHECK(smooth.diagnostics().cfl == doctest::Approx(0.3).epsilon(1e-12));
  const Scenario sshape = load_scenario(kScenarioDir + "/sshape_large_cfl.json");
  CHECK(sshape.diagnostics().cfl == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("missing and malformed fields are reported by name") {
  json j = minimal_scenario_json();
  j["flux"].erase("n_w");
  CHECK_THROWS_WITH_AS(scenario_from_json(j), doctest::Contains("n_w"), ScenarioError);

  json j2 = minimal_scenario_json();
  j2["ic"]["s_initial"] = 1.5;
  CHECK_THROWS_WITH_AS(scenario_from_json(j2), doctest::Contains("s_initial"), ScenarioError);

  json j3 = minimal_scenario_json();
  j3["bc"]["s_inflow"] = -0.2;
  CHECK_THROWS_WITH_AS(scenario_from_json(j3), doctest::Contains("s_inflow"), ScenarioError);

  json j4 = minimal_scenario_json();
  j4["homotopy"]["kind"] = "banana";
  CHECK_THROWS_WITH_AS(scenario_from_json(j4), doctest::Contains("kind"), ScenarioError);

  json j5 = minimal_scenario_json();
  j5["grid"]["n_cells"] = 0;
  CHECK_THROWS_WITH_AS(scenario_from_json(j5), doctest::Contains("n_cells"), ScenarioError);
}

TEST_CASE("unknown keys are config errors") {
  json j = minimal_scenario_json();
  j["solvr"] = json::object();
  CHECK_THROWS_WITH_AS(scenario_from_json(j), doctest::Contains("solvr"), ScenarioError);

  json j2 = minimal_scenario_json();
  j2["flux"]["viscosity"] = 1.0;
  CHECK_THROWS_WITH_AS(scenario_from_json(j2), doctest::Contains("viscosity"), ScenarioError);

  // the tracer corrector comes from the solver block; a nested newton
  // config would silently drift, so it is rejected
  json j3 = minimal_scenario_json();
  j3["trace"] = {{"newton", json::object()}};
  CHECK_THROWS_WITH_AS(scenario_from_json(j3), doctest::Contains("newton"), ScenarioError);
}

TEST_CASE("per-cell initial profiles") {
  json j = minimal_scenario_json();
  j["ic"]["s_initial"] = std::vector<double>{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  const Scenario sc = scenario_from_json(j);
  CHECK_FALSE(sc.ic_uniform);
  CHECK(sc.initial_profile()[3] == 0.3);
  CHECK(sc.initial_mean() == doctest::Approx(0.45));

  j["ic"]["s_initial"] = std::vector<double>{0.0, 0.1};
  CHECK_THROWS_WITH_AS(scenario_from_json(j), doctest::Contains("n_cells"), ScenarioError);
}

TEST_CASE("scenario round-trips losslessly through serialization") {
  const Scenario sc = load_scenario(kScenarioDir + "/degenerate_injection.json");
  const json once = scenario_to_json(sc);
  const Scenario re = scenario_from_json(once);
  const json twice = scenario_to_json(re);
  CHECK(once.dump() == twice.dump());
  CHECK(re.homotopy.kind == sc.homotopy.kind);
  CHECK(re.solver.tol_abs == sc.solver.tol_abs);
  CHECK(re.trace.ds == sc.trace.ds);
}

TEST_CASE("overrides rewrite nested keys before validation") {
  json j = minimal_scenario_json();
  apply_override(j, "solver.max_iter", "40");
  apply_override(j, "homotopy.kind", "linear_relperm");
  apply_override(j, "metrics.ds", "0.125");
  const Scenario sc = scenario_from_json(j);
  CHECK(sc.solver.max_iter == 40);
  CHECK(sc.homotopy.kind == HomotopyKind::linear_relperm);
  CHECK(sc.metrics.ds == 0.125);

  apply_override(j, "grid.n_cells", "0");
  CHECK_THROWS_AS(scenario_from_json(j), ScenarioError);
}

TEST_CASE("trivial dynamics: uniform state equal to the inflow stays put") {
  json j = minimal_scenario_json();
  j["bc"]["s_inflow"] = 0.42;
  j["ic"]["s_initial"] = 0.42;
  j["homotopy"]["kind"] = "target_only";
  const Scenario sc = scenario_from_json(j);
  const SolveResult res = run_solve(sc);
  REQUIRE(res.ok());
  REQUIRE(res.steps.size() == 4);  // initial + three steps
  for (const SolveStep& row : res.steps) {
    CHECK(row.newton_iters == 0);
    for (double v : row.profile) CHECK(v == 0.42);
  }
}

TEST_CASE("solve marches the degenerate scenario with the hull homotopy") {
  Scenario sc = load_scenario(kScenarioDir + "/degenerate_injection.json");
  sc.n_steps = 3;
  const SolveResult res = run_solve(sc);
  REQUIRE(res.ok());
  CHECK(res.cfl == doctest::Approx(5.0));
  // front moved and mass entered the domain
  const std::vector<double>& final = res.steps.back().profile;
  CHECK(final[0] > 0.5);
  double mass = 0.0;
  for (double v : final) mass += v * (sc.length / sc.n_cells);
  CHECK(mass > 0.0);
  CHECK(res.steps.back().pc_steps >= 1);
}

TEST_CASE("trace CSV column contract") {
  Scenario sc = load_scenario(kScenarioDir + "/degenerate_injection.json");
  sc.n_cells = 8;
  sc.n_steps = 1;
  const TraceRun res = run_trace(sc);
  REQUIRE(res.ok());
  const std::string body = csv_body(res.csv);
  std::stringstream ss(body);
  std::string header;
  REQUIRE(std::getline(ss, header));
  CHECK(header == "step_index,s,lambda,corrector_iters,S_1,S_2,S_3,S_4,S_5,S_6,S_7,S_8");
  std::string first;
  REQUIRE(std::getline(ss, first));
  const auto cells = split_csv_line(first);
  REQUIRE(cells.size() == 4 + 8);
  CHECK(cells[0] == "0");
  CHECK(cells[1] == "0");
  CHECK(cells[2] == "1");
  // lambda decreases monotonically down the rows
  double prev_lambda = 2.0;
  std::string line = first;
  do {
    const auto row = split_csv_line(line);
    const double lam = std::stod(row[2]);
    CHECK(lam < prev_lambda);
    prev_lambda = lam;
  } while (std::getline(ss, line) && !line.empty());
  CHECK(prev_lambda == 0.0);
}

TEST_CASE("metrics run emits records with bounded normalized radius") {
  Scenario sc = load_scenario(kScenarioDir + "/degenerate_injection.json");
  sc.n_cells = 40;
  sc.metrics.ds = 0.15;
  sc.metrics.n_gamma = 8;
  const MetricsRun res = run_metrics(sc);
  REQUIRE(res.ok());
  CHECK(res.s_tot > 0.0);
  CHECK_FALSE(res.records.empty());
  for (const MetricsRecord& rec : res.records) {
    CHECK(rec.r_tilde >= 0.0);
    CHECK(rec.r_tilde <= 1.0 + 1e-12);
  }
  CHECK(res.csv.find("# s_tot: ") != std::string::npos);
  CHECK(res.csv.find("s,lambda,kappa,r,r_tilde,gamma_max,err_scale") != std::string::npos);
}

TEST_CASE("compare: baseline row, totals bookkeeping, failure flags") {
  Scenario sc = load_scenario(kScenarioDir + "/degenerate_injection.json");
  sc.n_cells = 40;
  sc.metrics.ds = 0.2;
  sc.metrics.n_gamma = 8;
  const std::vector<HomotopyKind> kinds = {HomotopyKind::target_only, HomotopyKind::hull};
  const CompareResult res = compare_homotopies(sc, kinds);
  REQUIRE(res.rows.size() == 2);

  // CFL-5 degenerate: plain Newton cannot do the step, the hull can
  CHECK_FALSE(res.rows[0].success);
  CHECK(res.rows[1].success);
  CHECK(res.rows[1].pc_steps >= 1);

  // totals equal the sums over the trace CSV rows
  const TraceRun tr = run_trace(sc, HomotopyKind::hull);
  int iters = 0;
  for (const CurvePoint& pt : tr.trace.points) iters += pt.corrector_iters;
  CHECK(res.rows[1].newton_iters == iters);
  CHECK(res.rows[1].pc_steps == static_cast<int>(tr.trace.points.size()) - 1);

  CHECK_THROWS_AS(compare_homotopies(sc, {HomotopyKind::hull}), std::invalid_argument);
}

TEST_CASE("compare baseline has one predictor step when the target is easy") {
  Scenario sc = load_scenario(kScenarioDir + "/smooth_small_cfl.json");
  sc.n_steps = 1;
  sc.metrics.ds = 0.25;
  sc.metrics.n_gamma = 8;
  const CompareResult res =
      compare_homotopies(sc, {HomotopyKind::target_only, HomotopyKind::linear_relperm});
  REQUIRE(res.rows.size() == 2);
  CHECK(res.rows[0].success);
  CHECK(res.rows[0].pc_steps == 1);
}

TEST_CASE("csv outputs are byte-identical across repeated runs") {
  Scenario sc = load_scenario(kScenarioDir + "/degenerate_injection.json");
  sc.n_cells = 30;
  sc.n_steps = 2;
  sc.metrics.ds = 0.2;
  sc.metrics.n_gamma = 8;
  CHECK(run_solve(sc).csv == run_solve(sc).csv);
  CHECK(run_trace(sc).csv == run_trace(sc).csv);
  CHECK(run_metrics(sc).csv == run_metrics(sc).csv);
  const std::vector<HomotopyKind> kinds = {HomotopyKind::target_only, HomotopyKind::hull};
  CHECK(compare_homotopies(sc, kinds).csv == compare_homotopies(sc, kinds).csv);
}

TEST_CASE("every csv carries the resolved configuration header") {
  Scenario sc = load_scenario(kScenarioDir + "/smooth_small_cfl.json");
  sc.n_steps = 1;
  const SolveResult res = run_solve(sc);
  CHECK(res.csv.find("# config: ") != std::string::npos);
  CHECK(res.csv.find("\"tol_abs\"") != std::string::npos);
  // the header parses back into the same scenario
  const std::string key = "# config: ";
  const auto pos = res.csv.find(key) + key.size();
  const auto end = res.csv.find('\n', pos);
  const json j = json::parse(res.csv.substr(pos, end - pos));
  const Scenario re = scenario_from_json(j);
  CHECK(re.name == sc.name);
  CHECK(scenario_to_json(re).dump() == scenario_to_json(sc).dump());
}
