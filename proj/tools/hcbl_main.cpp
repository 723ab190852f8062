// Command-line front end: solve / trace / metrics / compare subcommands over
// a JSON scenario, writing CSV artifacts into an output directory.
//
// Exit codes: 0 success, 2 config error, 3 solver failure, 4 trace failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hcbl/runner.hpp"
#include "hcbl/scenario.hpp"
#include "hcbl/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitTrace = 4;

struct CommonArgs {
  std::string scenario_path;
  std::string out_dir;
  std::string homotopy;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_homotopy = true) {
  cmd->add_option("--scenario", args.scenario_path, "scenario JSON file")->required();
  cmd->add_option("--out", args.out_dir, "output directory for CSV files")->required();
  if (with_homotopy)
    cmd->add_option("--homotopy", args.homotopy,
                    "override the scenario homotopy kind "
                    "(target_only|vanishing_diffusion|linear_relperm|hull)");
  cmd->add_option("--override", args.overrides,
                  "config override as dotted.key=value (repeatable)");
}

hcbl::Scenario load_with_overrides(const CommonArgs& args) {
  std::ifstream in(args.scenario_path);
  if (!in) throw hcbl::ScenarioError("cannot open scenario file '" + args.scenario_path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw hcbl::ScenarioError("scenario parse error in '" + args.scenario_path + "': " + e.what());
  }
  for (const std::string& ov : args.overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw hcbl::ScenarioError("override '" + ov + "' is not of the form key=value");
    hcbl::apply_override(j, ov.substr(0, eq), ov.substr(eq + 1));
  }
  if (!args.homotopy.empty()) hcbl::apply_override(j, "homotopy.kind", args.homotopy);
  return hcbl::scenario_from_json(j);
}

std::string write_csv(const std::string& out_dir, const std::string& name,
                      const std::string& suffix, const std::string& body) {
  std::filesystem::create_directories(out_dir);
  const std::string path = out_dir + "/" + name + "." + suffix + ".csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << body;
  return path;
}

std::vector<hcbl::HomotopyKind> parse_kinds(const std::string& csv) {
  std::vector<hcbl::HomotopyKind> kinds;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    kinds.push_back(hcbl::detail::parse_homotopy_kind(item, "--kinds"));
  return kinds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("hcbl ") + hcbl::kVersion +
               " - homotopy continuation lab for the implicit Buckley-Leverett step"};
  app.require_subcommand(1);

  CommonArgs solve_args, trace_args, metrics_args, compare_args;
  std::string kinds_csv = "target_only,vanishing_diffusion,linear_relperm,hull";

  CLI::App* solve = app.add_subcommand("solve", "march all time steps, write profiles");
  add_common(solve, solve_args);
  CLI::App* tracecmd = app.add_subcommand("trace", "trace the homotopy curve of one time step");
  add_common(tracecmd, trace_args);
  CLI::App* metrics = app.add_subcommand("metrics", "curvature and predictor radius along the curve");
  add_common(metrics, metrics_args);
  CLI::App* compare = app.add_subcommand("compare", "summary table across homotopy kinds");
  add_common(compare, compare_args, false);
  compare->add_option("--kinds", kinds_csv, "comma list of homotopy kinds to compare");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (solve->parsed()) {
      const hcbl::Scenario sc = load_with_overrides(solve_args);
      const hcbl::SolveResult res = hcbl::run_solve(sc);
      const std::string path = write_csv(solve_args.out_dir, sc.name, "solve", res.csv);
      std::cout << path << "\n";
      if (!res.ok()) {
        std::cerr << "solve failed: " << res.detail << "\n";
        return kExitSolver;
      }
      return kExitOk;
    }
    if (tracecmd->parsed()) {
      const hcbl::Scenario sc = load_with_overrides(trace_args);
      const hcbl::TraceRun res = hcbl::run_trace(sc);
      const std::string path = write_csv(trace_args.out_dir, sc.name, "trace", res.csv);
      std::cout << path << "\n";
      if (res.status == hcbl::RunStatus::solver_failure) {
        std::cerr << "trace failed: " << res.detail << "\n";
        return kExitSolver;
      }
      if (!res.ok()) {
        std::cerr << "trace failed: " << res.detail << "\n";
        return kExitTrace;
      }
      return kExitOk;
    }
    if (metrics->parsed()) {
      const hcbl::Scenario sc = load_with_overrides(metrics_args);
      const hcbl::MetricsRun res = hcbl::run_metrics(sc);
      const std::string path = write_csv(metrics_args.out_dir, sc.name, "metrics", res.csv);
      std::cout << path << "\n";
      if (res.status == hcbl::RunStatus::solver_failure) {
        std::cerr << "metrics failed: " << res.detail << "\n";
        return kExitSolver;
      }
      if (!res.ok()) {
        std::cerr << "metrics failed: " << res.detail << "\n";
        return kExitTrace;
      }
      return kExitOk;
    }
    if (compare->parsed()) {
      const hcbl::Scenario sc = load_with_overrides(compare_args);
      const hcbl::CompareResult res = hcbl::compare_homotopies(sc, parse_kinds(kinds_csv));
      const std::string path = write_csv(compare_args.out_dir, sc.name, "compare", res.csv);
      std::cout << path << "\n";
      return kExitOk;
    }
  } catch (const hcbl::ScenarioError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitConfig;
}
