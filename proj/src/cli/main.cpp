#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mhmp/engine.hpp"
#include "mhmp/errors.hpp"
#include "mhmp/scenario.hpp"
#include "mhmp/schedulers.hpp"
#include "mhmp/solver.hpp"

namespace fs = std::filesystem;
using mhmp::Scenario;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitInternal = 3;

// Thrown when a check command finishes but misses its thresholds.
struct CheckFailed {
  std::string message;
};

void print_error(const std::string& kind, const std::string& message, const std::vector<std::string>& keys = {}) {
  nlohmann::ordered_json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  if (!keys.empty()) j["error"]["keys"] = keys;
  std::cerr << j.dump() << "\n";
}

fs::path output_dir(const std::string& flag) {
  fs::path dir = flag;
  if (dir.empty()) {
    const char* env = std::getenv("MHMP_OUT_DIR");
    dir = env && *env ? env : "out";
  }
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string fixed(double v, int digits) {
  if (!std::isfinite(v)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<mhmp::SchedulerKind> parse_kinds(const std::vector<std::string>& names) {
  std::vector<mhmp::SchedulerKind> kinds;
  for (const auto& n : names) kinds.push_back(mhmp::parse_scheduler_kind(n));
  return kinds;
}

// Scheme table: per-service latency and total power with 95% intervals.
void print_table(const Scenario& sc, const std::vector<mhmp::SchemeSummary>& res) {
  std::printf("%-12s", "scheme");
  for (const auto& s : sc.services) std::printf("  %-22s", ("L" + std::to_string(s.id) + " (ms)").c_str());
  std::printf("  %-22s  %s\n", "P (mW)", "flagged");
  for (const auto& r : res) {
    std::printf("%-12s", mhmp::to_string(r.kind).c_str());
    for (const auto& l : r.latency_s)
      std::printf("  %-22s", (fixed(l.mean * 1e3, 3) + " +/- " + fixed(l.ci95 * 1e3, 3)).c_str());
    std::printf("  %-22s  %zu\n", (fixed(r.power_w.mean * 1e3, 3) + " +/- " + fixed(r.power_w.ci95 * 1e3, 3)).c_str(),
                r.flagged_blocks);
  }
}

struct Common {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool serial = false;

  Scenario load() const {
    Scenario sc = scenario.empty() ? mhmp::default_scenario() : mhmp::load_scenario(scenario);
    if (seed) sc.seed = *seed;
    return sc;
  }
  mhmp::Execution exec() const { return serial ? mhmp::Execution::kSerial : mhmp::Execution::kParallel; }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("scenario", c.scenario, "Scenario JSON file (default scenario when omitted)");
  cmd->add_option("--seed", c.seed, "Override the scenario seed");
  cmd->add_option("--out", c.out, "Output directory (default $MHMP_OUT_DIR, then ./out)");
  cmd->add_flag("--serial", c.serial, "Run replicas on one thread");
}

void write_run_outputs(const fs::path& dir, const Scenario& sc, const std::vector<mhmp::SchemeSummary>& res) {
  write_file(dir / "summary.json", mhmp::summary_json(sc, res));
  write_file(dir / "metrics.csv", mhmp::metrics_csv(res));
  write_file(dir / "cdf.csv", mhmp::cdf_csv(res, sc.cdf_points));
}

int cmd_run(const Common& c, const std::string& scheme) {
  const Scenario sc = c.load();
  const std::vector kinds{mhmp::parse_scheduler_kind(scheme)};
  const auto res = mhmp::run_schemes(sc, kinds, c.exec());
  const fs::path dir = output_dir(c.out);
  write_run_outputs(dir, sc, res);
  print_table(sc, res);
  std::cout << "wrote " << dir.string() << "\n";
  return kExitOk;
}

int cmd_compare(const Common& c, const std::vector<std::string>& schemes) {
  const Scenario sc = c.load();
  std::vector<mhmp::SchedulerKind> kinds = parse_kinds(schemes);
  if (kinds.empty()) kinds.assign(mhmp::all_scheduler_kinds().begin(), mhmp::all_scheduler_kinds().end());
  const mhmp::RecordOptions rec{.decisions = true, .channels = true};
  const auto res = mhmp::run_schemes(sc, kinds, c.exec(), rec);
  const fs::path dir = output_dir(c.out);
  write_run_outputs(dir, sc, res);
  write_file(dir / "trajectories.csv", mhmp::trajectories_csv(sc.topology(), res));
  write_file(dir / "channel.csv", mhmp::channel_csv(res.front().runs.front()));
  print_table(sc, res);
  std::cout << "wrote " << dir.string() << "\n";
  return kExitOk;
}

std::pair<int, int> parse_hops(const std::string& text) {
  const auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      const int h = std::stoi(text);
      return {h, h};
    }
    return {std::stoi(text.substr(0, dots)), std::stoi(text.substr(dots + 2))};
  } catch (const std::exception&) {
    throw mhmp::ConfigError("--hops must look like 1..5");
  }
}

int cmd_sweep(const Common& c, const std::string& hops, const std::string& metric_name) {
  const Scenario sc = c.load();
  const auto [lo, hi] = parse_hops(hops);
  const auto metric = mhmp::parse_sweep_metric(metric_name);
  const auto rows = mhmp::hop_sweep(sc, lo, hi, metric, c.exec());
  const fs::path dir = output_dir(c.out);
  write_file(dir / "sweep.csv", mhmp::sweep_csv(metric, rows));
  std::printf("%-5s  %-10s  %-10s  %s\n", "H", "savings", "ci95", metric == mhmp::SweepMetric::kLatency ? "sp/mhmp (ms)" : "sp/mhmp (mW)");
  for (const auto& r : rows)
    std::printf("%-5d  %-10s  %-10s  %s / %s\n", r.hops, fixed(r.savings.mean, 4).c_str(),
                fixed(r.savings.ci95, 4).c_str(), fixed(r.sp_value * 1e3, 3).c_str(),
                fixed(r.mhmp_value * 1e3, 3).c_str());
  std::cout << "wrote " << dir.string() << "\n";
  return kExitOk;
}

struct OracleArgs {
  std::size_t instances = 3;
  double resolution = 0.01;
  std::size_t samples = 1000;
  double max_gap = 0.01;
  double max_violation = 1e-8;
  bool skip_convexity = false;
};

int cmd_oracle_check(const Common& c, const OracleArgs& a) {
  const Scenario sc = c.load();
  if (a.instances < 1) throw mhmp::ConfigError("--instances must be >= 1");
  if (a.instances > sc.blocks) throw mhmp::ConfigError("--instances exceeds the scenario's block count");
  const auto topo = std::make_shared<const mhmp::Topology>(sc.topology());
  mhmp::OracleOptions oo;
  oo.resolution = a.resolution;
  oo.reduced_sweeps = true;

  nlohmann::ordered_json report;
  auto& rows = report["instances"] = nlohmann::ordered_json::array();
  double max_gap = 0.0;
  std::optional<mhmp::ProblemInstance> first;
  for (std::size_t i = 0; i < a.instances; ++i) {
    const auto inst = mhmp::block_instance(sc, topo, mhmp::realize_block(sc, *topo, 0, i));
    if (!first) first = inst;
    const auto solved = mhmp::solve_min_latency(inst, sc.solver);
    const auto oracle = mhmp::grid_oracle(inst, oo);
    const double denom = std::max(std::abs(oracle.objective), 1e-15);
    const double gap = (solved.objective - oracle.objective) / denom;
    max_gap = std::max(max_gap, gap);
    rows.push_back({{"block", i},
                    {"solver_objective_s", solved.objective},
                    {"oracle_objective_s", oracle.objective},
                    {"relative_gap", gap},
                    {"kkt_residual", solved.kkt_residual}});
    std::printf("block %zu: solver %.6g s, oracle %.6g s, gap %+.3e\n", i, solved.objective, oracle.objective, gap);
  }
  report["max_relative_gap"] = max_gap;
  std::printf("max solver-vs-oracle gap: %.3e (threshold %.3e)\n", max_gap, a.max_gap);

  std::mt19937_64 rng(sc.seed);
  const auto probe = mhmp::convexity_probe(*first, {.samples = a.samples, .theta = std::nullopt}, rng);
  report["convexity"] = {{"samples", probe.samples},
                         {"max_path_violation", probe.max_path_violation},
                         {"max_objective_violation", probe.max_objective_violation},
                         {"max_power_only_violation", probe.max_power_only_violation},
                         {"max_share_only_violation", probe.max_share_only_violation},
                         {"checked", !a.skip_convexity}};
  std::printf("max convexity violation: %.3e (threshold %.3e%s)\n", probe.max_path_violation, a.max_violation,
              a.skip_convexity ? ", not enforced" : "");

  const fs::path dir = output_dir(c.out);
  write_file(dir / "oracle_check.json", report.dump(2) + "\n");

  std::string failed;
  if (!(max_gap <= a.max_gap)) failed += "solver-vs-oracle gap above threshold; ";
  if (!a.skip_convexity && !(probe.max_path_violation <= a.max_violation))
    failed += "convexity violation above threshold; ";
  if (!failed.empty()) throw CheckFailed{failed.substr(0, failed.size() - 2)};
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-hop multi-path vehicular relay scheduling simulator"};
  app.require_subcommand(1);

  Common run_c, cmp_c, sweep_c, oracle_c;
  std::string scheme;
  auto* run = app.add_subcommand("run", "Simulate one scheme");
  add_common(run, run_c);
  run->add_option("--scheme", scheme, "Scheme name")->required();

  std::vector<std::string> schemes;
  auto* cmp = app.add_subcommand("compare", "Simulate several schemes on shared realizations");
  add_common(cmp, cmp_c);
  cmp->add_option("--schemes", schemes, "Comma-separated scheme names (default all)")->delimiter(',');

  std::string hops = "1..5", metric = "latency";
  auto* sweep = app.add_subcommand("sweep", "Savings of MHMP over SP against hop count");
  add_common(sweep, sweep_c);
  sweep->add_option("--hops", hops, "Hop range a..b counted in relay layers");
  sweep->add_option("--metric", metric, "latency or power");

  OracleArgs oa;
  auto* oracle = app.add_subcommand("oracle-check", "Compare the solver with the grid oracle");
  add_common(oracle, oracle_c);
  oracle->add_option("--instances", oa.instances, "Blocks of replica 0 to check");
  oracle->add_option("--resolution", oa.resolution, "Oracle power grid step as a fraction of P_tot");
  oracle->add_option("--samples", oa.samples, "Convexity probe samples");
  oracle->add_option("--max-gap", oa.max_gap, "Largest allowed relative gap");
  oracle->add_option("--max-violation", oa.max_violation, "Largest allowed convexity violation");
  oracle->add_flag("--skip-convexity", oa.skip_convexity, "Report the convexity probe without enforcing it");

  std::string default_out;
  auto* def = app.add_subcommand("default-scenario", "Print the default scenario JSON");
  def->add_option("--out", default_out, "Write to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_c, scheme);
    if (*cmp) return cmd_compare(cmp_c, schemes);
    if (*sweep) return cmd_sweep(sweep_c, hops, metric);
    if (*oracle) return cmd_oracle_check(oracle_c, oa);
    if (*def) {
      const std::string text = mhmp::scenario_json(mhmp::default_scenario()).dump(2) + "\n";
      if (default_out.empty())
        std::cout << text;
      else
        write_file(default_out, text);
      return kExitOk;
    }
  } catch (const mhmp::ScenarioError& e) {
    print_error("config", e.what(), e.keys());
    return kExitConfig;
  } catch (const mhmp::ConfigError& e) {
    print_error("config", e.what());
    return kExitConfig;
  } catch (const mhmp::InfeasibleError& e) {
    print_error("infeasible", e.what());
    return kExitInfeasible;
  } catch (const mhmp::InfeasibleLinkError& e) {
    print_error("infeasible", e.what());
    return kExitInfeasible;
  } catch (const CheckFailed& e) {
    print_error("check_failed", e.message);
    return kExitInfeasible;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return kExitInternal;
  }
  return kExitInternal;
}
