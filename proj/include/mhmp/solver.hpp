#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mhmp/decision.hpp"
#include "mhmp/problem.hpp"

namespace mhmp {

enum class SolverStatus { kOptimal, kInfeasible, kMaxIterations };

std::string to_string(SolverStatus status);

struct SolverOptions {
  double kkt_tolerance = 1e-6;
  /// Barrier stops once (constraints / t) falls below this.
  double gap_tolerance = 1e-8;
  int max_outer_iterations = 40;
  int max_newton_per_center = 80;
  double barrier_growth = 150.0;
  /// Extra interior starts biased toward the strongest paths.
  int extra_starts = 0;
  bool record_trace = false;
};

struct SolverTraceEntry {
  int outer = 0;
  double barrier_t = 0.0;
  double objective = 0.0;
  int newton_steps = 0;
};

struct SolverResult {
  Decision decision;
  /// sum_q max_b u in seconds (min-latency) or total power in watts.
  double objective = 0.0;
  SolverStatus status = SolverStatus::kOptimal;
  double kkt_residual = 0.0;
  int iterations = 0;
  std::vector<double> worst_latency_s;  ///< per service
  /// Smallest achievable max_q (worst latency / budget); set when a budget
  /// check fails.
  std::optional<double> min_budget_ratio;
  std::vector<SolverTraceEntry> trace;
};

/// Problem 1: full per-relay power, minimize the sum over services of the
/// worst-path latency. Budgets are checked afterwards (status Infeasible
/// when exceeded) unless inst.enforce_budgets makes them hard constraints.
SolverResult solve_min_latency(const ProblemInstance& inst, const SolverOptions& opts = {});

/// Problem 2: minimize total power subject to max_b u_{q,b} <= budget_q and
/// per-relay sum of powers <= P_tot.
SolverResult solve_min_power(const ProblemInstance& inst, const SolverOptions& opts = {});

/// Dispatches on inst.objective.
SolverResult solve(const ProblemInstance& inst, const SolverOptions& opts = {});

/// Largest stationarity/complementarity residual of the epigraph program at
/// a feasible decision, minimized over nonnegative multipliers. Links with
/// zero share and zero power are treated as switched off. Throws ConfigError
/// for an infeasible decision.
double certify_kkt(const ProblemInstance& inst, const Decision& decision);

/// Per-solve diagnostic record as JSON text.
std::string solver_diagnostics_json(const SolverResult& result);

struct OracleOptions {
  double resolution = 1e-3;
  /// Guard on the number of power grid points (times inner solves).
  double max_evaluations = 1e8;
  /// When the full grid exceeds the guard: search a coarse grid, then run
  /// cyclic one-coordinate sweeps at `resolution`.
  bool reduced_sweeps = false;
  double coarse_points = 2000.0;
};

/// Brute-force reference: powers on a grid, exact shares for each grid
/// point by vertex enumeration of the inner linear program. Throws
/// ConfigError when the grid exceeds the guard and sweeps are disabled.
SolverResult grid_oracle(const ProblemInstance& inst, const OracleOptions& opts = {});

struct ConvexityReport {
  std::size_t samples = 0;
  double max_path_violation = 0.0;       ///< over every u_{q,b}, relative
  double max_objective_violation = 0.0;  ///< sum_q max_b u, relative
  double max_power_only_violation = 0.0; ///< shares shared by both points
  double max_share_only_violation = 0.0; ///< powers shared by both points
};

struct ConvexityProbeOptions {
  std::size_t samples = 10000;
  /// Mixing weight for every sample; drawn uniformly on [0, 1] when unset.
  std::optional<double> theta;
};

/// Samples pairs of feasible (share, power) points and checks the convex
/// combination inequality. Shares are link flow fractions in flow mode.
ConvexityReport convexity_probe(const ProblemInstance& inst, const ConvexityProbeOptions& opts,
                                std::mt19937_64& rng);

}  // namespace mhmp
