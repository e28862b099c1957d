#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mhmp/decision.hpp"
#include "mhmp/problem.hpp"
#include "mhmp/solver.hpp"
#include "mhmp/topology.hpp"

namespace mhmp {

enum class SchedulerKind {
  kSpLl,
  kSpLp,
  kPs1Ll,
  kPs2Ll,
  kPs1Lp,
  kPs2Lp,
  kTwoPathLl,
  kMhmpLl,
  kMhmpLp,
  kAllp,
};

/// Lower-case names: sp_ll, sp_lp, ps1_ll, ps2_ll, ps1_lp, ps2_lp,
/// two_path_ll, mhmp_ll, mhmp_lp, allp.
std::string to_string(SchedulerKind kind);
/// Throws ConfigError listing the valid names.
SchedulerKind parse_scheduler_kind(std::string_view name);
std::span<const SchedulerKind> all_scheduler_kinds();
/// Whether the scheme minimizes power under the latency budgets.
bool is_min_power(SchedulerKind kind);

enum class AllpMode { kLowLatency, kLowPower };

std::string to_string(AllpMode mode);

struct ScheduleResult {
  Decision decision;
  SolverStatus status = SolverStatus::kOptimal;
  /// No decision met the scheme's requirements; `decision` is the
  /// best-effort full-power fallback.
  bool flagged = false;
  /// Objective the scheme optimized, evaluated on `decision`.
  double objective = 0.0;
  /// Paths the scheme may use; empty means all.
  std::vector<std::size_t> support;
  PowerRule rule = PowerRule::kEqualTotal;
  /// Per-transmitter cap the decision obeys.
  double power_cap_w = 0.0;
  std::optional<AllpMode> mode;
  double pressure = 0.0;
};

/// Single-path decision: all traffic on `path`, `power_w` on each of its
/// links. Off-path transmitters stay silent.
Decision single_path_decision(const ProblemInstance& inst, std::size_t path, double power_w);

/// Path with the lowest sum over services of full-power latency, averaged
/// over the warmup instances. Ties go to the lowest index.
std::size_t choose_fixed_path(std::span<const ProblemInstance> warmup);

ScheduleResult sp_schedule(const ProblemInstance& inst, Objective objective, std::size_t path,
                           const SolverOptions& opts = {});

/// Scheme 1 LL: greedy per-hop route at full power. Scheme 1 LP: best pair
/// of paths by minimum power. Scheme 2 LL: best pair of paths with equal
/// power split. Scheme 2 LP: the two non-crossing paths.
ScheduleResult ps_schedule(const ProblemInstance& inst, int scheme, Objective objective,
                           const SolverOptions& opts = {});

/// Best pair of paths with jointly optimized splits and powers.
ScheduleResult two_path_schedule(const ProblemInstance& inst, const SolverOptions& opts = {});

ScheduleResult mhmp_schedule(const ProblemInstance& inst, Objective objective, const SolverOptions& opts = {});

struct AllpConfig {
  double delta = 0.8;
  double delta_p_w = 0.0;
  double delta_l_s = 0.005;
  /// Hard per-transmitter cap; unset means P_tot.
  std::optional<double> p_hard_w;
  /// Working budgets never exceed this multiple of the nominal budget.
  double l_ceiling_factor = 2.0;

  void validate() const;
};

struct AllpState {
  AllpConfig config;
  AllpMode mode = AllpMode::kLowPower;
  double power_cap_w = 0.0;
  std::vector<double> working_budgets_s;
  std::vector<AllpMode> trace;

  static AllpState initial(const AllpConfig& config, double p_tot_w, std::span<const double> budgets_s);
};

/// One block of the adaptive scheduler. Pressure is the largest ratio of
/// the min-latency worst-path latency at the current cap to the nominal
/// budget; above delta the block runs in low-latency mode.
std::pair<ScheduleResult, AllpState> allp_step(const AllpState& state, const ProblemInstance& inst,
                                               const SolverOptions& opts = {});

/// Stateful per-replica scheduler: holds the fixed SP path and ALLP state.
class Scheduler {
 public:
  Scheduler(SchedulerKind kind, const AllpConfig& allp = {}, const SolverOptions& opts = {});

  SchedulerKind kind() const { return kind_; }
  /// SP only: fixes the path from the warmup instances. Must run before the
  /// first step of an SP scheduler.
  void warm_up(std::span<const ProblemInstance> warmup);
  std::optional<std::size_t> fixed_path() const { return fixed_path_; }

  ScheduleResult step(const ProblemInstance& inst);

 private:
  SchedulerKind kind_;
  AllpConfig allp_config_;
  SolverOptions opts_;
  std::optional<std::size_t> fixed_path_;
  std::optional<AllpState> allp_;
};

}  // namespace mhmp
