#include "mhmp/schedulers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "mhmp/errors.hpp"

namespace mhmp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr std::array<SchedulerKind, 10> kKinds{
    SchedulerKind::kSpLl,  SchedulerKind::kSpLp,      SchedulerKind::kPs1Ll,  SchedulerKind::kPs2Ll,
    SchedulerKind::kPs1Lp, SchedulerKind::kPs2Lp,     SchedulerKind::kTwoPathLl, SchedulerKind::kMhmpLl,
    SchedulerKind::kMhmpLp, SchedulerKind::kAllp};

ProblemInstance variant(const ProblemInstance& inst, Objective objective, std::vector<std::size_t> paths,
                        PowerPolicy policy = PowerPolicy::kOptimize) {
  ProblemInstance p = inst;
  p.objective = objective;
  p.allowed_paths = std::move(paths);
  p.power_policy = policy;
  p.enforce_budgets = false;
  return p;
}

PowerRule rule_for(Objective objective) {
  return objective == Objective::kMinPower ? PowerRule::kAtMostTotal : PowerRule::kEqualTotal;
}

ScheduleResult from_solver(const ProblemInstance& p, SolverResult r) {
  ScheduleResult s;
  s.decision = std::move(r.decision);
  s.status = r.status;
  s.objective = objective_value(p, s.decision);
  s.support = p.allowed_paths;
  s.rule = rule_for(p.objective);
  s.power_cap_w = p.p_tot_w;
  return s;
}

// Min-power fell through: full-power min latency on the same support.
ScheduleResult fallback(const ProblemInstance& p, const SolverOptions& opts) {
  ProblemInstance ll = p;
  ll.objective = Objective::kMinLatency;
  ScheduleResult s = from_solver(ll, solve_min_latency(ll, opts));
  s.status = SolverStatus::kInfeasible;
  s.flagged = true;
  return s;
}

ScheduleResult solve_on(const ProblemInstance& p, const SolverOptions& opts) {
  if (p.objective == Objective::kMinLatency) return from_solver(p, solve_min_latency(p, opts));
  SolverResult r = solve_min_power(p, opts);
  if (r.status == SolverStatus::kInfeasible) return fallback(p, opts);
  return from_solver(p, std::move(r));
}

std::size_t path_of(const Topology& topo, std::span<const std::size_t> links) {
  std::size_t b = 0;
  for (std::size_t e : links) {
    const LinkId& l = topo.link(e);
    if (l.layer < topo.relay_layers() && l.rx == 1) b |= std::size_t{1} << l.layer;
  }
  return b;
}

ScheduleResult best_pair(const ProblemInstance& inst, Objective objective, PowerPolicy policy,
                         const SolverOptions& opts) {
  const std::size_t paths = inst.topo->path_count();
  std::optional<ScheduleResult> best;
  for (std::size_t b1 = 0; b1 < paths; ++b1)
    for (std::size_t b2 = b1 + 1; b2 < paths; ++b2) {
      const ProblemInstance p = variant(inst, objective, {b1, b2}, policy);
      ScheduleResult s;
      if (objective == Objective::kMinLatency) {
        s = from_solver(p, solve_min_latency(p, opts));
      } else {
        SolverResult r = solve_min_power(p, opts);
        if (r.status == SolverStatus::kInfeasible) continue;
        s = from_solver(p, std::move(r));
      }
      if (!std::isfinite(s.objective)) continue;
      if (!best || s.objective < best->objective) best = std::move(s);
    }
  if (best) return *best;
  if (objective == Objective::kMinPower) {
    ScheduleResult s = best_pair(inst, Objective::kMinLatency, policy, opts);
    s.status = SolverStatus::kInfeasible;
    s.flagged = true;
    return s;
  }
  throw InfeasibleError("no pair of paths can carry the traffic");
}

}  // namespace

std::string to_string(SchedulerKind kind) {
  switch (kind) {
    case SchedulerKind::kSpLl: return "sp_ll";
    case SchedulerKind::kSpLp: return "sp_lp";
    case SchedulerKind::kPs1Ll: return "ps1_ll";
    case SchedulerKind::kPs2Ll: return "ps2_ll";
    case SchedulerKind::kPs1Lp: return "ps1_lp";
    case SchedulerKind::kPs2Lp: return "ps2_lp";
    case SchedulerKind::kTwoPathLl: return "two_path_ll";
    case SchedulerKind::kMhmpLl: return "mhmp_ll";
    case SchedulerKind::kMhmpLp: return "mhmp_lp";
    case SchedulerKind::kAllp: return "allp";
  }
  return "unknown";
}

SchedulerKind parse_scheduler_kind(std::string_view name) {
  std::string valid;
  for (SchedulerKind k : kKinds) {
    if (to_string(k) == name) return k;
    valid += (valid.empty() ? "" : ", ") + to_string(k);
  }
  throw ConfigError("unknown scheme '" + std::string(name) + "'; valid schemes: " + valid);
}

std::span<const SchedulerKind> all_scheduler_kinds() { return kKinds; }

bool is_min_power(SchedulerKind kind) {
  return kind == SchedulerKind::kSpLp || kind == SchedulerKind::kPs1Lp || kind == SchedulerKind::kPs2Lp ||
         kind == SchedulerKind::kMhmpLp;
}

std::string to_string(AllpMode mode) { return mode == AllpMode::kLowLatency ? "LL" : "LP"; }

Decision single_path_decision(const ProblemInstance& inst, std::size_t path, double power_w) {
  const Topology& topo = *inst.topo;
  if (path >= topo.path_count()) throw ConfigError("path index out of range");
  Decision d = uniform_decision(topo, inst.services(), 0.0);
  for (std::size_t e : topo.path_link_indices(path)) {
    const std::size_t v = topo.link_tx_node(e);
    for (std::size_t f : topo.out_links(v))
      for (std::size_t q = 0; q < inst.services(); ++q) d.a(f, q) = f == e ? 1.0 : 0.0;
    d.power_w[e] = power_w;
  }
  return d;
}

std::size_t choose_fixed_path(std::span<const ProblemInstance> warmup) {
  if (warmup.empty()) throw ConfigError("fixed-path choice needs at least one warmup block");
  const std::size_t paths = warmup.front().topo->path_count();
  std::size_t best = 0;
  double best_value = kInf;
  for (std::size_t b = 0; b < paths; ++b) {
    double total = 0.0;
    for (const ProblemInstance& inst : warmup) {
      ProblemInstance ll = inst;
      ll.objective = Objective::kMinLatency;
      total += objective_value(ll, single_path_decision(inst, b, inst.p_tot_w));
    }
    const double mean = total / static_cast<double>(warmup.size());
    if (mean < best_value) {
      best_value = mean;
      best = b;
    }
  }
  return best;
}

ScheduleResult sp_schedule(const ProblemInstance& inst, Objective objective, std::size_t path,
                           const SolverOptions& opts) {
  const ProblemInstance p = variant(inst, objective, {path});
  if (objective == Objective::kMinPower) return solve_on(p, opts);
  ScheduleResult s;
  s.decision = single_path_decision(inst, path, inst.p_tot_w);
  s.objective = objective_value(p, s.decision);
  s.support = {path};
  s.power_cap_w = inst.p_tot_w;
  return s;
}

ScheduleResult ps_schedule(const ProblemInstance& inst, int scheme, Objective objective,
                           const SolverOptions& opts) {
  if (scheme != 1 && scheme != 2) throw ConfigError("path-selection scheme must be 1 or 2");
  const Topology& topo = *inst.topo;
  if (scheme == 1 && objective == Objective::kMinLatency) {
    std::vector<std::size_t> route;
    std::size_t v = 0;
    for (int layer = 0; layer <= topo.relay_layers(); ++layer) {
      std::size_t best = topo.out_links(v).front();
      for (std::size_t e : topo.out_links(v))
        if (inst.curves[e].rate(inst.p_tot_w) > inst.curves[best].rate(inst.p_tot_w)) best = e;
      route.push_back(best);
      if (auto rx = topo.link_rx_node(best)) v = *rx;
    }
    return sp_schedule(inst, objective, path_of(topo, route), opts);
  }
  if (scheme == 1) return best_pair(inst, objective, PowerPolicy::kOptimize, opts);
  if (objective == Objective::kMinLatency) return best_pair(inst, objective, PowerPolicy::kEqualSplit, opts);
  return solve_on(variant(inst, objective, {0, topo.path_count() - 1}), opts);
}

ScheduleResult two_path_schedule(const ProblemInstance& inst, const SolverOptions& opts) {
  return best_pair(inst, Objective::kMinLatency, PowerPolicy::kOptimize, opts);
}

ScheduleResult mhmp_schedule(const ProblemInstance& inst, Objective objective, const SolverOptions& opts) {
  return solve_on(variant(inst, objective, {}), opts);
}

void AllpConfig::validate() const {
  if (!(delta > 0.0)) throw ConfigError("allp delta must be positive");
  if (!(delta_p_w >= 0.0)) throw ConfigError("allp delta_p_w must be nonnegative");
  if (!(delta_l_s >= 0.0)) throw ConfigError("allp delta_l_s must be nonnegative");
  if (p_hard_w && !(*p_hard_w > 0.0)) throw ConfigError("allp p_hard must be positive");
  if (!(l_ceiling_factor >= 1.0)) throw ConfigError("allp l_ceiling_factor must be at least 1");
}

AllpState AllpState::initial(const AllpConfig& config, double p_tot_w, std::span<const double> budgets_s) {
  config.validate();
  if (config.p_hard_w && *config.p_hard_w < p_tot_w) throw ConfigError("allp p_hard must be at least P_tot");
  AllpState s;
  s.config = config;
  s.power_cap_w = p_tot_w;
  s.working_budgets_s.assign(budgets_s.begin(), budgets_s.end());
  return s;
}

std::pair<ScheduleResult, AllpState> allp_step(const AllpState& state, const ProblemInstance& inst,
                                               const SolverOptions& opts) {
  AllpState next = state;
  if (next.working_budgets_s.size() != inst.services()) throw ConfigError("allp state does not match services");
  const double p_hard = state.config.p_hard_w.value_or(inst.p_tot_w);

  ProblemInstance ll = variant(inst, Objective::kMinLatency, {});
  ll.p_tot_w = state.power_cap_w;
  ScheduleResult s = from_solver(ll, solve_min_latency(ll, opts));
  double pressure = 0.0;
  const auto worst = evaluate_latency(ll, s.decision).worst_latency_s;
  for (std::size_t q = 0; q < inst.services(); ++q)
    if (inst.service_active(q)) pressure = std::max(pressure, worst[q] / inst.budgets_s[q]);

  if (pressure > state.config.delta) {
    next.mode = AllpMode::kLowLatency;
    if (s.status == SolverStatus::kInfeasible && state.power_cap_w < p_hard) {
      ll.p_tot_w = std::min(state.power_cap_w + state.config.delta_p_w, p_hard);
      s = from_solver(ll, solve_min_latency(ll, opts));
    }
    s.flagged = s.status == SolverStatus::kInfeasible;
  } else {
    next.mode = AllpMode::kLowPower;
    ProblemInstance lp = variant(inst, Objective::kMinPower, {});
    lp.p_tot_w = state.power_cap_w;
    lp.budgets_s = state.working_budgets_s;
    SolverResult r = solve_min_power(lp, opts);
    if (r.status == SolverStatus::kInfeasible) {
      for (std::size_t q = 0; q < lp.budgets_s.size(); ++q)
        lp.budgets_s[q] = std::min(lp.budgets_s[q] + state.config.delta_l_s,
                                   state.config.l_ceiling_factor * inst.budgets_s[q]);
      r = solve_min_power(lp, opts);
    }
    if (r.status == SolverStatus::kInfeasible) {
      s.status = SolverStatus::kInfeasible;
      s.flagged = true;
    } else {
      s = from_solver(lp, std::move(r));
    }
  }
  s.mode = next.mode;
  s.pressure = pressure;
  next.trace.push_back(next.mode);
  return {std::move(s), std::move(next)};
}

Scheduler::Scheduler(SchedulerKind kind, const AllpConfig& allp, const SolverOptions& opts)
    : kind_(kind), allp_config_(allp), opts_(opts) {
  allp_config_.validate();
}

void Scheduler::warm_up(std::span<const ProblemInstance> warmup) {
  if (kind_ == SchedulerKind::kSpLl || kind_ == SchedulerKind::kSpLp) fixed_path_ = choose_fixed_path(warmup);
}

ScheduleResult Scheduler::step(const ProblemInstance& inst) {
  switch (kind_) {
    case SchedulerKind::kSpLl:
    case SchedulerKind::kSpLp:
      if (!fixed_path_) throw ConfigError("single-path scheduler used before warm_up");
      return sp_schedule(inst, kind_ == SchedulerKind::kSpLl ? Objective::kMinLatency : Objective::kMinPower,
                         *fixed_path_, opts_);
    case SchedulerKind::kPs1Ll: return ps_schedule(inst, 1, Objective::kMinLatency, opts_);
    case SchedulerKind::kPs2Ll: return ps_schedule(inst, 2, Objective::kMinLatency, opts_);
    case SchedulerKind::kPs1Lp: return ps_schedule(inst, 1, Objective::kMinPower, opts_);
    case SchedulerKind::kPs2Lp: return ps_schedule(inst, 2, Objective::kMinPower, opts_);
    case SchedulerKind::kTwoPathLl: return two_path_schedule(inst, opts_);
    case SchedulerKind::kMhmpLl: return mhmp_schedule(inst, Objective::kMinLatency, opts_);
    case SchedulerKind::kMhmpLp: return mhmp_schedule(inst, Objective::kMinPower, opts_);
    case SchedulerKind::kAllp: {
      if (!allp_) allp_ = AllpState::initial(allp_config_, inst.p_tot_w, inst.budgets_s);
      auto [s, next] = allp_step(*allp_, inst, opts_);
      allp_ = std::move(next);
      return s;
    }
  }
  throw ConfigError("unknown scheduler kind");
}

}  // namespace mhmp
