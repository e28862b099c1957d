#include "mhmp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include <json.hpp>

#include "barrier.hpp"
#include "mhmp/errors.hpp"
#include "program.hpp"

namespace mhmp {

using detail::Goal;
using detail::PowerRegime;
using detail::Program;

std::string to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::kOptimal: return "optimal";
    case SolverStatus::kInfeasible: return "infeasible";
    case SolverStatus::kMaxIterations: return "max_iterations";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

PowerRegime latency_regime(const ProblemInstance& inst) {
  return inst.power_policy == PowerPolicy::kEqualSplit ? PowerRegime::kFixedSplit : PowerRegime::kEqual;
}

double worst_budget_ratio(const ProblemInstance& inst, const std::vector<double>& worst) {
  double r = 0.0;
  for (std::size_t q = 0; q < worst.size(); ++q)
    if (inst.budgets_s[q] > 0.0) r = std::max(r, worst[q] / inst.budgets_s[q]);
  return r;
}

// Interior starts: the even split, then splits leaning on the paths with
// the fastest links at even power.
std::vector<Eigen::VectorXd> starts(const Program& prog, int extra) {
  std::vector<Eigen::VectorXd> out{prog.start_point()};
  if (extra <= 0) return out;
  const ProblemInstance& inst = prog.instance();
  const Topology& topo = *inst.topo;
  const auto even = prog.even_path_weights();
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t b = 0; b < even.size(); ++b) {
    if (even[b] <= 0.0) continue;
    double cost = 0.0;
    for (std::size_t e : topo.path_link_indices(b)) {
      const double d = inst.curves[e].rate(0.5 * inst.p_tot_w);
      cost += d > 0.0 ? 1.0 / d : kInf;
    }
    ranked.emplace_back(cost, b);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  if (ranked.size() < 2) return out;
  for (int k = 0; k < extra && k < static_cast<int>(ranked.size()); ++k) {
    std::vector<double> w(even.size());
    for (std::size_t b = 0; b < w.size(); ++b) w[b] = 0.3 * even[b];
    w[ranked[static_cast<std::size_t>(k)].second] += 0.7;
    out.push_back(prog.start_point(w));
  }
  return out;
}

struct Candidate {
  detail::BarrierOutcome outcome;
  Decision decision;
  std::vector<double> worst;
  double value = kInf;
};

// Runs every start and keeps the best decision under `score`.
template <class Score>
Candidate best_of(const Program& prog, const SolverOptions& opts, Score score) {
  Candidate best;
  int total_steps = 0;
  for (const auto& z0 : starts(prog, opts.extra_starts)) {
    auto outcome = detail::run_barrier(prog, z0, opts);
    total_steps += outcome.newton_steps;
    if (!outcome.interior_start) continue;
    Decision d = prog.to_decision(outcome.z);
    auto lat = evaluate_latency(prog.instance(), d);
    const double v = score(d, lat.worst_latency_s);
    if (v < best.value) {
      best.outcome = std::move(outcome);
      best.decision = std::move(d);
      best.worst = std::move(lat.worst_latency_s);
      best.value = v;
    }
  }
  best.outcome.newton_steps = total_steps;
  return best;
}

double sum_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

void finish(SolverResult& r, const Program& prog, const Candidate& c, const SolverOptions& opts) {
  r.decision = c.decision;
  r.worst_latency_s = c.worst;
  r.iterations = c.outcome.newton_steps;
  r.trace = c.outcome.trace;
  double kkt = kInf;
  try {
    kkt = detail::certify_program(prog, r.decision);
  } catch (const ConfigError&) {
  }
  r.kkt_residual = kkt;
  r.status = c.outcome.converged && kkt <= opts.kkt_tolerance ? SolverStatus::kOptimal : SolverStatus::kMaxIterations;
}

SolverResult idle_result(const Program& prog, bool zero_power) {
  SolverResult r;
  r.decision = prog.to_decision(prog.start_point());
  if (zero_power) std::fill(r.decision.power_w.begin(), r.decision.power_w.end(), 0.0);
  r.worst_latency_s.assign(prog.instance().services(), 0.0);
  r.status = SolverStatus::kOptimal;
  return r;
}

Eigen::VectorXd carry_over(const Program& from, const Eigen::VectorXd& z, const Program& to) {
  Eigen::VectorXd out = to.fixed_values();
  const auto shared = static_cast<Eigen::Index>(from.var_count() - from.epi_count());
  out.head(shared) = z.head(shared);
  return out;
}

}  // namespace

namespace {

SolverResult solve_min_latency_once(const ProblemInstance& inst, const SolverOptions& opts) {
  const PowerRegime regime = latency_regime(inst);
  Program prog(inst, Goal::kSumMaxLatency, regime, false);
  if (!prog.has_traffic()) return idle_result(prog, false);

  auto score = [](const Decision&, const std::vector<double>& worst) { return sum_of(worst); };
  Candidate best = best_of(prog, opts, score);
  SolverResult r;
  if (!std::isfinite(best.value)) {
    r.decision = prog.to_decision(prog.start_point());
    r.worst_latency_s.assign(inst.services(), kInf);
    r.objective = kInf;
    r.kkt_residual = kInf;
    r.status = SolverStatus::kInfeasible;
    return r;
  }
  finish(r, prog, best, opts);
  r.objective = best.value;

  const double ratio = worst_budget_ratio(inst, r.worst_latency_s);
  if (ratio <= 1.0 + 1e-9) return r;
  if (!inst.enforce_budgets) {
    r.status = SolverStatus::kInfeasible;
    r.min_budget_ratio = ratio;
    return r;
  }

  // Hard budgets: find a point strictly inside them, then re-solve with the
  // budget rows in place.
  Program phase(inst, Goal::kMaxBudgetRatio, regime, false);
  auto ratio_score = [&inst](const Decision&, const std::vector<double>& worst) {
    return worst_budget_ratio(inst, worst);
  };
  Candidate feas = best_of(phase, opts, ratio_score);
  if (!(feas.value < 1.0)) {
    r.status = SolverStatus::kInfeasible;
    r.min_budget_ratio = std::min(ratio, feas.value);
    return r;
  }
  Program bounded(inst, Goal::kSumMaxLatency, regime, true);
  Eigen::VectorXd z0 = carry_over(phase, feas.outcome.z, bounded);
  bounded.lift_epigraph(z0, 1.5);
  Candidate c;
  c.outcome = detail::run_barrier(bounded, z0, opts);
  if (!c.outcome.interior_start) {
    c.outcome = feas.outcome;
    c.outcome.converged = false;
    c.decision = feas.decision;
    c.worst = feas.worst;
  } else {
    c.decision = bounded.to_decision(c.outcome.z);
    c.worst = evaluate_latency(inst, c.decision).worst_latency_s;
  }
  SolverResult rb;
  finish(rb, bounded, c, opts);
  rb.objective = sum_of(rb.worst_latency_s);
  rb.iterations += r.iterations + feas.outcome.newton_steps;
  return rb;
}

SolverResult solve_min_power_once(const ProblemInstance& inst, const SolverOptions& opts) {
  if (inst.power_policy == PowerPolicy::kEqualSplit)
    throw ConfigError("minimum-power solves need optimized powers");
  Program phase(inst, Goal::kMaxBudgetRatio, PowerRegime::kAtMost, false);
  if (!phase.has_traffic()) return idle_result(phase, true);

  auto ratio_score = [&inst](const Decision&, const std::vector<double>& worst) {
    return worst_budget_ratio(inst, worst);
  };
  Candidate feas = best_of(phase, opts, ratio_score);
  SolverResult r;
  if (!std::isfinite(feas.value) || feas.value > 1.0 + 1e-9) {
    if (std::isfinite(feas.value)) {
      r.decision = feas.decision;
      r.worst_latency_s = feas.worst;
    } else {
      r.decision = phase.to_decision(phase.start_point());
      r.worst_latency_s.assign(inst.services(), kInf);
    }
    r.objective = r.decision.total_power_w();
    r.kkt_residual = kInf;
    r.iterations = feas.outcome.newton_steps;
    r.status = SolverStatus::kInfeasible;
    r.min_budget_ratio = feas.value;
    return r;
  }

  Program prog(inst, Goal::kTotalPower, PowerRegime::kAtMost, false);
  Candidate c;
  const Eigen::VectorXd z0 = carry_over(phase, feas.outcome.z, prog);
  c.outcome = detail::run_barrier(prog, z0, opts);
  if (!c.outcome.interior_start) {
    // Budgets are tight at the phase-one point: nothing to save.
    c.outcome = feas.outcome;
    c.decision = feas.decision;
    c.worst = feas.worst;
  } else {
    c.decision = prog.to_decision(c.outcome.z);
    c.worst = evaluate_latency(inst, c.decision).worst_latency_s;
  }
  finish(r, prog, c, opts);
  r.objective = r.decision.total_power_w();
  r.iterations += feas.outcome.newton_steps;
  return r;
}

// Fraction of each service's source traffic crossing each link.
std::vector<double> link_flow(const ProblemInstance& inst, const Decision& d) {
  const Topology& topo = *inst.topo;
  std::vector<double> flow(topo.link_count(), 0.0);
  for (std::size_t q = 0; q < inst.services(); ++q) {
    if (!inst.service_active(q)) continue;
    std::vector<double> inflow(topo.node_count(), 0.0);
    inflow[0] = 1.0;
    for (std::size_t v = 0; v < topo.node_count(); ++v)
      for (std::size_t e : topo.out_links(v)) {
        const double f = inflow[v] * d.a(e, q);
        flow[e] = std::max(flow[e], f);
        if (auto rx = topo.link_rx_node(e)) inflow[*rx] += f;
      }
  }
  return flow;
}

// Barrier iterates keep vanishing links alive at O(1/t) flow and power,
// which spoils the certificate. Switch such links off, re-solve on the
// surviving paths and keep the result when it is no worse.
template <class Once>
SolverResult polished(const ProblemInstance& inst, const SolverOptions& opts, Once once) {
  SolverResult r = once(inst, opts);
  const bool power_goal = inst.objective == Objective::kMinPower;
  ProblemInstance cur = inst;
  for (int round = 0; round < 3; ++round) {
    if (r.status == SolverStatus::kInfeasible || r.status == SolverStatus::kOptimal) break;
    const Topology& topo = *cur.topo;
    const auto flow = link_flow(cur, r.decision);
    const auto allowed = cur.allowed_links();
    std::vector<bool> on(topo.link_count(), false);
    for (std::size_t e = 0; e < on.size(); ++e)
      on[e] = allowed[e] && flow[e] >= 1e-6 && (!power_goal || r.decision.power_w[e] >= 1e-6 * cur.p_tot_w);
    std::vector<std::size_t> paths;
    const std::size_t total = cur.allowed_paths.empty() ? topo.path_count() : cur.allowed_paths.size();
    for (std::size_t k = 0; k < total; ++k) {
      const std::size_t b = cur.allowed_paths.empty() ? k : cur.allowed_paths[k];
      const auto links = topo.path_link_indices(b);
      if (std::all_of(links.begin(), links.end(), [&](std::size_t e) { return on[e]; })) paths.push_back(b);
    }
    if (paths.empty() || paths.size() == total) break;
    ProblemInstance sub = cur;
    sub.allowed_paths = paths;
    SolverResult s = once(sub, opts);
    if (s.status == SolverStatus::kInfeasible || !(s.objective <= r.objective * (1.0 + 1e-6) + 1e-15)) break;
    double kkt = kInf;
    try {
      kkt = certify_kkt(inst, s.decision);
    } catch (const ConfigError&) {
    }
    s.kkt_residual = kkt;
    s.status = kkt <= opts.kkt_tolerance ? SolverStatus::kOptimal : SolverStatus::kMaxIterations;
    s.iterations += r.iterations;
    r = std::move(s);
    cur = std::move(sub);
  }
  return r;
}

// Per-service quantities that path latency is linear in at fixed powers:
// link flow fractions in flow mode, split ratios otherwise.
std::vector<double> linear_shares(const ProblemInstance& inst, const Decision& d, std::size_t q) {
  const Topology& topo = *inst.topo;
  std::vector<double> x(topo.link_count(), 0.0);
  if (inst.traffic_mode != TrafficMode::kFlowPropagated) {
    for (std::size_t e = 0; e < x.size(); ++e) x[e] = d.a(e, q);
    return x;
  }
  std::vector<double> inflow(topo.node_count(), 0.0);
  inflow[0] = 1.0;
  for (std::size_t v = 0; v < topo.node_count(); ++v)
    for (std::size_t e : topo.out_links(v)) {
      x[e] = inflow[v] * d.a(e, q);
      if (auto rx = topo.link_rx_node(e)) inflow[*rx] += x[e];
    }
  return x;
}

void apply_shares(const ProblemInstance& inst, Decision& d, std::size_t q, const std::vector<double>& x) {
  const Topology& topo = *inst.topo;
  const bool flow = inst.traffic_mode == TrafficMode::kFlowPropagated;
  for (std::size_t v = 0; v < topo.node_count(); ++v) {
    const auto outs = topo.out_links(v);
    double sum = 0.0;
    for (std::size_t e : outs) sum += x[e];
    if (!(sum > 0.0)) continue;
    for (std::size_t e : outs) d.a(e, q) = flow ? x[e] / sum : x[e];
  }
}

// Minimum power leaves the latency of every service but the costliest one
// below its budget. The powers stay optimal for any split of such a
// service, so move its split toward its slowest powered path until its
// worst path meets the budget, as the equality form of the constraint asks.
void bind_budgets(const ProblemInstance& inst, SolverResult& r, const SolverOptions& opts) {
  const Topology& topo = *inst.topo;
  const auto allowed = inst.allowed_links();
  bool changed = false;
  for (std::size_t q = 0; q < inst.services(); ++q) {
    if (!inst.service_active(q) || !(inst.budgets_s[q] > 0.0)) continue;
    const double budget = inst.budgets_s[q];
    if (r.worst_latency_s[q] >= budget * (1.0 - 1e-4)) continue;
    std::optional<std::size_t> slowest;
    double slowest_latency = 0.0;
    const std::size_t total = inst.allowed_paths.empty() ? topo.path_count() : inst.allowed_paths.size();
    for (std::size_t k = 0; k < total; ++k) {
      const std::size_t b = inst.allowed_paths.empty() ? k : inst.allowed_paths[k];
      const auto links = topo.path_link_indices(b);
      if (!std::all_of(links.begin(), links.end(),
                       [&](std::size_t e) { return allowed[e] && r.decision.power_w[e] > 0.0; }))
        continue;
      Decision one = r.decision;
      std::vector<double> x(topo.link_count(), 0.0);
      for (std::size_t e : links) x[e] = 1.0;
      apply_shares(inst, one, q, x);
      const double u = evaluate_latency(inst, one).worst_latency_s[q];
      if (u > slowest_latency) {
        slowest_latency = u;
        slowest = b;
      }
    }
    if (!slowest || slowest_latency < budget) continue;
    const auto x0 = linear_shares(inst, r.decision, q);
    std::vector<double> x1(topo.link_count(), 0.0);
    for (std::size_t e : topo.path_link_indices(*slowest)) x1[e] = 1.0;
    const auto at = [&](double theta) {
      Decision d = r.decision;
      std::vector<double> x(x0.size());
      for (std::size_t e = 0; e < x.size(); ++e) x[e] = (1.0 - theta) * x0[e] + theta * x1[e];
      apply_shares(inst, d, q, x);
      return d;
    };
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (evaluate_latency(inst, at(mid)).worst_latency_s[q] <= budget ? lo : hi) = mid;
    }
    r.decision = at(lo);
    changed = true;
  }
  if (!changed) return;
  r.worst_latency_s = evaluate_latency(inst, r.decision).worst_latency_s;
  double kkt = kInf;
  try {
    kkt = certify_kkt(inst, r.decision);
  } catch (const ConfigError&) {
  }
  r.kkt_residual = kkt;
  if (r.status == SolverStatus::kOptimal && kkt > opts.kkt_tolerance) r.status = SolverStatus::kMaxIterations;
}

}  // namespace

SolverResult solve_min_latency(const ProblemInstance& inst, const SolverOptions& opts) {
  return polished(inst, opts, solve_min_latency_once);
}

SolverResult solve_min_power(const ProblemInstance& inst, const SolverOptions& opts) {
  if (inst.power_policy == PowerPolicy::kEqualSplit)
    throw ConfigError("minimum-power solves need optimized powers");
  SolverResult r = polished(inst, opts, solve_min_power_once);
  if (r.status != SolverStatus::kInfeasible) bind_budgets(inst, r, opts);
  return r;
}

SolverResult solve(const ProblemInstance& inst, const SolverOptions& opts) {
  return inst.objective == Objective::kMinPower ? solve_min_power(inst, opts) : solve_min_latency(inst, opts);
}

double certify_kkt(const ProblemInstance& inst, const Decision& decision) {
  if (inst.objective == Objective::kMinPower) {
    Program prog(inst, Goal::kTotalPower, PowerRegime::kAtMost, false);
    return detail::certify_program(prog, decision);
  }
  Program prog(inst, Goal::kSumMaxLatency, latency_regime(inst), inst.enforce_budgets);
  return detail::certify_program(prog, decision);
}

std::string solver_diagnostics_json(const SolverResult& result) {
  nlohmann::ordered_json j;
  j["status"] = to_string(result.status);
  j["objective"] = result.objective;
  j["iterations"] = result.iterations;
  j["kkt_residual"] = std::isfinite(result.kkt_residual) ? nlohmann::ordered_json(result.kkt_residual)
                                                         : nlohmann::ordered_json(nullptr);
  j["worst_latency_s"] = result.worst_latency_s;
  if (result.min_budget_ratio) j["min_budget_ratio"] = *result.min_budget_ratio;
  auto& trace = j["trace"] = nlohmann::ordered_json::array();
  for (const auto& t : result.trace)
    trace.push_back({{"outer", t.outer}, {"barrier_t", t.barrier_t}, {"objective", t.objective},
                     {"newton_steps", t.newton_steps}});
  return j.dump(2);
}

}  // namespace mhmp
