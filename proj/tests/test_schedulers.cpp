#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "mhmp/errors.hpp"
#include "mhmp/schedulers.hpp"

using namespace mhmp;

TEST_CASE("scheme names round-trip") {
  for (const auto k : all_scheduler_kinds()) CHECK(parse_scheduler_kind(to_string(k)) == k);
  CHECK(all_scheduler_kinds().size() == 10);
  CHECK_THROWS_WITH_AS(parse_scheduler_kind("fastest"), doctest::Contains("mhmp_ll"), ConfigError);
  CHECK(is_min_power(SchedulerKind::kPs2Lp));
  CHECK_FALSE(is_min_power(SchedulerKind::kTwoPathLl));
}

TEST_CASE("single path at full power on a three-hop network draws 3 P_tot") {
  fixtures::InstanceSpec s;
  s.hops = 2;
  const auto inst = fixtures::build(s);
  const Decision d = single_path_decision(inst, 2, inst.p_tot_w);
  CHECK(d.total_power_w() == doctest::Approx(3.0 * inst.p_tot_w));
  CHECK(check_decision(*inst.topo, d, inst.p_tot_w, PowerRule::kEqualTotal).ok());
}

TEST_CASE("fixed path prefers the strongest links") {
  fixtures::InstanceSpec s;
  s.loss_db = {110.0, 95.0, 110.0, 95.0};
  const auto inst = fixtures::build(s);
  CHECK(choose_fixed_path({&inst, 1}) == 1);
  Scheduler sp(SchedulerKind::kSpLl);
  CHECK_THROWS_AS(sp.step(inst), ConfigError);
  sp.warm_up({&inst, 1});
  CHECK(sp.fixed_path() == 1);
}

TEST_CASE("restricted schemes never beat the full path set") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 8; ++i) {
    const auto inst = fixtures::random_instance(1 + i % 2, 1 + (i / 2) % 2, rng);
    const double best = mhmp_schedule(inst, Objective::kMinLatency).objective;
    CAPTURE(i);
    CHECK(two_path_schedule(inst).objective >= best - 1e-9);
    CHECK(ps_schedule(inst, 1, Objective::kMinLatency).objective >= best - 1e-9);
    CHECK(ps_schedule(inst, 2, Objective::kMinLatency).objective >= best - 1e-9);
    CHECK(sp_schedule(inst, Objective::kMinLatency, choose_fixed_path({&inst, 1})).objective >= best - 1e-9);
  }
}

TEST_CASE("min-power schemes respect budgets and caps") {
  std::mt19937_64 rng(22);
  const auto inst = fixtures::random_instance(2, 2, rng);
  for (const auto kind : all_scheduler_kinds()) {
    if (!is_min_power(kind)) continue;
    Scheduler s(kind);
    if (kind == SchedulerKind::kSpLp) s.warm_up({&inst, 1});
    const auto r = s.step(inst);
    CAPTURE(to_string(kind));
    CHECK(check_decision(*inst.topo, r.decision, r.power_cap_w, r.rule).ok());
    if (!r.flagged) {
      const auto lat = evaluate_latency(inst, r.decision);
      for (std::size_t q = 0; q < inst.services(); ++q) CHECK(lat.worst_latency_s[q] <= inst.budgets_s[q] * (1 + 1e-9));
    }
  }
}

TEST_CASE("impossible budgets fall back to full power and are flagged") {
  fixtures::InstanceSpec s;
  s.budgets_s = {1e-9};
  const auto inst = fixtures::build(s);
  const auto r = mhmp_schedule(inst, Objective::kMinPower);
  CHECK(r.flagged);
  CHECK(r.status == SolverStatus::kInfeasible);
  CHECK(r.decision.total_power_w() == doctest::Approx(3.0 * inst.p_tot_w));
}

TEST_CASE("allp picks the mode from the latency pressure") {
  fixtures::InstanceSpec s;
  s.budgets_s = {1.0};
  const auto light = fixtures::build(s);
  const auto state = AllpState::initial({}, light.p_tot_w, light.budgets_s);
  auto [r, next] = allp_step(state, light);
  CHECK(r.mode == AllpMode::kLowPower);
  CHECK(r.pressure < 0.8);
  CHECK(next.working_budgets_s == state.working_budgets_s);

  s.budgets_s = {1e-4};
  s.source_pkts = {5000.0};
  const auto heavy = fixtures::build(s);
  auto [h, after] = allp_step(AllpState::initial({}, heavy.p_tot_w, heavy.budgets_s), heavy);
  CHECK(h.mode == AllpMode::kLowLatency);
  CHECK(h.pressure > 0.8);
  CHECK(after.trace.back() == AllpMode::kLowLatency);
}

TEST_CASE("allp config validation") {
  AllpConfig c;
  c.delta = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
