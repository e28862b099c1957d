#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "mhmp/errors.hpp"
#include "mhmp/solver.hpp"

using namespace mhmp;

namespace {

double rel_gap(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("symmetric one-relay-layer optimum splits evenly") {
  auto inst = fixtures::build({});
  const auto r = solve_min_latency(inst);
  CHECK(r.status == SolverStatus::kOptimal);
  for (std::size_t e = 0; e < inst.topo->link_count(); ++e) {
    CAPTURE(e);
    CHECK(r.decision.a(e, 0) == doctest::Approx(inst.topo->link(e).layer == 0 ? 0.5 : 1.0).epsilon(1e-6));
  }
  CHECK(r.decision.power_w[0] == doctest::Approx(inst.p_tot_w / 2).epsilon(1e-6));
  CHECK(r.decision.power_w[1] == doctest::Approx(inst.p_tot_w / 2).epsilon(1e-6));
  CHECK(r.kkt_residual <= 1e-6);
}

TEST_CASE("zero traffic is optimal at zero latency") {
  fixtures::InstanceSpec s;
  s.source_pkts = {0.0};
  auto inst = fixtures::build(s);
  const auto r = solve_min_latency(inst);
  CHECK(r.status == SolverStatus::kOptimal);
  CHECK(r.objective == 0.0);
  CHECK(certify_kkt(inst, r.decision) == 0.0);
}

TEST_CASE("asymmetric one-relay-layer instance matches the grid oracle") {
  fixtures::InstanceSpec s;
  s.loss_db = {100.0, 110.0, 100.0, 100.0};
  auto inst = fixtures::build(s);
  const auto r = solve_min_latency(inst);
  const auto o = grid_oracle(inst, {.resolution = 1e-3});
  CHECK(r.status == SolverStatus::kOptimal);
  CHECK(rel_gap(r.objective, o.objective) <= 0.01);
  CHECK(o.objective >= r.objective - 1e-9);
}

TEST_CASE("random small instances agree with the oracle") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 6; ++i) {
    const int hops = 1 + i % 2;
    auto inst = fixtures::random_instance(hops, 1 + (i / 2) % 2, rng);
    const auto r = solve_min_latency(inst);
    const auto o = grid_oracle(inst, {.resolution = 1e-3, .reduced_sweeps = true});
    CAPTURE(i);
    CAPTURE(r.objective);
    CAPTURE(o.objective);
    CAPTURE(r.kkt_residual);
    CHECK(rel_gap(r.objective, o.objective) <= 0.01);
  }
}

TEST_CASE("min power with loose budget saves power and binds") {
  fixtures::InstanceSpec s;
  auto ll = fixtures::build(s);
  const auto full = solve_min_latency(ll);
  s.objective = Objective::kMinPower;
  s.budgets_s = {10.0 * full.objective};
  auto lp = fixtures::build(s);
  const auto r = solve_min_power(lp);
  CAPTURE(r.kkt_residual);
  CHECK(r.status == SolverStatus::kOptimal);
  CHECK(r.objective < 2.0 * s.p_tot_w);
  CHECK(rel_gap(r.worst_latency_s[0], s.budgets_s[0]) <= 1e-3);
}

TEST_CASE("min power at the full-power latency uses full power") {
  fixtures::InstanceSpec s;
  s.loss_db = {100.0, 104.0, 101.0, 99.0};
  auto ll = fixtures::build(s);
  const auto full = solve_min_latency(ll);
  s.objective = Objective::kMinPower;
  s.budgets_s = {full.objective};
  const auto r = solve_min_power(fixtures::build(s));
  CHECK(r.status != SolverStatus::kInfeasible);
  CHECK(rel_gap(r.objective, 3.0 * s.p_tot_w) <= 0.01);
}

TEST_CASE("one nanosecond budget is infeasible") {
  fixtures::InstanceSpec s;
  s.objective = Objective::kMinPower;
  s.budgets_s = {1e-9};
  const auto r = solve_min_power(fixtures::build(s));
  CHECK(r.status == SolverStatus::kInfeasible);
  REQUIRE(r.min_budget_ratio.has_value());
  CHECK(*r.min_budget_ratio > 1.0);
}
