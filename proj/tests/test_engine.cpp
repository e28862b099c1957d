#include <doctest.h>

#include <cmath>

#include "mhmp/engine.hpp"
#include "mhmp/errors.hpp"

using namespace mhmp;

namespace {

Scenario small() {
  Scenario sc = default_scenario();
  sc.blocks = 6;
  sc.replicas = 3;
  return sc;
}

}  // namespace

TEST_CASE("default scenario values") {
  const Scenario sc = default_scenario();
  CHECK(sc.relay_layers == 2);
  CHECK(sc.blocks == 600);
  CHECK(sc.block_s == 0.5);
  CHECK(sc.replicas == 20);
  CHECK(sc.p_tot_w == doctest::Approx(0.19952623149688786));
  REQUIRE(sc.services.size() == 2);
  CHECK(sc.services[0].packet_bits == 2000.0);
  CHECK(sc.services[1].packet_bits == 800.0);
  CHECK(sc.services[0].latency_budget_s == 0.03);
  CHECK_NOTHROW(sc.validate());
}

TEST_CASE("substreams are independent and reproducible") {
  auto a = substream(1, Stream::kChannel, 0, 0);
  auto b = substream(1, Stream::kChannel, 0, 0);
  auto c = substream(1, Stream::kChannel, 0, 1);
  auto d = substream(1, Stream::kTraffic, 0, 0);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(x != d());
}

TEST_CASE("every scheme sees the same realization") {
  const Scenario sc = small();
  const Topology t = sc.topology();
  const auto r1 = realize_block(sc, t, 2, 4);
  const auto r2 = realize_block(sc, t, 2, 4);
  CHECK(r1.traffic == r2.traffic);
  CHECK(r1.channel.links[3].loss_db == r2.channel.links[3].loss_db);
}

TEST_CASE("estimates use a student-t half-width") {
  const double xs[] = {1.0, 2.0, 3.0, 4.0};
  const auto e = estimate(xs);
  CHECK(e.mean == doctest::Approx(2.5));
  // t(0.975, 3) = 3.182446305, s = sqrt(5/3).
  CHECK(e.ci95 == doctest::Approx(3.182446305284263 * std::sqrt(5.0 / 3.0) / 2.0).epsilon(1e-9));
  const double one[] = {7.0};
  CHECK(std::isnan(estimate(one).ci95));
  const double ys[] = {0.5, 1.5, 2.5, 3.5};
  const auto d = paired_difference(xs, ys);
  CHECK(d.mean == doctest::Approx(0.5));
  CHECK(d.ci95 == doctest::Approx(0.0));
}

TEST_CASE("parallel and serial runs agree exactly") {
  const Scenario sc = small();
  const SchedulerKind kinds[] = {SchedulerKind::kSpLl, SchedulerKind::kMhmpLl, SchedulerKind::kAllp};
  const auto p = run_schemes(sc, kinds, Execution::kParallel);
  const auto s = run_schemes(sc, kinds, Execution::kSerial);
  CHECK(summary_json(sc, p) == summary_json(sc, s));
  CHECK(metrics_csv(p) == metrics_csv(s));
}

TEST_CASE("single path draws three times P_tot at full power") {
  const Scenario sc = small();
  const SchedulerKind kinds[] = {SchedulerKind::kSpLl};
  const auto r = run_schemes(sc, kinds);
  CHECK(r[0].power_w.mean == doctest::Approx(3.0 * sc.p_tot_w).epsilon(1e-12));
  CHECK(r[0].runs.size() == 3);
  CHECK(r[0].runs[0].fixed_path.has_value());
}

TEST_CASE("closed-loop queues carry backlog") {
  Scenario sc = small();
  sc.closed_loop = true;
  const SchedulerKind kinds[] = {SchedulerKind::kMhmpLl};
  const auto r = run_schemes(sc, kinds);
  CHECK(r[0].blocks == sc.blocks * sc.replicas);
  CHECK(r[0].latency_s[0].mean > 0.0);
}

TEST_CASE("output headers carry units") {
  const Scenario sc = small();
  const SchedulerKind kinds[] = {SchedulerKind::kMhmpLp};
  const auto r = run_schemes(sc, kinds, Execution::kParallel, {.decisions = true, .channels = true});
  const auto metrics = metrics_csv(r);
  CHECK(metrics.rfind("scheme,replica,block,service,worst_latency_s,total_power_w,status,flagged,allp_mode", 0) == 0);
  CHECK(cdf_csv(r, sc.cdf_points).find("_s") != std::string::npos);
  CHECK(summary_json(sc, r).find("\"power_mw\"") != std::string::npos);
  CHECK_FALSE(trajectories_csv(sc.topology(), r).empty());
  CHECK(channel_csv(r[0].runs[0]).find("loss_db") != std::string::npos);
}

TEST_CASE("hop sweep returns one row per hop count") {
  Scenario sc = small();
  sc.blocks = 2;
  sc.replicas = 2;
  const auto rows = hop_sweep(sc, 1, 3, SweepMetric::kLatency);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) CHECK(r.savings.mean > 0.0);
  CHECK_THROWS_AS(hop_sweep(sc, 3, 1, SweepMetric::kLatency), ConfigError);
  CHECK(sweep_csv(SweepMetric::kLatency, rows).find("hops") != std::string::npos);
}

TEST_CASE("invalid scenarios are rejected") {
  Scenario sc = small();
  sc.replicas = 0;
  CHECK_THROWS_AS(sc.validate(), ConfigError);
  sc = small();
  sc.services.clear();
  CHECK_THROWS_AS(sc.validate(), ConfigError);
}
