#include <doctest.h>

#include <random>

#include "mhmp/errors.hpp"
#include "mhmp/traffic.hpp"

using namespace mhmp;

namespace {

const ServiceSpec kServices[] = {
    {.id = 1, .packet_bits = 2000.0, .arrival_rate_pps = 200.0, .latency_budget_s = 0.03, .backlog_mean_pkts = 50.0},
    {.id = 2, .packet_bits = 800.0, .arrival_rate_pps = 500.0, .latency_budget_s = 0.03, .backlog_mean_pkts = 0.0},
};

}  // namespace

TEST_CASE("poisson arrivals have the requested mean") {
  std::mt19937_64 rng(11);
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) sum += static_cast<double>(sample_arrivals(100.0, rng));
  CHECK(sum / n == doctest::Approx(100.0).epsilon(0.01));
  CHECK(sample_arrivals(0.0, rng) == 0);
  CHECK_THROWS_AS(sample_arrivals(-1.0, rng), ConfigError);
}

TEST_CASE("flow mode draws only at the source") {
  const Topology t = build_topology(2);
  std::mt19937_64 rng(5);
  const auto s = sample_traffic(t, kServices, TrafficMode::kFlowPropagated, 0.5, 3, rng);
  CHECK(s.block == 3);
  CHECK(s.nodes() == t.node_count());
  CHECK(s.lambda(0, 0) > 0);
  CHECK(s.lambda(0, 1) > 0);
  CHECK(s.queued(0, 1) == 0);
  for (std::size_t v = 1; v < t.node_count(); ++v)
    for (std::size_t q = 0; q < 2; ++q) {
      CHECK(s.lambda(v, q) == 0);
      CHECK(s.queued(v, q) == 0);
    }
}

TEST_CASE("per-node mode draws at every transmitter") {
  const Topology t = build_topology(1);
  std::mt19937_64 rng(5);
  const auto s = sample_traffic(t, kServices, TrafficMode::kPerNode, 0.5, 0, rng);
  for (std::size_t v = 0; v < t.node_count(); ++v) CHECK(s.lambda(v, 0) > 0);
}

TEST_CASE("same stream, same draw") {
  const Topology t = build_topology(2);
  std::mt19937_64 a(9), b(9);
  CHECK(sample_traffic(t, kServices, TrafficMode::kPerNode, 0.5, 0, a) ==
        sample_traffic(t, kServices, TrafficMode::kPerNode, 0.5, 0, b));
}

TEST_CASE("queue update conserves packets") {
  TrafficState s(3, 1), served(3, 1), next(3, 1);
  s.lambda(0, 0) = 10;
  s.queued(0, 0) = 5;
  served.lambda(0, 0) = 12;
  next.lambda(0, 0) = 7;
  const auto out = advance_queues(s, served, next);
  CHECK(out.queued(0, 0) == 3);
  CHECK(out.lambda(0, 0) == 7);
  served.lambda(0, 0) = 16;
  CHECK_THROWS_AS(advance_queues(s, served, next), ConfigError);
}

TEST_CASE("propagation follows split ratios") {
  const Topology t = build_topology(1);
  Decision d(t, 1);
  d.a(0, 0) = 0.25;
  d.a(1, 0) = 0.75;
  for (std::size_t e = 2; e < t.link_count(); ++e) d.a(e, 0) = t.link(e).rx == 0 ? 1.0 : 0.0;
  const double inj[] = {100.0, 0.0, 0.0};
  const auto load = propagate_traffic(t, d, inj);
  CHECK(load[0] == doctest::Approx(100.0));
  CHECK(load[1] == doctest::Approx(25.0));
  CHECK(load[2] == doctest::Approx(75.0));
  d.a(0, 0) = 0.5;
  CHECK_THROWS_AS(propagate_traffic(t, d, inj), ConfigError);
}
