#include "mhmp/traffic.hpp"

#include <cmath>

#include "mhmp/errors.hpp"

namespace mhmp {

void ServiceSpec::validate() const {
  if (!(packet_bits > 0.0)) throw ConfigError("packet size must be > 0");
  if (!(arrival_rate_pps >= 0.0)) throw ConfigError("arrival rate must be >= 0");
  if (!(latency_budget_s > 0.0)) throw ConfigError("latency budget must be > 0");
  if (!(backlog_mean_pkts >= 0.0)) throw ConfigError("backlog mean must be >= 0");
}

TrafficState::TrafficState(std::size_t nodes, std::size_t n_services)
    : services(n_services), arrivals(nodes * n_services, 0), backlog(nodes * n_services, 0) {}

std::int64_t sample_arrivals(double mean_pkts, std::mt19937_64& rng) {
  if (!(mean_pkts >= 0.0)) throw ConfigError("Poisson mean must be >= 0");
  if (mean_pkts == 0.0) return 0;
  std::poisson_distribution<std::int64_t> dist(mean_pkts);
  return dist(rng);
}

TrafficState sample_traffic(const Topology& topo, std::span<const ServiceSpec> services, TrafficMode mode,
                            double block_s, std::size_t block, std::mt19937_64& rng) {
  if (!(block_s > 0.0)) throw ConfigError("block duration must be > 0");
  TrafficState s(topo.node_count(), services.size());
  s.block = block;
  const std::size_t drawn = mode == TrafficMode::kFlowPropagated ? 1 : topo.node_count();
  for (std::size_t v = 0; v < drawn; ++v) {
    for (std::size_t q = 0; q < services.size(); ++q) {
      s.lambda(v, q) = sample_arrivals(services[q].arrival_rate_pps * block_s, rng);
      s.queued(v, q) = sample_arrivals(services[q].backlog_mean_pkts, rng);
    }
  }
  return s;
}

TrafficState advance_queues(const TrafficState& state, const TrafficState& served,
                            const TrafficState& new_arrivals) {
  if (served.arrivals.size() != state.arrivals.size() || new_arrivals.arrivals.size() != state.arrivals.size())
    throw ConfigError("traffic state shapes differ");
  TrafficState next = state;
  next.block = state.block + 1;
  for (std::size_t i = 0; i < state.backlog.size(); ++i) {
    // `served` counts packets in its arrivals slot.
    const std::int64_t out = served.arrivals[i];
    const std::int64_t available = state.backlog[i] + state.arrivals[i];
    if (out < 0) throw ConfigError("served packets must be >= 0");
    if (out > available) throw ConfigError("served packets exceed backlog plus arrivals");
    next.backlog[i] = available - out;
    next.arrivals[i] = new_arrivals.arrivals[i];
  }
  return next;
}

std::vector<double> propagate_traffic(const Topology& topo, const Decision& decision,
                                      std::span<const double> injection) {
  const std::size_t nq = decision.services;
  if (injection.size() != topo.node_count() * nq) throw ConfigError("injection has wrong shape");
  for (std::size_t v = 0; v < topo.node_count(); ++v) {
    for (std::size_t q = 0; q < nq; ++q) {
      double sum = 0.0;
      for (std::size_t e : topo.out_links(v)) {
        const double a = decision.a(e, q);
        if (a < -1e-9 || a > 1.0 + 1e-9) throw ConfigError("split ratio outside [0, 1]");
        sum += a;
      }
      if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios of a node must sum to 1");
    }
  }
  std::vector<double> load(injection.begin(), injection.end());
  for (std::size_t v = 0; v < topo.node_count(); ++v) {
    for (std::size_t e : topo.out_links(v)) {
      auto rx = topo.link_rx_node(e);
      if (!rx) continue;
      for (std::size_t q = 0; q < nq; ++q) load[*rx * nq + q] += decision.a(e, q) * load[v * nq + q];
    }
  }
  return load;
}

std::vector<double> node_loads(const Topology& topo, const Decision& decision, const TrafficState& traffic,
                               TrafficMode mode) {
  const std::size_t nq = decision.services;
  std::vector<double> load(topo.node_count() * nq, 0.0);
  if (mode == TrafficMode::kFlowPropagated) {
    for (std::size_t q = 0; q < nq; ++q) load[q] = traffic.offered(0, q);
    return propagate_traffic(topo, decision, load);
  }
  std::vector<bool> reached(topo.node_count() * nq, false);
  for (std::size_t q = 0; q < nq; ++q) reached[q] = true;
  for (std::size_t v = 0; v < topo.node_count(); ++v) {
    for (std::size_t q = 0; q < nq; ++q) {
      if (!reached[v * nq + q]) continue;
      load[v * nq + q] = traffic.offered(v, q);
      for (std::size_t e : topo.out_links(v))
        if (auto rx = topo.link_rx_node(e); rx && decision.a(e, q) > 0.0) reached[*rx * nq + q] = true;
    }
  }
  return load;
}

}  // namespace mhmp
