#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mhmp/decision.hpp"
#include "mhmp/topology.hpp"

namespace mhmp {

struct ServiceSpec {
  int id = 1;
  double packet_bits = 2000.0;
  double arrival_rate_pps = 200.0;
  double latency_budget_s = 0.03;
  /// Mean of the Poisson queue backlog found at block start.
  double backlog_mean_pkts = 0.0;

  void validate() const;
};

enum class TrafficMode {
  /// lambda and n drawn independently at every transmitting node.
  kPerNode,
  /// Arrivals and backlog live at the source; relays carry the inflow
  /// propagated by the decision's split ratios.
  kFlowPropagated,
};

/// Per (node, service) packet counts for one block; node-major layout.
struct TrafficState {
  std::size_t block = 0;
  std::size_t services = 0;
  std::vector<std::int64_t> arrivals;
  std::vector<std::int64_t> backlog;

  TrafficState() = default;
  TrafficState(std::size_t nodes, std::size_t n_services);

  std::size_t nodes() const { return services == 0 ? 0 : arrivals.size() / services; }
  std::int64_t& lambda(std::size_t node, std::size_t q) { return arrivals[node * services + q]; }
  std::int64_t lambda(std::size_t node, std::size_t q) const { return arrivals[node * services + q]; }
  std::int64_t& queued(std::size_t node, std::size_t q) { return backlog[node * services + q]; }
  std::int64_t queued(std::size_t node, std::size_t q) const { return backlog[node * services + q]; }
  double offered(std::size_t node, std::size_t q) const {
    return static_cast<double>(lambda(node, q) + queued(node, q));
  }

  friend bool operator==(const TrafficState&, const TrafficState&) = default;
};

/// Poisson draw; throws ConfigError on a negative mean.
std::int64_t sample_arrivals(double mean_pkts, std::mt19937_64& rng);

/// Draws a block of arrivals and backlog. Means are rate * block_s and the
/// service's backlog mean. In flow mode only the source node is drawn.
TrafficState sample_traffic(const Topology& topo, std::span<const ServiceSpec> services, TrafficMode mode,
                            double block_s, std::size_t block, std::mt19937_64& rng);

/// Queue update: backlog' = backlog + arrivals - served; the result carries
/// `new_arrivals` for the next block. Throws ConfigError on negative or
/// excess service.
TrafficState advance_queues(const TrafficState& state, const TrafficState& served,
                            const TrafficState& new_arrivals);

/// Propagates per-node injected load through the split ratios:
/// load(rx) = injection(rx) + sum over in-links of alpha * load(tx).
/// Layout is node-major (node * services + q). Throws ConfigError when some
/// node's split ratios do not sum to one.
std::vector<double> propagate_traffic(const Topology& topo, const Decision& decision,
                                      std::span<const double> injection);

/// Offered load (lambda + n) per node and service as used by the latency
/// model. Flow mode propagates the source's load; per-node mode uses
/// each node's own draw and zeroes nodes that no split ratio reaches.
std::vector<double> node_loads(const Topology& topo, const Decision& decision, const TrafficState& traffic,
                               TrafficMode mode);

}  // namespace mhmp
