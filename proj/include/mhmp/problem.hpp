#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "mhmp/channel.hpp"
#include "mhmp/decision.hpp"
#include "mhmp/topology.hpp"
#include "mhmp/traffic.hpp"

namespace mhmp {

enum class Objective {
  kMinLatency,  ///< minimize sum_q max_b u_{q,b} with every relay at full power
  kMinPower,    ///< minimize total power subject to max_b u_{q,b} <= budget_q
};

enum class PowerPolicy {
  kOptimize,    ///< powers are decision variables
  kEqualSplit,  ///< each transmitter splits P_tot evenly over its usable links
};

/// One block's optimization problem.
struct ProblemInstance {
  std::shared_ptr<const Topology> topo;
  std::vector<RateCurve> curves;     ///< per link
  TrafficMode traffic_mode = TrafficMode::kFlowPropagated;
  /// Offered packets (lambda + n), node-major per service. Flow mode reads
  /// only the source entries.
  std::vector<double> load_pkts;
  std::vector<double> packet_bits;   ///< per service
  std::vector<double> budgets_s;     ///< per service
  double p_tot_w = 0.0;              ///< per-transmitter power
  Objective objective = Objective::kMinLatency;
  PowerPolicy power_policy = PowerPolicy::kOptimize;
  /// Paths allowed to carry traffic; empty means all 2^H paths. Only links
  /// on an allowed path may get a share or power.
  std::vector<std::size_t> allowed_paths;
  /// Min-latency only: treat latency budgets as hard constraints.
  bool enforce_budgets = false;

  std::size_t services() const { return packet_bits.size(); }
  void validate() const;
  /// Links lying on at least one allowed path.
  std::vector<bool> allowed_links() const;
  /// Whether service q offers any traffic.
  bool service_active(std::size_t q) const;
};

ProblemInstance make_instance(std::shared_ptr<const Topology> topo, const ChannelBlock& channel,
                              const ChannelParams& params, const TrafficState& traffic, TrafficMode mode,
                              std::span<const ServiceSpec> services, double p_tot_w, Objective objective);

/// Latency model evaluated directly on an instance: per (service, path)
/// latency of a decision, using the instance's loads and rate curves.
struct InstanceLatency {
  std::vector<double> path_latency_s;  ///< q * paths + b
  std::vector<double> worst_latency_s;
};

InstanceLatency evaluate_latency(const ProblemInstance& inst, const Decision& decision);

/// Problem objective of a decision: sum_q max_b u (s) or total power (W).
double objective_value(const ProblemInstance& inst, const Decision& decision);

}  // namespace mhmp
