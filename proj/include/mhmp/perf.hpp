#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mhmp/channel.hpp"
#include "mhmp/decision.hpp"
#include "mhmp/topology.hpp"
#include "mhmp/traffic.hpp"

namespace mhmp {

/// Transmission latency of one hop in seconds: alpha (lambda + n) M / D.
/// Zero traffic yields 0 even on a dead link; positive traffic over D = 0
/// throws InfeasibleLinkError.
double hop_latency(double alpha, double lambda_pkts, double backlog_pkts, double packet_bits, double rate_bps);

/// Per-link rates (bits/s) of a decision on a realized channel.
std::vector<double> link_rates(const ChannelBlock& channel, const ChannelParams& params, const Decision& decision);

/// Everything the latency model needs for one block besides the decision.
struct LatencyInputs {
  std::vector<double> node_load_pkts;  ///< node-major, (lambda + n) per service
  std::vector<double> packet_bits;     ///< per service
  std::vector<double> rates_bps;       ///< per link
};

LatencyInputs latency_inputs(const Topology& topo, const Decision& decision, const TrafficState& traffic,
                             TrafficMode mode, std::span<const ServiceSpec> services,
                             const ChannelBlock& channel, const ChannelParams& params);

/// Hop latency of link `e` for service `q`.
double link_latency(const Topology& topo, const Decision& decision, const LatencyInputs& in, std::size_t e,
                    std::size_t q);

/// End-to-end latency of path b for service q (sum over its H+1 hops).
double path_latency(const Topology& topo, const Decision& decision, const LatencyInputs& in, PathId b,
                    std::size_t q);

struct BlockMetrics {
  std::size_t block = 0;
  std::size_t services = 0;
  std::size_t paths = 0;
  std::vector<double> path_latency_s;   ///< q * paths + b
  std::vector<double> worst_latency_s;  ///< per service, max over all paths
  std::vector<double> link_power_w;
  double total_power_w = 0.0;
  DecisionCheck constraints;
  std::vector<bool> within_budget;      ///< per service: worst <= budget

  double u(std::size_t q, std::size_t b) const { return path_latency_s[q * paths + b]; }
};

BlockMetrics block_metrics(const Topology& topo, const Decision& decision, const LatencyInputs& in,
                           std::span<const ServiceSpec> services, double p_tot_w, PowerRule rule);

/// Empirical CDF of `series` evaluated at each grid point (fraction <= x).
std::vector<double> empirical_cdf(std::span<const double> series, std::span<const double> grid);

/// `points` evenly spaced values from 0 to `upper`.
std::vector<double> linear_grid(double upper, std::size_t points);

struct RunSummary {
  std::size_t blocks = 0;
  std::vector<double> mean_latency_s;               ///< per service
  double mean_power_w = 0.0;
  std::vector<std::vector<double>> latency_series_s;///< per service, per block
  std::vector<double> power_series_w;
  std::vector<double> cdf_grid_s;
  std::vector<std::vector<double>> cdf;             ///< per service, on cdf_grid_s
};

/// Arithmetic means over blocks plus CDFs on `cdf_grid_s` (when empty a
/// 101-point grid up to the largest latency is used). Throws ConfigError on
/// an empty run.
RunSummary summarize(std::span<const BlockMetrics> run, std::span<const double> cdf_grid_s = {});

}  // namespace mhmp
