#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mhmp/topology.hpp"

namespace mhmp {

/// Joint per-block decision: traffic split ratio alpha per (link, service)
/// and transmit power per link. The link (layer, tx, rx) stands for the
/// (layer, transmitter, path) triple; rx is the path index k.
struct Decision {
  std::size_t block = 0;
  std::size_t services = 0;
  std::vector<double> alpha;    ///< link-major: alpha[link * services + q]
  std::vector<double> power_w;  ///< per link, linear watts

  Decision() = default;
  Decision(const Topology& topo, std::size_t n_services);

  double a(std::size_t link, std::size_t q) const { return alpha[link * services + q]; }
  double& a(std::size_t link, std::size_t q) { return alpha[link * services + q]; }
  double power_dbm(std::size_t link) const;
  double total_power_w() const;
  double node_power_w(const Topology& topo, std::size_t node) const;

  friend bool operator==(const Decision&, const Decision&) = default;
};

/// Equal split of every service over every out-link and of P_tot over every
/// transmitter's out-links.
Decision uniform_decision(const Topology& topo, std::size_t n_services, double p_tot_w);

enum class PowerRule {
  kEqualTotal,  ///< min-latency: sum_k P = P_tot for relays carrying traffic
  kAtMostTotal, ///< min-power: sum_k P <= P_tot
};

/// Worst violation of each constraint family, in relative units.
struct DecisionCheck {
  double c2_range = 0.0;    ///< alpha outside [0, 1]
  double c3_simplex = 0.0;  ///< |sum_k alpha - 1|
  double c4_power_box = 0.0;///< P outside [0, P_tot], relative to P_tot
  double c5_power_sum = 0.0;///< relay power sum rule, relative to P_tot

  double worst() const;
  bool ok(double tol = 1e-9) const { return worst() <= tol; }
  std::string describe() const;
};

/// Nodes that receive a positive share of some service from the source under
/// hop-by-hop alpha forwarding. The source is always active.
std::vector<bool> active_nodes(const Topology& topo, const Decision& decision);

DecisionCheck check_decision(const Topology& topo, const Decision& decision, double p_tot_w, PowerRule rule);

}  // namespace mhmp
