#pragma once

#include <memory>
#include <random>
#include <vector>

#include "mhmp/channel.hpp"
#include "mhmp/problem.hpp"
#include "mhmp/topology.hpp"

namespace fixtures {

struct InstanceSpec {
  int hops = 1;
  std::vector<double> loss_db;            ///< per link; empty -> 100 dB everywhere
  std::vector<double> source_pkts{100.0}; ///< per service
  std::vector<double> packet_bits{2000.0};
  std::vector<double> budgets_s{0.03};
  double p_tot_w = 0.19952623149688797;   ///< 23 dBm
  mhmp::Objective objective = mhmp::Objective::kMinLatency;
  mhmp::TrafficMode mode = mhmp::TrafficMode::kFlowPropagated;
};

inline mhmp::ProblemInstance build(const InstanceSpec& s) {
  auto topo = std::make_shared<const mhmp::Topology>(mhmp::build_topology(s.hops));
  mhmp::ChannelParams params;
  mhmp::ProblemInstance inst;
  inst.topo = topo;
  for (std::size_t e = 0; e < topo->link_count(); ++e) {
    mhmp::LinkState l{topo->link(e), 0, s.loss_db.empty() ? 100.0 : s.loss_db[e],
                      mhmp::link_bandwidth_hz(*topo, params)};
    inst.curves.push_back(mhmp::rate_curve(l, params));
  }
  inst.traffic_mode = s.mode;
  const std::size_t nq = s.source_pkts.size();
  inst.load_pkts.assign(topo->node_count() * nq, 0.0);
  for (std::size_t q = 0; q < nq; ++q) {
    if (s.mode == mhmp::TrafficMode::kFlowPropagated) {
      inst.load_pkts[q] = s.source_pkts[q];
    } else {
      for (std::size_t v = 0; v < topo->node_count(); ++v) inst.load_pkts[v * nq + q] = s.source_pkts[q];
    }
  }
  inst.packet_bits = s.packet_bits;
  inst.budgets_s = s.budgets_s;
  inst.p_tot_w = s.p_tot_w;
  inst.objective = s.objective;
  return inst;
}

/// Random instance: losses uniform in [lo, hi] dB, loads uniform in [50, 250].
inline mhmp::ProblemInstance random_instance(int hops, std::size_t services, std::mt19937_64& rng,
                                             double lo = 90.0, double hi = 110.0) {
  InstanceSpec s;
  s.hops = hops;
  std::uniform_real_distribution<double> loss(lo, hi), load(50.0, 250.0);
  s.loss_db.resize(mhmp::link_count_for(hops));
  for (double& l : s.loss_db) l = loss(rng);
  s.source_pkts.clear();
  s.packet_bits.clear();
  s.budgets_s.clear();
  const double bits[] = {2000.0, 800.0};
  for (std::size_t q = 0; q < services; ++q) {
    s.source_pkts.push_back(load(rng));
    s.packet_bits.push_back(bits[q % 2]);
    s.budgets_s.push_back(0.03);
  }
  return build(s);
}

}  // namespace fixtures
