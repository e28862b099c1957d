#include "mhmp/problem.hpp"

#include <algorithm>
#include <cmath>

#include "mhmp/errors.hpp"
#include "mhmp/perf.hpp"

namespace mhmp {

void ProblemInstance::validate() const {
  if (!topo) throw ConfigError("problem instance has no topology");
  const std::size_t nq = services();
  if (curves.size() != topo->link_count()) throw ConfigError("one rate curve per link required");
  if (load_pkts.size() != topo->node_count() * nq) throw ConfigError("load table has wrong shape");
  if (budgets_s.size() != nq) throw ConfigError("one latency budget per service required");
  if (!(p_tot_w > 0.0) || !std::isfinite(p_tot_w)) throw ConfigError("P_tot must be a positive finite power");
  for (const auto& c : curves)
    if (!(c.bandwidth_hz > 0.0) || !(c.gain_per_watt >= 0.0) || !std::isfinite(c.gain_per_watt))
      throw ConfigError("rate curves need positive bandwidth and finite gain");
  for (double v : load_pkts)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("loads must be finite and nonnegative");
  for (std::size_t q = 0; q < nq; ++q) {
    if (!(packet_bits[q] > 0.0)) throw ConfigError("packet size must be > 0");
    const bool need_budget = objective == Objective::kMinPower || enforce_budgets;
    if (need_budget && !(budgets_s[q] > 0.0)) throw ConfigError("latency budgets must be > 0");
  }
  for (std::size_t b : allowed_paths)
    if (b >= topo->path_count()) throw ConfigError("allowed path index out of range");
}

std::vector<bool> ProblemInstance::allowed_links() const {
  std::vector<bool> allowed(topo->link_count(), allowed_paths.empty());
  for (std::size_t b : allowed_paths)
    for (std::size_t e : topo->path_link_indices(b)) allowed[e] = true;
  return allowed;
}

bool ProblemInstance::service_active(std::size_t q) const {
  const std::size_t nq = services();
  if (traffic_mode == TrafficMode::kFlowPropagated) return load_pkts[q] > 0.0;
  const auto allowed = allowed_links();
  for (std::size_t v = 0; v < topo->node_count(); ++v) {
    if (load_pkts[v * nq + q] <= 0.0) continue;
    for (std::size_t e : topo->out_links(v))
      if (allowed[e]) return true;
  }
  return false;
}

ProblemInstance make_instance(std::shared_ptr<const Topology> topo, const ChannelBlock& channel,
                              const ChannelParams& params, const TrafficState& traffic, TrafficMode mode,
                              std::span<const ServiceSpec> services, double p_tot_w, Objective objective) {
  ProblemInstance inst;
  inst.topo = std::move(topo);
  for (const auto& l : channel.links) inst.curves.push_back(rate_curve(l, params));
  inst.traffic_mode = mode;
  const std::size_t nq = services.size();
  if (traffic.services != nq) throw ConfigError("traffic and service list disagree");
  inst.load_pkts.assign(inst.topo->node_count() * nq, 0.0);
  for (std::size_t v = 0; v < inst.topo->node_count(); ++v)
    for (std::size_t q = 0; q < nq; ++q) {
      if (mode == TrafficMode::kFlowPropagated && v > 0) continue;
      inst.load_pkts[v * nq + q] = traffic.offered(v, q);
    }
  for (const auto& s : services) {
    inst.packet_bits.push_back(s.packet_bits);
    inst.budgets_s.push_back(s.latency_budget_s);
  }
  inst.p_tot_w = p_tot_w;
  inst.objective = objective;
  inst.validate();
  return inst;
}

InstanceLatency evaluate_latency(const ProblemInstance& inst, const Decision& decision) {
  const Topology& topo = *inst.topo;
  const std::size_t nq = inst.services();
  LatencyInputs in;
  in.packet_bits = inst.packet_bits;
  in.rates_bps.resize(topo.link_count());
  for (std::size_t e = 0; e < topo.link_count(); ++e) in.rates_bps[e] = inst.curves[e].rate(decision.power_w[e]);
  if (inst.traffic_mode == TrafficMode::kFlowPropagated) {
    std::vector<double> inj(topo.node_count() * nq, 0.0);
    for (std::size_t q = 0; q < nq; ++q) inj[q] = inst.load_pkts[q];
    in.node_load_pkts = propagate_traffic(topo, decision, inj);
  } else {
    in.node_load_pkts.assign(topo.node_count() * nq, 0.0);
    std::vector<bool> reached(topo.node_count() * nq, false);
    for (std::size_t q = 0; q < nq; ++q) reached[q] = true;
    for (std::size_t v = 0; v < topo.node_count(); ++v)
      for (std::size_t q = 0; q < nq; ++q) {
        if (!reached[v * nq + q]) continue;
        in.node_load_pkts[v * nq + q] = inst.load_pkts[v * nq + q];
        for (std::size_t e : topo.out_links(v))
          if (auto rx = topo.link_rx_node(e); rx && decision.a(e, q) > 0.0) reached[*rx * nq + q] = true;
      }
  }

  InstanceLatency out;
  const std::size_t np = topo.path_count();
  out.path_latency_s.assign(nq * np, 0.0);
  out.worst_latency_s.assign(nq, 0.0);
  for (std::size_t q = 0; q < nq; ++q) {
    for (std::size_t b = 0; b < np; ++b) {
      const double u = path_latency(topo, decision, in, PathId{static_cast<std::uint32_t>(b)}, q);
      out.path_latency_s[q * np + b] = u;
      out.worst_latency_s[q] = std::max(out.worst_latency_s[q], u);
    }
  }
  return out;
}

double objective_value(const ProblemInstance& inst, const Decision& decision) {
  if (inst.objective == Objective::kMinPower) return decision.total_power_w();
  double sum = 0.0;
  for (double w : evaluate_latency(inst, decision).worst_latency_s) sum += w;
  return sum;
}

}  // namespace mhmp
