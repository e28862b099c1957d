#include "mhmp/perf.hpp"

#include <algorithm>
#include <limits>

#include "mhmp/errors.hpp"

namespace mhmp {

double hop_latency(double alpha, double lambda_pkts, double backlog_pkts, double packet_bits, double rate_bps) {
  if (alpha < 0.0 || lambda_pkts < 0.0 || backlog_pkts < 0.0 || packet_bits < 0.0 || rate_bps < 0.0)
    throw ConfigError("hop latency inputs must be nonnegative");
  const double bits = alpha * (lambda_pkts + backlog_pkts) * packet_bits;
  if (bits == 0.0) return 0.0;
  if (rate_bps == 0.0) throw InfeasibleLinkError("positive traffic on a zero-rate link");
  return bits / rate_bps;
}

std::vector<double> link_rates(const ChannelBlock& channel, const ChannelParams& params, const Decision& decision) {
  std::vector<double> rates(channel.links.size());
  for (std::size_t e = 0; e < rates.size(); ++e) rates[e] = rate_curve(channel.links[e], params).rate(decision.power_w[e]);
  return rates;
}

LatencyInputs latency_inputs(const Topology& topo, const Decision& decision, const TrafficState& traffic,
                             TrafficMode mode, std::span<const ServiceSpec> services,
                             const ChannelBlock& channel, const ChannelParams& params) {
  LatencyInputs in;
  in.node_load_pkts = node_loads(topo, decision, traffic, mode);
  for (const auto& s : services) in.packet_bits.push_back(s.packet_bits);
  in.rates_bps = link_rates(channel, params, decision);
  return in;
}

double link_latency(const Topology& topo, const Decision& decision, const LatencyInputs& in, std::size_t e,
                    std::size_t q) {
  const std::size_t v = topo.link_tx_node(e);
  return hop_latency(decision.a(e, q), in.node_load_pkts[v * decision.services + q], 0.0, in.packet_bits[q],
                     in.rates_bps[e]);
}

double path_latency(const Topology& topo, const Decision& decision, const LatencyInputs& in, PathId b,
                    std::size_t q) {
  double u = 0.0;
  for (std::size_t e : topo.path_link_indices(b.index)) u += link_latency(topo, decision, in, e, q);
  return u;
}

BlockMetrics block_metrics(const Topology& topo, const Decision& decision, const LatencyInputs& in,
                           std::span<const ServiceSpec> services, double p_tot_w, PowerRule rule) {
  BlockMetrics m;
  m.block = decision.block;
  m.services = decision.services;
  m.paths = topo.path_count();
  m.path_latency_s.assign(m.services * m.paths, 0.0);
  m.worst_latency_s.assign(m.services, 0.0);
  m.within_budget.assign(m.services, true);

  std::vector<double> hop(topo.link_count());
  for (std::size_t q = 0; q < m.services; ++q) {
    for (std::size_t e = 0; e < hop.size(); ++e) hop[e] = link_latency(topo, decision, in, e, q);
    double worst = 0.0;
    for (std::size_t b = 0; b < m.paths; ++b) {
      double u = 0.0;
      for (std::size_t e : topo.path_link_indices(b)) u += hop[e];
      m.path_latency_s[q * m.paths + b] = u;
      worst = std::max(worst, u);
    }
    m.worst_latency_s[q] = worst;
    if (q < services.size()) m.within_budget[q] = worst <= services[q].latency_budget_s;
  }
  m.link_power_w = decision.power_w;
  m.total_power_w = decision.total_power_w();
  m.constraints = check_decision(topo, decision, p_tot_w, rule);
  return m;
}

std::vector<double> empirical_cdf(std::span<const double> series, std::span<const double> grid) {
  std::vector<double> sorted(series.begin(), series.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  out.reserve(grid.size());
  const double n = static_cast<double>(sorted.size());
  for (double x : grid) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
    out.push_back(n == 0.0 ? 0.0 : static_cast<double>(it - sorted.begin()) / n);
  }
  return out;
}

std::vector<double> linear_grid(double upper, std::size_t points) {
  std::vector<double> g(points, 0.0);
  if (points < 2) return g;
  for (std::size_t i = 0; i < points; ++i) g[i] = upper * static_cast<double>(i) / static_cast<double>(points - 1);
  return g;
}

RunSummary summarize(std::span<const BlockMetrics> run, std::span<const double> cdf_grid_s) {
  if (run.empty()) throw ConfigError("cannot summarize an empty run");
  RunSummary s;
  s.blocks = run.size();
  const std::size_t nq = run.front().services;
  s.mean_latency_s.assign(nq, 0.0);
  s.latency_series_s.assign(nq, {});
  double max_latency = 0.0;
  for (const auto& m : run) {
    if (m.services != nq) throw ConfigError("blocks disagree on the number of services");
    for (std::size_t q = 0; q < nq; ++q) {
      s.latency_series_s[q].push_back(m.worst_latency_s[q]);
      s.mean_latency_s[q] += m.worst_latency_s[q];
      max_latency = std::max(max_latency, m.worst_latency_s[q]);
    }
    s.power_series_w.push_back(m.total_power_w);
    s.mean_power_w += m.total_power_w;
  }
  const double n = static_cast<double>(run.size());
  for (double& v : s.mean_latency_s) v /= n;
  s.mean_power_w /= n;

  if (cdf_grid_s.empty())
    s.cdf_grid_s = linear_grid(max_latency, 101);
  else
    s.cdf_grid_s.assign(cdf_grid_s.begin(), cdf_grid_s.end());
  for (std::size_t q = 0; q < nq; ++q) s.cdf.push_back(empirical_cdf(s.latency_series_s[q], s.cdf_grid_s));
  return s;
}

}  // namespace mhmp
