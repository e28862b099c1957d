#include "mhmp/decision.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mhmp/channel.hpp"

namespace mhmp {

Decision::Decision(const Topology& topo, std::size_t n_services)
    : services(n_services), alpha(topo.link_count() * n_services, 0.0), power_w(topo.link_count(), 0.0) {}

double Decision::power_dbm(std::size_t link) const { return watts_to_dbm(power_w.at(link)); }

double Decision::total_power_w() const {
  double s = 0.0;
  for (double p : power_w) s += p;
  return s;
}

double Decision::node_power_w(const Topology& topo, std::size_t node) const {
  double s = 0.0;
  for (std::size_t e : topo.out_links(node)) s += power_w[e];
  return s;
}

Decision uniform_decision(const Topology& topo, std::size_t n_services, double p_tot_w) {
  Decision d(topo, n_services);
  for (std::size_t v = 0; v < topo.node_count(); ++v) {
    auto out = topo.out_links(v);
    const double share = 1.0 / static_cast<double>(out.size());
    for (std::size_t e : out) {
      d.power_w[e] = p_tot_w * share;
      for (std::size_t q = 0; q < n_services; ++q) d.a(e, q) = share;
    }
  }
  return d;
}

double DecisionCheck::worst() const { return std::max({c2_range, c3_simplex, c4_power_box, c5_power_sum}); }

std::string DecisionCheck::describe() const {
  std::ostringstream os;
  os << "C2=" << c2_range << " C3=" << c3_simplex << " C4=" << c4_power_box << " C5=" << c5_power_sum;
  return os.str();
}

std::vector<bool> active_nodes(const Topology& topo, const Decision& decision) {
  std::vector<bool> active(topo.node_count(), false);
  active[0] = true;
  // Nodes are numbered in layer order, so one forward sweep suffices.
  for (std::size_t v = 0; v < topo.node_count(); ++v) {
    if (!active[v]) continue;
    for (std::size_t e : topo.out_links(v)) {
      auto rx = topo.link_rx_node(e);
      if (!rx) continue;
      for (std::size_t q = 0; q < decision.services; ++q)
        if (decision.a(e, q) > 0.0) active[*rx] = true;
    }
  }
  return active;
}

DecisionCheck check_decision(const Topology& topo, const Decision& decision, double p_tot_w, PowerRule rule) {
  DecisionCheck c;
  const auto active = active_nodes(topo, decision);
  for (std::size_t v = 0; v < topo.node_count(); ++v) {
    auto out = topo.out_links(v);
    for (std::size_t q = 0; q < decision.services; ++q) {
      double sum = 0.0;
      for (std::size_t e : out) {
        const double a = decision.a(e, q);
        c.c2_range = std::max({c.c2_range, -a, a - 1.0});
        sum += a;
      }
      c.c3_simplex = std::max(c.c3_simplex, std::abs(sum - 1.0));
    }
    double psum = 0.0;
    for (std::size_t e : out) {
      const double p = decision.power_w[e];
      c.c4_power_box = std::max({c.c4_power_box, -p / p_tot_w, (p - p_tot_w) / p_tot_w});
      psum += p;
    }
    const double excess = (psum - p_tot_w) / p_tot_w;
    if (rule == PowerRule::kEqualTotal && active[v])
      c.c5_power_sum = std::max(c.c5_power_sum, std::abs(excess));
    else
      c.c5_power_sum = std::max(c.c5_power_sum, excess);
  }
  return c;
}

}  // namespace mhmp
