#include "mhmp/topology.hpp"

#include <cmath>
#include <sstream>

#include "mhmp/errors.hpp"

namespace mhmp {

std::string to_string(const LinkId& link) {
  std::ostringstream os;
  os << "(" << link.layer << "," << link.tx << "->" << link.rx << ")";
  return os.str();
}

std::size_t link_count_for(int relay_layers) {
  if (relay_layers < 1) return 0;
  return static_cast<std::size_t>(4 * relay_layers);
}

Topology build_topology(int relay_layers, std::span<const double> link_distances_m) {
  if (relay_layers < 1) throw ConfigError("relay_layers must be >= 1");
  // 2^H paths are enumerated into 32-bit indices and dense path tables.
  if (relay_layers > 16) throw ConfigError("relay_layers must be <= 16");

  Topology topo;
  topo.relay_layers_ = relay_layers;
  const int r = topo.relays_per_layer_;
  const int last = relay_layers;

  for (int layer = 0; layer <= last; ++layer) {
    topo.layer_offset_.push_back(topo.links_.size());
    const int senders = layer == 0 ? 1 : r;
    const int receivers = layer == last ? 1 : r;
    for (int tx = 0; tx < senders; ++tx)
      for (int rx = 0; rx < receivers; ++rx) topo.links_.push_back({layer, tx, rx});
  }

  const std::size_t n_links = topo.links_.size();
  if (link_distances_m.empty()) {
    topo.distances_.assign(n_links, Topology::kDefaultDistanceM);
  } else if (link_distances_m.size() == 1) {
    topo.distances_.assign(n_links, link_distances_m[0]);
  } else if (link_distances_m.size() == n_links) {
    topo.distances_.assign(link_distances_m.begin(), link_distances_m.end());
  } else {
    throw ConfigError("link distance list must have 1 or " + std::to_string(n_links) + " entries");
  }
  for (double d : topo.distances_)
    if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError("link distances must be positive and finite");

  topo.out_links_.assign(topo.node_count(), {});
  topo.in_links_.assign(topo.node_count(), {});
  for (std::size_t e = 0; e < n_links; ++e) {
    topo.out_links_[topo.link_tx_node(e)].push_back(e);
    if (auto rx = topo.link_rx_node(e)) topo.in_links_[*rx].push_back(e);
  }

  const std::size_t hops = static_cast<std::size_t>(relay_layers) + 1;
  topo.path_links_flat_.reserve(topo.path_count() * hops);
  for (std::size_t b = 0; b < topo.path_count(); ++b) {
    int prev = 0;
    for (int layer = 0; layer <= last; ++layer) {
      const int next = layer == last ? 0 : static_cast<int>((b >> layer) & 1U);
      topo.path_links_flat_.push_back(topo.link_index({layer, prev, next}));
      prev = next;
    }
  }
  return topo;
}

std::optional<std::size_t> Topology::find_link(const LinkId& link) const {
  const int last = relay_layers_;
  if (link.layer < 0 || link.layer > last) return std::nullopt;
  const int senders = link.layer == 0 ? 1 : relays_per_layer_;
  const int receivers = link.layer == last ? 1 : relays_per_layer_;
  if (link.tx < 0 || link.tx >= senders || link.rx < 0 || link.rx >= receivers) return std::nullopt;
  return layer_offset_[static_cast<std::size_t>(link.layer)] + static_cast<std::size_t>(link.tx * receivers + link.rx);
}

std::size_t Topology::link_index(const LinkId& link) const {
  auto idx = find_link(link);
  if (!idx) throw ConfigError("link " + to_string(link) + " is not part of the topology");
  return *idx;
}

std::size_t Topology::node_index(NodeId node) const {
  if (node.layer == 0 && node.index == 0) return 0;
  if (node.layer < 1 || node.layer > relay_layers_ || node.index < 0 || node.index >= relays_per_layer_)
    throw ConfigError("node is not a transmitting node");
  return 1 + static_cast<std::size_t>(relays_per_layer_ * (node.layer - 1) + node.index);
}

NodeId Topology::node(std::size_t index) const {
  if (index == 0) return {0, 0};
  if (index >= node_count()) throw ConfigError("node index out of range");
  const int k = static_cast<int>(index - 1);
  return {1 + k / relays_per_layer_, k % relays_per_layer_};
}

std::size_t Topology::link_tx_node(std::size_t link_index) const {
  const LinkId& l = links_.at(link_index);
  return node_index({l.layer, l.tx});
}

std::optional<std::size_t> Topology::link_rx_node(std::size_t link_index) const {
  const LinkId& l = links_.at(link_index);
  if (l.layer == relay_layers_) return std::nullopt;
  return node_index({l.layer + 1, l.rx});
}

std::span<const std::size_t> Topology::path_link_indices(std::size_t path_index) const {
  if (path_index >= path_count()) throw ConfigError("path index out of range");
  const std::size_t hops = static_cast<std::size_t>(relay_layers_) + 1;
  return std::span<const std::size_t>(path_links_flat_).subspan(path_index * hops, hops);
}

std::vector<PathId> enumerate_paths(const Topology& topo) {
  std::vector<PathId> paths(topo.path_count());
  for (std::size_t b = 0; b < paths.size(); ++b) paths[b].index = static_cast<std::uint32_t>(b);
  return paths;
}

std::vector<int> relay_choices(const Topology& topo, PathId path) {
  if (path.index >= topo.path_count()) throw ConfigError("path index out of range");
  std::vector<int> bits(static_cast<std::size_t>(topo.relay_layers()));
  for (std::size_t l = 0; l < bits.size(); ++l) bits[l] = static_cast<int>((path.index >> l) & 1U);
  return bits;
}

std::vector<LinkId> path_links(const Topology& topo, PathId path) {
  std::vector<LinkId> out;
  for (std::size_t e : topo.path_link_indices(path.index)) out.push_back(topo.link(e));
  return out;
}

}  // namespace mhmp
