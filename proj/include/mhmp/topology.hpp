#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mhmp {

/// Directed link from node `tx` of `layer` to node `rx` of `layer + 1`.
/// Layer 0 holds the source, layers 1..H the relays, layer H+1 the
/// destination.
struct LinkId {
  int layer = 0;
  int tx = 0;
  int rx = 0;

  friend bool operator==(const LinkId&, const LinkId&) = default;
};

std::string to_string(const LinkId& link);

/// End-to-end path. Bit l of `index` is the relay chosen in layer l+1.
struct PathId {
  std::uint32_t index = 0;

  friend bool operator==(const PathId&, const PathId&) = default;
};

/// Transmitting node (source or relay) addressed by layer and index.
struct NodeId {
  int layer = 0;
  int index = 0;

  friend bool operator==(const NodeId&, const NodeId&) = default;
};

/// Layered multi-hop multi-path relay network.
///
/// Transmitting nodes are numbered densely: node 0 is the source, relay
/// (l, j) is node 1 + R*(l-1) + j with R relays per layer. Links are numbered
/// layer-major; within a layer by (tx, rx). Immutable after construction.
class Topology {
 public:
  static constexpr double kDefaultDistanceM = 50.0;

  int relay_layers() const { return relay_layers_; }
  int relays_per_layer() const { return relays_per_layer_; }
  int paths_per_relay() const { return paths_per_relay_; }

  std::size_t link_count() const { return links_.size(); }
  std::size_t node_count() const { return 1 + static_cast<std::size_t>(relay_layers_ * relays_per_layer_); }
  std::size_t path_count() const { return std::size_t{1} << relay_layers_; }

  const LinkId& link(std::size_t index) const { return links_.at(index); }
  std::span<const LinkId> links() const { return links_; }
  double distance_m(std::size_t link_index) const { return distances_.at(link_index); }
  std::span<const double> distances_m() const { return distances_; }

  std::size_t link_index(const LinkId& link) const;
  std::optional<std::size_t> find_link(const LinkId& link) const;

  std::size_t node_index(NodeId node) const;
  NodeId node(std::size_t index) const;
  /// Transmitting node that owns the link.
  std::size_t link_tx_node(std::size_t link_index) const;
  /// Receiving node of the link; nullopt for links into the destination.
  std::optional<std::size_t> link_rx_node(std::size_t link_index) const;

  std::span<const std::size_t> out_links(std::size_t node_index) const { return out_links_.at(node_index); }
  std::span<const std::size_t> in_links(std::size_t node_index) const { return in_links_.at(node_index); }

  /// Link indices of a path ordered by layer; one entry per hop (H+1 hops).
  std::span<const std::size_t> path_link_indices(std::size_t path_index) const;

  friend Topology build_topology(int relay_layers, std::span<const double> link_distances_m);

 private:
  Topology() = default;

  int relay_layers_ = 0;
  int relays_per_layer_ = 2;
  int paths_per_relay_ = 2;
  std::vector<LinkId> links_;
  std::vector<double> distances_;
  std::vector<std::size_t> layer_offset_;
  std::vector<std::vector<std::size_t>> out_links_;
  std::vector<std::vector<std::size_t>> in_links_;
  std::vector<std::size_t> path_links_flat_;
};

/// Builds the topology. `link_distances_m` is either empty (every link gets
/// the 50 m default), a single value applied to every link, or one value per
/// link in link-index order. Throws ConfigError on H < 1 or distance <= 0.
Topology build_topology(int relay_layers, std::span<const double> link_distances_m = {});

/// Number of links for H relay layers with two relays per layer.
std::size_t link_count_for(int relay_layers);

/// All 2^H paths in canonical little-endian order.
std::vector<PathId> enumerate_paths(const Topology& topo);

/// Relay choice of each layer (size H, entry l = relay index in layer l+1).
std::vector<int> relay_choices(const Topology& topo, PathId path);

/// Unfolded link list of a path. Throws ConfigError for an out-of-range path.
std::vector<LinkId> path_links(const Topology& topo, PathId path);

}  // namespace mhmp
