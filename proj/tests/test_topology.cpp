#include <doctest.h>

#include <set>

#include "mhmp/errors.hpp"
#include "mhmp/topology.hpp"

using namespace mhmp;

TEST_CASE("link and path counts") {
  for (int h = 1; h <= 6; ++h) {
    const Topology t = build_topology(h);
    CAPTURE(h);
    CHECK(t.link_count() == link_count_for(h));
    CHECK(t.link_count() == static_cast<std::size_t>(4 * h));
    CHECK(t.path_count() == (std::size_t{1} << h));
    CHECK(t.node_count() == static_cast<std::size_t>(1 + 2 * h));
  }
}

TEST_CASE("every path has H+1 hops ending at the destination") {
  const Topology t = build_topology(3);
  std::set<std::vector<std::size_t>> seen;
  for (const PathId p : enumerate_paths(t)) {
    const auto links = path_links(t, p);
    REQUIRE(links.size() == 4);
    CHECK(links.front().layer == 0);
    CHECK(links.front().tx == 0);
    for (std::size_t h = 1; h < links.size(); ++h) {
      CHECK(links[h].layer == static_cast<int>(h));
      CHECK(links[h].tx == links[h - 1].rx);
    }
    const auto idx = t.path_link_indices(p.index);
    seen.insert({idx.begin(), idx.end()});
  }
  CHECK(seen.size() == 8);
}

TEST_CASE("path bits select relays little-endian") {
  const Topology t = build_topology(2);
  CHECK(relay_choices(t, {0b01}) == std::vector<int>{1, 0});
  CHECK(relay_choices(t, {0b10}) == std::vector<int>{0, 1});
  const auto links = path_links(t, {0b01});
  CHECK(links[0] == LinkId{0, 0, 1});
  CHECK(links[1] == LinkId{1, 1, 0});
}

TEST_CASE("node and link indexing round-trips") {
  const Topology t = build_topology(2);
  for (std::size_t v = 0; v < t.node_count(); ++v) CHECK(t.node_index(t.node(v)) == v);
  for (std::size_t e = 0; e < t.link_count(); ++e) {
    CHECK(t.link_index(t.link(e)) == e);
    CHECK(t.link_tx_node(e) < t.node_count());
  }
  CHECK_FALSE(t.find_link({0, 1, 0}).has_value());
  CHECK(t.out_links(0).size() == 2);
}

TEST_CASE("distances") {
  CHECK(build_topology(1).distance_m(0) == Topology::kDefaultDistanceM);
  const double one[] = {80.0};
  CHECK(build_topology(2, one).distance_m(7) == 80.0);
  const double each[] = {10.0, 20.0, 30.0, 40.0};
  CHECK(build_topology(1, each).distance_m(3) == 40.0);
}

TEST_CASE("invalid topologies are rejected") {
  CHECK_THROWS_AS(build_topology(0), ConfigError);
  const double bad[] = {-1.0};
  CHECK_THROWS_AS(build_topology(1, bad), ConfigError);
  const double wrong_count[] = {1.0, 2.0};
  CHECK_THROWS_AS(build_topology(1, wrong_count), ConfigError);
  CHECK_THROWS_AS(path_links(build_topology(1), {4}), ConfigError);
}
