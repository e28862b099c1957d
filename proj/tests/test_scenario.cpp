#include <doctest.h>

#include <algorithm>

#include "mhmp/scenario.hpp"

using namespace mhmp;
using nlohmann::json;

namespace {

json default_doc() { return json::parse(scenario_json(default_scenario()).dump()); }

std::vector<std::string> keys_of(const json& doc) {
  try {
    parse_scenario(doc);
  } catch (const ScenarioError& e) {
    return e.keys();
  }
  return {};
}

bool has(const std::vector<std::string>& v, const std::string& k) { return std::find(v.begin(), v.end(), k) != v.end(); }

}  // namespace

TEST_CASE("default document round-trips") {
  const Scenario a = default_scenario();
  const Scenario b = parse_scenario(default_doc());
  CHECK(b.blocks == a.blocks);
  CHECK(b.p_tot_w == doctest::Approx(a.p_tot_w).epsilon(1e-12));
  CHECK(b.services.size() == 2);
  CHECK(b.services[1].packet_bits == doctest::Approx(800.0));
  CHECK(b.services[0].backlog_mean_pkts == a.services[0].backlog_mean_pkts);
  CHECK(scenario_json(b).dump() == scenario_json(a).dump());
}

TEST_CASE("missing required keys are named") {
  json doc = default_doc();
  doc["power"].erase("p_tot_dbm");
  doc["services"][0].erase("latency_budget_s");
  const auto keys = keys_of(doc);
  CHECK(has(keys, "power.p_tot_dbm"));
  CHECK(has(keys, "services[0].latency_budget_s"));
}

TEST_CASE("unknown keys are rejected") {
  json doc = default_doc();
  doc["channel"]["bandwidth_mhz"] = 100;
  doc["extra"] = 1;
  const auto keys = keys_of(doc);
  CHECK(has(keys, "channel.bandwidth_mhz"));
  CHECK(has(keys, "extra"));
}

TEST_CASE("type and value errors") {
  json doc = default_doc();
  doc["simulation"]["replicas"] = "twenty";
  doc["simulation"]["traffic_mode"] = "fast";
  doc["schema_version"] = 2;
  const auto keys = keys_of(doc);
  CHECK(has(keys, "simulation.replicas"));
  CHECK(has(keys, "simulation.traffic_mode"));
  CHECK(has(keys, "schema_version"));

  doc = default_doc();
  doc["simulation"]["horizon_s"] = 10.25;
  CHECK(has(keys_of(doc), "simulation.horizon_s"));
}

TEST_CASE("optional sections may be omitted") {
  json doc = default_doc();
  doc.erase("allp");
  doc.erase("solver");
  doc["simulation"].erase("cdf_points");
  doc["simulation"]["horizon_s"] = 10.0;
  const Scenario sc = parse_scenario(doc);
  CHECK(sc.blocks == 20);
  CHECK(sc.allp.delta == 0.8);
}

TEST_CASE("semantic validation still applies") {
  json doc = default_doc();
  doc["topology"]["relay_layers"] = 0;
  CHECK_THROWS_AS(parse_scenario(doc), ScenarioError);
}
