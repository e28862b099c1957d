#include "mhmp/scenario.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <optional>

namespace mhmp {

namespace {

using json = nlohmann::json;

enum class Need { kRequired, kOptional };

// Walks one object, recording unknown, missing and mistyped keys.
class Reader {
 public:
  Reader(const json& obj, std::string path, std::vector<std::string>& bad, std::vector<std::string>& why)
      : obj_(obj), path_(std::move(path)), bad_(bad), why_(why) {}

  bool ok() const { return obj_.is_object(); }

  std::optional<double> number(const std::string& key, Need need) {
    const json* v = take(key, need);
    if (!v) return std::nullopt;
    if (!v->is_number()) return fail(key, "must be a number");
    return v->get<double>();
  }

  std::optional<std::int64_t> integer(const std::string& key, Need need) {
    const json* v = take(key, need);
    if (!v) return std::nullopt;
    if (!v->is_number_integer()) return fail<std::int64_t>(key, "must be an integer");
    return v->get<std::int64_t>();
  }

  std::optional<bool> boolean(const std::string& key, Need need) {
    const json* v = take(key, need);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) return fail<bool>(key, "must be true or false");
    return v->get<bool>();
  }

  std::optional<std::string> text(const std::string& key, Need need) {
    const json* v = take(key, need);
    if (!v) return std::nullopt;
    if (!v->is_string()) return fail<std::string>(key, "must be a string");
    return v->get<std::string>();
  }

  const json* child(const std::string& key, Need need) { return take(key, need); }

  void reject(const std::string& key, const std::string& reason) {
    bad_.push_back(at(key));
    why_.push_back(at(key) + " " + reason);
  }

  // Reports every key that was never read.
  void finish() {
    if (!obj_.is_object()) return;
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) reject(it.key(), "is not a recognized key");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json* take(const std::string& key, Need need) {
    seen_[key] = true;
    if (!obj_.is_object() || !obj_.contains(key)) {
      if (need == Need::kRequired) reject(key, "is required");
      return nullptr;
    }
    return &obj_.at(key);
  }

  template <class T = double>
  std::optional<T> fail(const std::string& key, const std::string& reason) {
    reject(key, reason);
    return std::nullopt;
  }

  const json& obj_;
  std::string path_;
  std::vector<std::string>& bad_;
  std::vector<std::string>& why_;
  std::map<std::string, bool> seen_;
};

template <class T>
void set(std::optional<T> v, T& target) {
  if (v) target = *v;
}

std::string policy_name(BandwidthPolicy p) {
  return p == BandwidthPolicy::kFullReuse ? "full_reuse" : "per_relay_equal_split";
}

std::string mode_name(TrafficMode m) {
  return m == TrafficMode::kFlowPropagated ? "flow_propagated" : "per_node";
}

}  // namespace

Scenario parse_scenario(const json& doc) {
  std::vector<std::string> bad, why;
  Scenario sc = default_scenario();
  sc.services.clear();
  if (!doc.is_object()) throw ScenarioError("scenario must be a JSON object", {"<root>"});
  Reader root(doc, "", bad, why);

  if (auto v = root.integer("schema_version", Need::kRequired); v && *v != kScenarioSchemaVersion)
    root.reject("schema_version", "must be " + std::to_string(kScenarioSchemaVersion));

  const auto section = [&](const std::string& key, Need need) -> std::optional<Reader> {
    const json* s = root.child(key, need);
    if (!s) return std::nullopt;
    if (!s->is_object()) {
      root.reject(key, "must be an object");
      return std::nullopt;
    }
    return Reader(*s, key, bad, why);
  };

  if (auto t = section("topology", Need::kRequired)) {
    if (auto v = t->integer("relay_layers", Need::kRequired)) sc.relay_layers = static_cast<int>(*v);
    set(t->number("link_spacing_m", Need::kOptional), sc.link_spacing_m);
    if (const json* d = t->child("link_distances_m", Need::kOptional)) {
      if (!d->is_array()) {
        t->reject("link_distances_m", "must be an array of numbers");
      } else {
        for (const auto& x : *d) {
          if (!x.is_number()) {
            t->reject("link_distances_m", "must be an array of numbers");
            break;
          }
          sc.link_distances_m.push_back(x.get<double>());
        }
      }
    }
    t->finish();
  }

  if (auto c = section("channel", Need::kRequired)) {
    set(c->number("carrier_ghz", Need::kRequired), sc.channel.carrier_ghz);
    set(c->number("noise_psd_dbm_hz", Need::kRequired), sc.channel.noise_psd_dbm_hz);
    set(c->number("total_bandwidth_hz", Need::kRequired), sc.channel.total_bandwidth_hz);
    set(c->number("shadowing_sigma_db", Need::kRequired), sc.channel.shadowing_sigma_db);
    if (auto p = c->text("bandwidth_policy", Need::kOptional)) {
      if (*p == "per_relay_equal_split")
        sc.channel.bandwidth_policy = BandwidthPolicy::kPerRelayEqualSplit;
      else if (*p == "full_reuse")
        sc.channel.bandwidth_policy = BandwidthPolicy::kFullReuse;
      else
        c->reject("bandwidth_policy", "must be per_relay_equal_split or full_reuse");
    }
    set(c->number("tx_height_m", Need::kOptional), sc.channel.tx_height_m);
    set(c->number("rx_height_m", Need::kOptional), sc.channel.rx_height_m);
    set(c->number("displacement_per_block_m", Need::kOptional), sc.channel.displacement_per_block_m);
    c->finish();
  }

  if (auto p = section("power", Need::kRequired)) {
    if (auto v = p->number("p_tot_dbm", Need::kRequired)) sc.p_tot_w = dbm_to_watts(*v);
    p->finish();
  }

  if (const json* s = root.child("services", Need::kRequired)) {
    if (!s->is_array() || s->empty()) {
      root.reject("services", "must be a nonempty array");
    } else {
      for (std::size_t i = 0; i < s->size(); ++i) {
        const std::string path = "services[" + std::to_string(i) + "]";
        if (!(*s)[i].is_object()) {
          bad.push_back(path);
          why.push_back(path + " must be an object");
          continue;
        }
        Reader r((*s)[i], path, bad, why);
        ServiceSpec spec;
        spec.id = static_cast<int>(i + 1);
        if (auto v = r.integer("id", Need::kOptional)) spec.id = static_cast<int>(*v);
        if (auto v = r.number("packet_bytes", Need::kRequired)) spec.packet_bits = 8.0 * *v;
        set(r.number("arrival_rate_pps", Need::kRequired), spec.arrival_rate_pps);
        set(r.number("latency_budget_s", Need::kRequired), spec.latency_budget_s);
        set(r.number("backlog_mean_pkts", Need::kOptional), spec.backlog_mean_pkts);
        r.finish();
        sc.services.push_back(spec);
      }
    }
  }

  if (auto m = section("simulation", Need::kRequired)) {
    set(m->number("block_s", Need::kRequired), sc.block_s);
    const auto horizon = m->number("horizon_s", Need::kRequired);
    if (auto v = m->integer("replicas", Need::kRequired)) {
      if (*v < 1)
        m->reject("replicas", "must be >= 1");
      else
        sc.replicas = static_cast<std::size_t>(*v);
    }
    if (auto v = m->integer("seed", Need::kRequired)) sc.seed = static_cast<std::uint64_t>(*v);
    if (auto t = m->text("traffic_mode", Need::kOptional)) {
      if (*t == "flow_propagated")
        sc.traffic_mode = TrafficMode::kFlowPropagated;
      else if (*t == "per_node")
        sc.traffic_mode = TrafficMode::kPerNode;
      else
        m->reject("traffic_mode", "must be flow_propagated or per_node");
    }
    set(m->boolean("closed_loop", Need::kOptional), sc.closed_loop);
    if (auto v = m->integer("sp_warmup_blocks", Need::kOptional)) {
      if (*v < 1)
        m->reject("sp_warmup_blocks", "must be >= 1");
      else
        sc.sp_warmup_blocks = static_cast<std::size_t>(*v);
    }
    if (auto v = m->integer("cdf_points", Need::kOptional)) {
      if (*v < 2)
        m->reject("cdf_points", "must be >= 2");
      else
        sc.cdf_points = static_cast<std::size_t>(*v);
    }
    if (horizon && sc.block_s > 0.0) {
      const double n = *horizon / sc.block_s;
      if (!(n >= 1.0) || std::abs(n - std::round(n)) > 1e-9 * n)
        m->reject("horizon_s", "must be a positive whole number of blocks");
      else
        sc.blocks = static_cast<std::size_t>(std::llround(n));
    }
    m->finish();
  }

  if (auto a = section("allp", Need::kOptional)) {
    set(a->number("delta", Need::kOptional), sc.allp.delta);
    set(a->number("delta_p_w", Need::kOptional), sc.allp.delta_p_w);
    set(a->number("delta_l_s", Need::kOptional), sc.allp.delta_l_s);
    if (auto v = a->number("p_hard_dbm", Need::kOptional)) sc.allp.p_hard_w = dbm_to_watts(*v);
    set(a->number("l_ceiling_factor", Need::kOptional), sc.allp.l_ceiling_factor);
    a->finish();
  }

  if (auto s = section("solver", Need::kOptional)) {
    set(s->number("kkt_tolerance", Need::kOptional), sc.solver.kkt_tolerance);
    set(s->number("gap_tolerance", Need::kOptional), sc.solver.gap_tolerance);
    set(s->number("barrier_growth", Need::kOptional), sc.solver.barrier_growth);
    if (auto v = s->integer("max_outer_iterations", Need::kOptional))
      sc.solver.max_outer_iterations = static_cast<int>(*v);
    if (auto v = s->integer("max_newton_per_center", Need::kOptional))
      sc.solver.max_newton_per_center = static_cast<int>(*v);
    if (auto v = s->integer("extra_starts", Need::kOptional)) sc.solver.extra_starts = static_cast<int>(*v);
    s->finish();
  }
  root.finish();

  if (!bad.empty()) {
    std::string msg = "invalid scenario:";
    for (const auto& w : why) msg += "\n  " + w;
    throw ScenarioError(msg, bad);
  }
  try {
    sc.validate();
  } catch (const ConfigError& e) {
    throw ScenarioError(std::string("invalid scenario: ") + e.what(), {});
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot read scenario file " + path, {});
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError("scenario file " + path + " is not valid JSON: " + e.what(), {});
  }
  return parse_scenario(doc);
}

nlohmann::ordered_json scenario_json(const Scenario& sc) {
  nlohmann::ordered_json j;
  j["schema_version"] = kScenarioSchemaVersion;
  j["topology"] = {{"relay_layers", sc.relay_layers}, {"link_spacing_m", sc.link_spacing_m}};
  if (!sc.link_distances_m.empty()) j["topology"]["link_distances_m"] = sc.link_distances_m;
  j["channel"] = {{"carrier_ghz", sc.channel.carrier_ghz},
                  {"noise_psd_dbm_hz", sc.channel.noise_psd_dbm_hz},
                  {"total_bandwidth_hz", sc.channel.total_bandwidth_hz},
                  {"bandwidth_policy", policy_name(sc.channel.bandwidth_policy)},
                  {"shadowing_sigma_db", sc.channel.shadowing_sigma_db},
                  {"tx_height_m", sc.channel.tx_height_m},
                  {"rx_height_m", sc.channel.rx_height_m},
                  {"displacement_per_block_m", sc.channel.displacement_per_block_m}};
  j["power"] = {{"p_tot_dbm", watts_to_dbm(sc.p_tot_w)}};
  auto& services = j["services"] = nlohmann::ordered_json::array();
  for (const auto& s : sc.services)
    services.push_back({{"id", s.id},
                        {"packet_bytes", s.packet_bits / 8.0},
                        {"arrival_rate_pps", s.arrival_rate_pps},
                        {"latency_budget_s", s.latency_budget_s},
                        {"backlog_mean_pkts", s.backlog_mean_pkts}});
  j["simulation"] = {{"block_s", sc.block_s},
                     {"horizon_s", sc.block_s * static_cast<double>(sc.blocks)},
                     {"replicas", sc.replicas},
                     {"seed", sc.seed},
                     {"traffic_mode", mode_name(sc.traffic_mode)},
                     {"closed_loop", sc.closed_loop},
                     {"sp_warmup_blocks", sc.sp_warmup_blocks},
                     {"cdf_points", sc.cdf_points}};
  j["allp"] = {{"delta", sc.allp.delta},
               {"delta_p_w", sc.allp.delta_p_w},
               {"delta_l_s", sc.allp.delta_l_s},
               {"l_ceiling_factor", sc.allp.l_ceiling_factor}};
  if (sc.allp.p_hard_w) j["allp"]["p_hard_dbm"] = watts_to_dbm(*sc.allp.p_hard_w);
  j["solver"] = {{"kkt_tolerance", sc.solver.kkt_tolerance},
                 {"gap_tolerance", sc.solver.gap_tolerance},
                 {"barrier_growth", sc.solver.barrier_growth},
                 {"max_outer_iterations", sc.solver.max_outer_iterations},
                 {"max_newton_per_center", sc.solver.max_newton_per_center},
                 {"extra_starts", sc.solver.extra_starts}};
  return j;
}

}  // namespace mhmp
