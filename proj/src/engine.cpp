#include "mhmp/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <memory>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "mhmp/errors.hpp"

namespace mhmp {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

template <class E>
[[noreturn]] void rethrow_at(const E& e, std::size_t block) {
  throw E("block " + std::to_string(block) + ": " + e.what());
}

std::string mode_name(TrafficMode mode) {
  return mode == TrafficMode::kFlowPropagated ? "flow_propagated" : "per_node";
}

}  // namespace

ProblemInstance block_instance(const Scenario& sc, const std::shared_ptr<const Topology>& topo,
                               const BlockRealization& r, Objective objective) {
  return make_instance(topo, r.channel, sc.channel, r.traffic, sc.traffic_mode, sc.services, sc.p_tot_w,
                       objective);
}

void Scenario::validate() const {
  if (relay_layers < 1) throw ConfigError("relay_layers must be >= 1");
  if (!(link_spacing_m > 0.0)) throw ConfigError("link spacing must be > 0");
  channel.validate();
  if (services.empty()) throw ConfigError("at least one service is required");
  for (const auto& s : services) s.validate();
  if (!(p_tot_w > 0.0)) throw ConfigError("p_tot must be positive");
  if (!(block_s > 0.0)) throw ConfigError("block duration must be > 0");
  if (blocks < 1) throw ConfigError("at least one block is required");
  if (replicas < 1) throw ConfigError("at least one replica is required");
  if (sp_warmup_blocks < 1 || sp_warmup_blocks > blocks)
    throw ConfigError("sp warmup must cover between 1 and all blocks");
  if (cdf_points < 2) throw ConfigError("cdf grid needs at least two points");
  allp.validate();
  if (allp.p_hard_w && *allp.p_hard_w < p_tot_w) throw ConfigError("allp p_hard must be at least P_tot");
  (void)topology();
}

Topology Scenario::topology() const {
  if (!link_distances_m.empty()) return build_topology(relay_layers, link_distances_m);
  const double d[] = {link_spacing_m};
  return build_topology(relay_layers, d);
}

Scenario default_scenario() {
  Scenario sc;
  sc.p_tot_w = dbm_to_watts(23.0);
  sc.services = {
      {.id = 1, .packet_bits = 8.0 * 250.0, .arrival_rate_pps = 200.0, .latency_budget_s = 0.03,
       .backlog_mean_pkts = 565.0},
      {.id = 2, .packet_bits = 8.0 * 100.0, .arrival_rate_pps = 500.0, .latency_budget_s = 0.03,
       .backlog_mean_pkts = 215.0},
  };
  return sc;
}

std::mt19937_64 substream(std::uint64_t seed, Stream stream, std::size_t replica, std::size_t block) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(replica),
                    static_cast<std::uint32_t>(block)};
  return std::mt19937_64(seq);
}

BlockRealization realize_block(const Scenario& sc, const Topology& topo, std::size_t replica, std::size_t block) {
  BlockRealization r;
  auto ch = substream(sc.seed, Stream::kChannel, replica, block);
  r.channel = draw_channel_block(topo, sc.channel, block, ch);
  auto tr = substream(sc.seed, Stream::kTraffic, replica, block);
  r.traffic = sample_traffic(topo, sc.services, sc.traffic_mode, sc.block_s, block, tr);
  return r;
}

TrafficState served_packets(const Topology& topo, const Decision& decision, const TrafficState& traffic,
                            const std::vector<double>& rates_bps, std::span<const ServiceSpec> services,
                            TrafficMode mode, double block_s) {
  TrafficState served(topo.node_count(), services.size());
  served.block = traffic.block;
  const std::size_t queued_nodes = mode == TrafficMode::kFlowPropagated ? 1 : topo.node_count();
  for (std::size_t v = 0; v < queued_nodes; ++v)
    for (std::size_t q = 0; q < services.size(); ++q) {
      double capacity = 0.0;
      for (std::size_t e : topo.out_links(v))
        capacity += std::floor(decision.a(e, q) * rates_bps[e] * block_s / services[q].packet_bits);
      const auto held = traffic.lambda(v, q) + traffic.queued(v, q);
      served.lambda(v, q) = std::min<std::int64_t>(held, static_cast<std::int64_t>(capacity));
    }
  return served;
}

ReplicaRun run_replica(const Scenario& sc, SchedulerKind kind, std::size_t replica, const RecordOptions& rec) {
  auto topo = std::make_shared<const Topology>(sc.topology());
  Scheduler scheduler(kind, sc.allp, sc.solver);
  if (kind == SchedulerKind::kSpLl || kind == SchedulerKind::kSpLp) {
    std::vector<ProblemInstance> warmup;
    for (std::size_t n = 0; n < sc.sp_warmup_blocks; ++n)
      warmup.push_back(block_instance(sc, topo, realize_block(sc, *topo, replica, n)));
    scheduler.warm_up(warmup);
  }

  ReplicaRun run;
  run.replica = replica;
  run.fixed_path = scheduler.fixed_path();
  std::vector<BlockMetrics> metrics;
  std::optional<TrafficState> queue;
  for (std::size_t n = 0; n < sc.blocks; ++n) {
    try {
      BlockRealization r = realize_block(sc, *topo, replica, n);
      if (sc.closed_loop && queue) {
        TrafficState t = *queue;
        t.block = n;
        r.traffic = std::move(t);
      }
      const ProblemInstance inst = block_instance(sc, topo, r);
      ScheduleResult s = scheduler.step(inst);
      s.decision.block = n;
      const LatencyInputs in =
          latency_inputs(*topo, s.decision, r.traffic, sc.traffic_mode, sc.services, r.channel, sc.channel);
      BlockRecord rec_n;
      rec_n.block = n;
      rec_n.metrics = block_metrics(*topo, s.decision, in, sc.services, s.power_cap_w, s.rule);
      rec_n.metrics.block = n;
      rec_n.status = s.status;
      rec_n.flagged = s.flagged;
      rec_n.mode = s.mode;
      rec_n.pressure = s.pressure;
      if (s.flagged) ++run.flagged_blocks;
      if (s.mode == AllpMode::kLowLatency) ++run.ll_blocks;
      if (sc.closed_loop) {
        const TrafficState served =
            served_packets(*topo, s.decision, r.traffic, in.rates_bps, sc.services, sc.traffic_mode, sc.block_s);
        TrafficState next_arrivals = n + 1 < sc.blocks ? realize_block(sc, *topo, replica, n + 1).traffic
                                                       : TrafficState(topo->node_count(), sc.services.size());
        queue = advance_queues(r.traffic, served, next_arrivals);
      }
      if (rec.decisions) rec_n.decision = std::move(s.decision);
      if (rec.channels) rec_n.channel = std::move(r.channel);
      metrics.push_back(rec_n.metrics);
      run.blocks.push_back(std::move(rec_n));
    } catch (const ConfigError& e) {
      rethrow_at(e, n);
    } catch (const InfeasibleLinkError& e) {
      rethrow_at(e, n);
    } catch (const InfeasibleError& e) {
      rethrow_at(e, n);
    } catch (const std::exception& e) {
      throw std::runtime_error("block " + std::to_string(n) + ": " + e.what());
    }
  }
  run.summary = summarize(metrics);
  return run;
}

Estimate estimate(std::span<const double> samples) {
  Estimate e;
  e.samples.assign(samples.begin(), samples.end());
  if (samples.empty()) throw ConfigError("estimate needs at least one sample");
  const double n = static_cast<double>(samples.size());
  for (double x : samples) e.mean += x;
  e.mean /= n;
  if (samples.size() < 2) {
    e.ci95 = std::numeric_limits<double>::quiet_NaN();
    return e;
  }
  double ss = 0.0;
  for (double x : samples) ss += (x - e.mean) * (x - e.mean);
  const boost::math::students_t dist(n - 1.0);
  e.ci95 = boost::math::quantile(dist, 0.975) * std::sqrt(ss / (n - 1.0) / n);
  return e;
}

Estimate paired_difference(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ConfigError("paired samples differ in length");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return estimate(d);
}

SchemeSummary summarize_scheme(SchedulerKind kind, std::vector<ReplicaRun> runs, std::size_t services) {
  SchemeSummary s;
  s.kind = kind;
  std::vector<std::vector<double>> lat(services);
  std::vector<double> power;
  for (const auto& r : runs) {
    double total = 0.0;
    for (std::size_t q = 0; q < services; ++q) {
      lat[q].push_back(r.summary.mean_latency_s[q]);
      total += r.summary.mean_latency_s[q];
    }
    s.total_latency_s.push_back(total);
    power.push_back(r.summary.mean_power_w);
    s.blocks += r.summary.blocks;
    s.flagged_blocks += r.flagged_blocks;
    s.ll_blocks += r.ll_blocks;
  }
  for (const auto& v : lat) s.latency_s.push_back(estimate(v));
  s.power_w = estimate(power);
  s.runs = std::move(runs);
  return s;
}

std::vector<SchemeSummary> run_schemes(const Scenario& sc, std::span<const SchedulerKind> kinds, Execution exec,
                                       const RecordOptions& rec) {
  sc.validate();
  const std::size_t reps = sc.replicas;
  const std::size_t tasks = kinds.size() * reps;
  std::vector<ReplicaRun> runs(tasks);
  std::vector<std::exception_ptr> errors(tasks);
  const auto task = [&](std::size_t i) {
    try {
      runs[i] = run_replica(sc, kinds[i / reps], i % reps, rec);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (exec == Execution::kSerial) {
    for (std::size_t i = 0; i < tasks; ++i) task(i);
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t i = 0; i < tasks; ++i) task(i);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<SchemeSummary> out;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    std::vector<ReplicaRun> mine(std::make_move_iterator(runs.begin() + static_cast<std::ptrdiff_t>(k * reps)),
                                 std::make_move_iterator(runs.begin() + static_cast<std::ptrdiff_t>((k + 1) * reps)));
    out.push_back(summarize_scheme(kinds[k], std::move(mine), sc.services.size()));
  }
  return out;
}

std::string to_string(SweepMetric metric) { return metric == SweepMetric::kLatency ? "latency" : "power"; }

SweepMetric parse_sweep_metric(const std::string& name) {
  if (name == "latency") return SweepMetric::kLatency;
  if (name == "power") return SweepMetric::kPower;
  throw ConfigError("unknown sweep metric '" + name + "'; valid metrics: latency, power");
}

std::vector<SweepRow> hop_sweep(const Scenario& base, int h_min, int h_max, SweepMetric metric, Execution exec) {
  if (h_min < 1 || h_max < h_min) throw ConfigError("hop range must satisfy 1 <= a <= b");
  const bool power = metric == SweepMetric::kPower;
  const SchedulerKind kinds[] = {power ? SchedulerKind::kSpLp : SchedulerKind::kSpLl,
                                 power ? SchedulerKind::kMhmpLp : SchedulerKind::kMhmpLl};
  std::vector<SweepRow> rows;
  for (int h = h_min; h <= h_max; ++h) {
    Scenario sc = base;
    sc.relay_layers = h;
    sc.link_distances_m.clear();
    const auto res = run_schemes(sc, kinds, exec);
    const auto value = [&](const SchemeSummary& s) {
      return power ? s.power_w.samples : s.total_latency_s;
    };
    const auto sp = value(res[0]);
    const auto mh = value(res[1]);
    std::vector<double> savings(sp.size());
    for (std::size_t i = 0; i < sp.size(); ++i) savings[i] = 1.0 - mh[i] / sp[i];
    SweepRow row;
    row.hops = h;
    row.savings = estimate(savings);
    row.sp_value = estimate(sp).mean;
    row.mhmp_value = estimate(mh).mean;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string summary_json(const Scenario& sc, std::span<const SchemeSummary> schemes) {
  using json = nlohmann::ordered_json;
  const auto est = [](const Estimate& e, double scale) {
    json j;
    j["mean"] = e.mean * scale;
    j["ci95"] = std::isfinite(e.ci95) ? json(e.ci95 * scale) : json(nullptr);
    return j;
  };
  json j;
  j["schema_version"] = 1;
  j["scenario"] = {{"relay_layers", sc.relay_layers},
                   {"blocks", sc.blocks},
                   {"block_s", sc.block_s},
                   {"replicas", sc.replicas},
                   {"seed", sc.seed},
                   {"traffic_mode", mode_name(sc.traffic_mode)},
                   {"closed_loop", sc.closed_loop},
                   {"p_tot_w", sc.p_tot_w}};
  auto& arr = j["schemes"] = json::array();
  for (const auto& s : schemes) {
    json o;
    o["scheme"] = to_string(s.kind);
    auto& lat = o["latency_ms"] = json::array();
    for (std::size_t q = 0; q < s.latency_s.size(); ++q) {
      json l = est(s.latency_s[q], 1e3);
      l["service"] = sc.services[q].id;
      lat.push_back(std::move(l));
    }
    o["power_mw"] = est(s.power_w, 1e3);
    o["blocks"] = s.blocks;
    o["flagged_blocks"] = s.flagged_blocks;
    if (s.kind == SchedulerKind::kAllp) o["ll_blocks"] = s.ll_blocks;
    arr.push_back(std::move(o));
  }
  return j.dump(2) + "\n";
}

std::string metrics_csv(std::span<const SchemeSummary> schemes) {
  std::ostringstream os;
  std::size_t paths = 0;
  for (const auto& s : schemes)
    if (!s.runs.empty() && !s.runs.front().blocks.empty()) paths = s.runs.front().blocks.front().metrics.paths;
  os << "scheme,replica,block,service,worst_latency_s,total_power_w,status,flagged,allp_mode";
  for (std::size_t b = 0; b < paths; ++b) os << ",u_path" << b << "_s";
  os << '\n';
  for (const auto& s : schemes)
    for (const auto& r : s.runs)
      for (const auto& blk : r.blocks)
        for (std::size_t q = 0; q < blk.metrics.services; ++q) {
          os << to_string(s.kind) << ',' << r.replica << ',' << blk.block << ',' << q + 1 << ','
             << num(blk.metrics.worst_latency_s[q]) << ',' << num(blk.metrics.total_power_w) << ','
             << to_string(blk.status) << ',' << (blk.flagged ? 1 : 0) << ','
             << (blk.mode ? to_string(*blk.mode) : "");
          for (std::size_t b = 0; b < blk.metrics.paths; ++b) os << ',' << num(blk.metrics.u(q, b));
          os << '\n';
        }
  return os.str();
}

std::string cdf_csv(std::span<const SchemeSummary> schemes, std::size_t points) {
  double upper = 0.0;
  for (const auto& s : schemes)
    for (const auto& r : s.runs)
      for (const auto& series : r.summary.latency_series_s)
        for (double x : series) upper = std::max(upper, x);
  const auto grid = linear_grid(upper, points);
  std::ostringstream os;
  os << "scheme,service,latency_s,cdf\n";
  for (const auto& s : schemes) {
    const std::size_t nq = s.latency_s.size();
    for (std::size_t q = 0; q < nq; ++q) {
      std::vector<double> pooled;
      for (const auto& r : s.runs)
        pooled.insert(pooled.end(), r.summary.latency_series_s[q].begin(), r.summary.latency_series_s[q].end());
      const auto cdf = empirical_cdf(pooled, grid);
      for (std::size_t i = 0; i < grid.size(); ++i)
        os << to_string(s.kind) << ',' << q + 1 << ',' << num(grid[i]) << ',' << num(cdf[i]) << '\n';
    }
  }
  return os.str();
}

std::string sweep_csv(SweepMetric metric, std::span<const SweepRow> rows) {
  std::ostringstream os;
  const std::string unit = metric == SweepMetric::kLatency ? "latency_s" : "power_w";
  os << "hops,metric,savings_ratio,savings_ci95,mhmp_" << unit << ",sp_" << unit << '\n';
  for (const auto& r : rows)
    os << r.hops << ',' << to_string(metric) << ',' << num(r.savings.mean) << ',' << num(r.savings.ci95) << ','
       << num(r.mhmp_value) << ',' << num(r.sp_value) << '\n';
  return os.str();
}

std::string trajectories_csv(const Topology& topo, std::span<const SchemeSummary> schemes) {
  std::ostringstream os;
  std::size_t nq = 0;
  for (const auto& s : schemes) nq = std::max(nq, s.latency_s.size());
  os << "scheme,block,layer,tx,rx,power_w";
  for (std::size_t q = 0; q < nq; ++q) os << ",alpha_service" << q + 1;
  os << '\n';
  for (const auto& s : schemes) {
    if (s.runs.empty()) continue;
    for (const auto& blk : s.runs.front().blocks) {
      if (!blk.decision) continue;
      for (std::size_t e = 0; e < topo.link_count(); ++e) {
        const LinkId& l = topo.link(e);
        os << to_string(s.kind) << ',' << blk.block << ',' << l.layer << ',' << l.tx << ',' << l.rx << ','
           << num(blk.decision->power_w[e]);
        for (std::size_t q = 0; q < blk.decision->services; ++q) os << ',' << num(blk.decision->a(e, q));
        os << '\n';
      }
    }
  }
  return os.str();
}

std::string channel_csv(const ReplicaRun& run) {
  std::ostringstream os;
  os << "block,layer,tx,rx,loss_db\n";
  for (const auto& blk : run.blocks) {
    if (!blk.channel) continue;
    for (const auto& l : blk.channel->links)
      os << blk.block << ',' << l.link.layer << ',' << l.link.tx << ',' << l.link.rx << ',' << num(l.loss_db) << '\n';
  }
  return os.str();
}

}  // namespace mhmp
