#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mhmp/channel.hpp"
#include "mhmp/perf.hpp"
#include "mhmp/problem.hpp"
#include "mhmp/schedulers.hpp"
#include "mhmp/solver.hpp"
#include "mhmp/topology.hpp"
#include "mhmp/traffic.hpp"

namespace mhmp {

/// Everything a run needs besides the scheme list.
struct Scenario {
  int relay_layers = 2;
  double link_spacing_m = Topology::kDefaultDistanceM;
  /// Per-link distances in link-index order; empty means uniform spacing.
  std::vector<double> link_distances_m;
  ChannelParams channel;
  std::vector<ServiceSpec> services;
  TrafficMode traffic_mode = TrafficMode::kFlowPropagated;
  double p_tot_w = 0.0;
  double block_s = 0.5;
  std::size_t blocks = 600;
  std::size_t replicas = 20;
  std::uint64_t seed = 1;
  /// Carry queue backlog between blocks instead of drawing it.
  bool closed_loop = false;
  std::size_t sp_warmup_blocks = 1;
  std::size_t cdf_points = 101;
  AllpConfig allp;
  SolverOptions solver;

  void validate() const;
  Topology topology() const;
};

/// 3-hop network (two relay layers), 50 m spacing, 5.9 GHz, 100 MHz,
/// -174 dBm/Hz, 23 dBm, 250 B / 100 B services with a 30 ms budget, 0.5 s
/// blocks over 300 s, 20 replicas. Mean backlogs of 565 and 215 packets put
/// the fixed single path at about 11.1 ms and 3.1 ms.
Scenario default_scenario();

/// Named random substreams derived from the scenario seed.
enum class Stream : std::uint32_t { kChannel = 1, kTraffic = 2 };

std::mt19937_64 substream(std::uint64_t seed, Stream stream, std::size_t replica, std::size_t block);

/// Channel and traffic draws of one block. Identical for every scheme.
struct BlockRealization {
  ChannelBlock channel;
  TrafficState traffic;
};

BlockRealization realize_block(const Scenario& sc, const Topology& topo, std::size_t replica, std::size_t block);

ProblemInstance block_instance(const Scenario& sc, const std::shared_ptr<const Topology>& topo,
                               const BlockRealization& r, Objective objective = Objective::kMinLatency);

/// Packets each node moves in a block: floor(alpha D T_c / M) per out-link
/// and service, capped by what the node holds.
TrafficState served_packets(const Topology& topo, const Decision& decision, const TrafficState& traffic,
                            const std::vector<double>& rates_bps, std::span<const ServiceSpec> services,
                            TrafficMode mode, double block_s);

struct BlockRecord {
  std::size_t block = 0;
  BlockMetrics metrics;
  SolverStatus status = SolverStatus::kOptimal;
  bool flagged = false;
  std::optional<AllpMode> mode;
  double pressure = 0.0;
  std::optional<Decision> decision;
  std::optional<ChannelBlock> channel;
};

struct ReplicaRun {
  std::size_t replica = 0;
  std::vector<BlockRecord> blocks;
  RunSummary summary;
  std::optional<std::size_t> fixed_path;
  std::size_t flagged_blocks = 0;
  std::size_t ll_blocks = 0;
};

struct RecordOptions {
  bool decisions = false;
  bool channels = false;
};

/// One replica of one scheme over the scenario's blocks. Errors are
/// rethrown with the block index in the message.
ReplicaRun run_replica(const Scenario& sc, SchedulerKind kind, std::size_t replica, const RecordOptions& rec = {});

/// Mean over replicas with a two-sided 95% Student-t half-width.
struct Estimate {
  double mean = 0.0;
  double ci95 = 0.0;
  std::vector<double> samples;

  double lower() const { return mean - ci95; }
  double upper() const { return mean + ci95; }
};

Estimate estimate(std::span<const double> samples);
/// Estimate of a - b paired by replica.
Estimate paired_difference(std::span<const double> a, std::span<const double> b);

struct SchemeSummary {
  SchedulerKind kind = SchedulerKind::kMhmpLl;
  std::vector<Estimate> latency_s;  ///< per service, over replica means
  Estimate power_w;
  /// Per-replica sum over services of the mean worst latency.
  std::vector<double> total_latency_s;
  std::size_t blocks = 0;
  std::size_t flagged_blocks = 0;
  std::size_t ll_blocks = 0;
  std::vector<ReplicaRun> runs;
};

enum class Execution { kParallel, kSerial };

/// Runs every scheme on the same realizations. Replicas are spread over an
/// OpenMP pool in parallel mode; results are ordered by replica either way.
std::vector<SchemeSummary> run_schemes(const Scenario& sc, std::span<const SchedulerKind> kinds,
                                       Execution exec = Execution::kParallel, const RecordOptions& rec = {});

SchemeSummary summarize_scheme(SchedulerKind kind, std::vector<ReplicaRun> runs, std::size_t services);

enum class SweepMetric { kLatency, kPower };

std::string to_string(SweepMetric metric);
SweepMetric parse_sweep_metric(const std::string& name);

struct SweepRow {
  int hops = 0;
  Estimate savings;  ///< 1 - MHMP / SP per replica
  double mhmp_value = 0.0;
  double sp_value = 0.0;
};

/// Savings of MHMP over SP for each H in [h_min, h_max]: min-latency
/// schemes compare the summed mean latency, min-power schemes the mean
/// power under the budgets.
std::vector<SweepRow> hop_sweep(const Scenario& base, int h_min, int h_max, SweepMetric metric,
                                Execution exec = Execution::kParallel);

/// Output writers. Units are carried in the column and key names.
std::string summary_json(const Scenario& sc, std::span<const SchemeSummary> schemes);
std::string metrics_csv(std::span<const SchemeSummary> schemes);
/// Pooled per-block worst latencies of every scheme on one shared grid.
std::string cdf_csv(std::span<const SchemeSummary> schemes, std::size_t points);
std::string sweep_csv(SweepMetric metric, std::span<const SweepRow> rows);
/// Per-block powers and split ratios of the first replica.
std::string trajectories_csv(const Topology& topo, std::span<const SchemeSummary> schemes);
/// Realized losses of the first replica.
std::string channel_csv(const ReplicaRun& run);

}  // namespace mhmp
