#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "mhmp/topology.hpp"

namespace mhmp {

enum class BandwidthPolicy {
  kPerRelayEqualSplit,  ///< each transmitter gets total / relays_per_layer
  kFullReuse,           ///< each transmitter gets the total bandwidth
};

/// Large-scale channel parameters.
///
/// Pathloss is the 3GPP TR 38.901 UMa NLOS closed form
///
///   PL = 13.54 + 39.08 log10(d3D) + 20 log10(fc / 1 GHz) - 0.6 (h_rx - 1.5)
///
/// with d3D = sqrt(d^2 + (h_tx - h_rx)^2). Both vehicle antennas default to
/// 1.5 m, which cancels the height term and makes d3D = d.
struct ChannelParams {
  double carrier_ghz = 5.9;
  double noise_psd_dbm_hz = -174.0;
  double total_bandwidth_hz = 100e6;
  BandwidthPolicy bandwidth_policy = BandwidthPolicy::kPerRelayEqualSplit;
  double shadowing_sigma_db = 7.82;
  double tx_height_m = 1.5;
  double rx_height_m = 1.5;
  /// Added to every link distance once per block (mobility), default static.
  double displacement_per_block_m = 0.0;

  void validate() const;
};

/// Per-block large-scale state of one link.
struct LinkState {
  LinkId link;
  std::size_t block = 0;
  double loss_db = 0.0;
  double bandwidth_hz = 0.0;
};

/// Realized channel of one block: one LinkState per topology link.
struct ChannelBlock {
  std::size_t block = 0;
  std::vector<LinkState> links;
};

/// Achievable rate D(P) = B log2(1 + gain * P) with P in watts and
/// gain = 10^(-loss/10) / (B N0) in 1/W.
struct RateCurve {
  double bandwidth_hz = 0.0;
  double gain_per_watt = 0.0;

  double rate(double power_w) const;
  /// dD/dP in bits/s per watt.
  double slope(double power_w) const;
  /// d2D/dP2, always <= 0.
  double curvature(double power_w) const;
  /// Power needed to reach `rate_bps`; +inf when gain is zero.
  double power_for_rate(double rate_bps) const;
};

double dbm_to_watts(double dbm);
/// Returns -infinity for 0 W; throws ConfigError for negative power.
double watts_to_dbm(double watts);

/// Throws ConfigError when distance <= 0.
double pathloss_db(double distance_m, const ChannelParams& params);

/// Zero-mean Gaussian deviate in dB; sigma == 0 returns exactly 0.
double draw_shadowing(std::mt19937_64& rng, double sigma_db);

double link_bandwidth_hz(const Topology& topo, const ChannelParams& params);

RateCurve rate_curve(const LinkState& link, const ChannelParams& params);

/// Rate in bits/s for a transmit power in dBm. Throws ConfigError on
/// nonpositive bandwidth.
double link_rate(double p_tx_dbm, const LinkState& link, const ChannelParams& params);

/// Draws one block: deterministic pathloss at the block's distances plus
/// i.i.d. shadowing per link. Shadowing is clamped so loss stays >= 0 dB.
ChannelBlock draw_channel_block(const Topology& topo, const ChannelParams& params, std::size_t block,
                                std::mt19937_64& rng);

}  // namespace mhmp
