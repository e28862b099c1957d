#include "mhmp/channel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "mhmp/errors.hpp"

namespace mhmp {

void ChannelParams::validate() const {
  if (!(carrier_ghz > 0.0)) throw ConfigError("carrier frequency must be > 0");
  if (!(total_bandwidth_hz > 0.0)) throw ConfigError("bandwidth must be > 0");
  if (!(shadowing_sigma_db >= 0.0)) throw ConfigError("shadowing sigma must be >= 0");
  if (!std::isfinite(noise_psd_dbm_hz)) throw ConfigError("noise PSD must be finite");
  if (!(tx_height_m > 0.0) || !(rx_height_m > 0.0)) throw ConfigError("antenna heights must be > 0");
  if (!std::isfinite(displacement_per_block_m)) throw ConfigError("displacement must be finite");
}

double RateCurve::rate(double power_w) const {
  if (power_w <= 0.0) return 0.0;
  return bandwidth_hz * std::log2(1.0 + gain_per_watt * power_w);
}

double RateCurve::slope(double power_w) const {
  const double x = std::max(power_w, 0.0);
  return bandwidth_hz * gain_per_watt / ((1.0 + gain_per_watt * x) * std::numbers::ln2);
}

double RateCurve::curvature(double power_w) const {
  const double x = std::max(power_w, 0.0);
  const double d = 1.0 + gain_per_watt * x;
  return -bandwidth_hz * gain_per_watt * gain_per_watt / (d * d * std::numbers::ln2);
}

double RateCurve::power_for_rate(double rate_bps) const {
  if (rate_bps <= 0.0) return 0.0;
  if (gain_per_watt <= 0.0 || bandwidth_hz <= 0.0) return std::numeric_limits<double>::infinity();
  return std::expm1(rate_bps / bandwidth_hz * std::numbers::ln2) / gain_per_watt;
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double watts) {
  if (watts < 0.0 || std::isnan(watts)) throw ConfigError("power must be >= 0 W");
  if (watts == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(watts) + 30.0;
}

double pathloss_db(double distance_m, const ChannelParams& params) {
  if (!(distance_m > 0.0)) throw ConfigError("distance must be > 0");
  const double dh = params.tx_height_m - params.rx_height_m;
  const double d3d = std::sqrt(distance_m * distance_m + dh * dh);
  return 13.54 + 39.08 * std::log10(d3d) + 20.0 * std::log10(params.carrier_ghz) -
         0.6 * (params.rx_height_m - 1.5);
}

double draw_shadowing(std::mt19937_64& rng, double sigma_db) {
  if (sigma_db < 0.0) throw ConfigError("shadowing sigma must be >= 0");
  if (sigma_db == 0.0) return 0.0;
  std::normal_distribution<double> dist(0.0, sigma_db);
  return dist(rng);
}

double link_bandwidth_hz(const Topology& topo, const ChannelParams& params) {
  if (params.bandwidth_policy == BandwidthPolicy::kFullReuse) return params.total_bandwidth_hz;
  return params.total_bandwidth_hz / topo.relays_per_layer();
}

RateCurve rate_curve(const LinkState& link, const ChannelParams& params) {
  if (!(link.bandwidth_hz > 0.0)) throw ConfigError("link bandwidth must be > 0");
  const double n0_w_per_hz = dbm_to_watts(params.noise_psd_dbm_hz);
  const double gain = std::pow(10.0, -link.loss_db / 10.0);
  return {link.bandwidth_hz, gain / (link.bandwidth_hz * n0_w_per_hz)};
}

double link_rate(double p_tx_dbm, const LinkState& link, const ChannelParams& params) {
  const RateCurve curve = rate_curve(link, params);
  // Received power is P_tx(dBm) - loss(dB); the curve's gain carries the loss.
  return curve.rate(dbm_to_watts(p_tx_dbm));
}

ChannelBlock draw_channel_block(const Topology& topo, const ChannelParams& params, std::size_t block,
                                std::mt19937_64& rng) {
  ChannelBlock out;
  out.block = block;
  out.links.reserve(topo.link_count());
  const double bw = link_bandwidth_hz(topo, params);
  const double shift = params.displacement_per_block_m * static_cast<double>(block);
  for (std::size_t e = 0; e < topo.link_count(); ++e) {
    const double d = std::max(topo.distance_m(e) + shift, 1.0);
    const double loss = pathloss_db(d, params) + draw_shadowing(rng, params.shadowing_sigma_db);
    out.links.push_back({topo.link(e), block, std::max(loss, 0.0), bw});
  }
  return out;
}

}  // namespace mhmp
