#include <algorithm>
#include <cmath>

#include "mhmp/errors.hpp"
#include "mhmp/solver.hpp"

namespace mhmp {

namespace {

// Shares are link flow fractions in flow mode and split ratios otherwise.
struct Point {
  std::vector<double> share;  ///< q * links + e
  std::vector<double> power_w;
};

std::vector<double> dirichlet(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> exp1(1.0);
  std::vector<double> w(n);
  double sum = 0.0;
  for (double& x : w) sum += (x = exp1(rng));
  for (double& x : w) x /= sum;
  return w;
}

class Sampler {
 public:
  explicit Sampler(const ProblemInstance& inst) : inst_(inst), topo_(*inst.topo) {
    allowed_ = inst.allowed_links();
    flow_ = inst.traffic_mode == TrafficMode::kFlowPropagated;
  }

  Point shares_and_powers(std::mt19937_64& rng) const {
    Point p;
    p.share.assign(inst_.services() * topo_.link_count(), 0.0);
    p.power_w.assign(topo_.link_count(), 0.0);
    for (std::size_t q = 0; q < inst_.services(); ++q) {
      std::vector<double> inflow(topo_.node_count(), 0.0);
      inflow[0] = 1.0;
      for (std::size_t v = 0; v < topo_.node_count(); ++v) {
        const auto outs = allowed_out(v);
        if (outs.empty()) continue;
        const auto a = dirichlet(outs.size(), rng);
        for (std::size_t k = 0; k < outs.size(); ++k) {
          const double f = inflow[v] * a[k];
          p.share[q * topo_.link_count() + outs[k]] = flow_ ? f : a[k];
          if (auto rx = topo_.link_rx_node(outs[k])) inflow[*rx] += f;
        }
      }
    }
    const bool at_most = inst_.objective == Objective::kMinPower;
    for (std::size_t v = 0; v < topo_.node_count(); ++v) {
      const auto outs = allowed_out(v);
      if (outs.empty()) continue;
      const auto w = dirichlet(outs.size() + (at_most ? 1 : 0), rng);
      for (std::size_t k = 0; k < outs.size(); ++k) p.power_w[outs[k]] = w[k] * inst_.p_tot_w;
    }
    return p;
  }

  Decision decision(const Point& p) const {
    Decision d(topo_, inst_.services());
    d.power_w = p.power_w;
    const std::size_t nl = topo_.link_count();
    for (std::size_t q = 0; q < inst_.services(); ++q) {
      std::vector<double> inflow(topo_.node_count(), 0.0);
      inflow[0] = 1.0;
      for (std::size_t v = 0; v < topo_.node_count(); ++v) {
        const auto& outs = topo_.out_links(v);
        const auto allowed = allowed_out(v);
        double sum = 0.0;
        for (std::size_t e : allowed) sum += p.share[q * nl + e];
        for (std::size_t e : outs) {
          double a = 0.0;
          if (allowed.empty())
            a = 1.0 / static_cast<double>(outs.size());
          else if (allowed_[e])
            a = sum > 0.0 ? p.share[q * nl + e] / sum : 1.0 / static_cast<double>(allowed.size());
          d.a(e, q) = a;
          if (flow_)
            if (auto rx = topo_.link_rx_node(e)) inflow[*rx] += p.share[q * nl + e];
        }
      }
    }
    return d;
  }

 private:
  std::vector<std::size_t> allowed_out(std::size_t v) const {
    std::vector<std::size_t> out;
    for (std::size_t e : topo_.out_links(v))
      if (allowed_[e]) out.push_back(e);
    return out;
  }

  const ProblemInstance& inst_;
  const Topology& topo_;
  std::vector<bool> allowed_;
  bool flow_ = true;
};

Point mix(const Point& x, const Point& y, double theta) {
  Point m = x;
  for (std::size_t i = 0; i < m.share.size(); ++i) m.share[i] = theta * x.share[i] + (1.0 - theta) * y.share[i];
  for (std::size_t i = 0; i < m.power_w.size(); ++i)
    m.power_w[i] = theta * x.power_w[i] + (1.0 - theta) * y.power_w[i];
  return m;
}

double relative_excess(double value, double chord) {
  if (value <= chord) return 0.0;
  return (value - chord) / std::max(std::abs(chord), 1e-300);
}

struct Excess {
  double paths = 0.0;
  double objective = 0.0;
};

Excess check(const ProblemInstance& inst, const Sampler& s, const Point& x, const Point& y, double theta) {
  const auto ux = evaluate_latency(inst, s.decision(x));
  const auto uy = evaluate_latency(inst, s.decision(y));
  const auto um = evaluate_latency(inst, s.decision(mix(x, y, theta)));
  Excess ex;
  for (std::size_t i = 0; i < um.path_latency_s.size(); ++i)
    ex.paths = std::max(ex.paths, relative_excess(um.path_latency_s[i], theta * ux.path_latency_s[i] +
                                                                         (1.0 - theta) * uy.path_latency_s[i]));
  double fx = 0.0, fy = 0.0, fm = 0.0;
  for (std::size_t q = 0; q < um.worst_latency_s.size(); ++q) {
    fx += ux.worst_latency_s[q];
    fy += uy.worst_latency_s[q];
    fm += um.worst_latency_s[q];
  }
  ex.objective = relative_excess(fm, theta * fx + (1.0 - theta) * fy);
  return ex;
}

}  // namespace

ConvexityReport convexity_probe(const ProblemInstance& inst, const ConvexityProbeOptions& opts,
                                std::mt19937_64& rng) {
  if (opts.samples < 1) throw ConfigError("convexity probe needs at least one sample");
  if (opts.theta && (*opts.theta < 0.0 || *opts.theta > 1.0)) throw ConfigError("theta must lie in [0, 1]");
  inst.validate();
  const Sampler sampler(inst);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ConvexityReport rep;
  rep.samples = opts.samples;
  for (std::size_t i = 0; i < opts.samples; ++i) {
    const Point x = sampler.shares_and_powers(rng);
    const Point y = sampler.shares_and_powers(rng);
    const double theta = opts.theta ? *opts.theta : unit(rng);
    const Excess joint = check(inst, sampler, x, y, theta);
    rep.max_path_violation = std::max(rep.max_path_violation, joint.paths);
    rep.max_objective_violation = std::max(rep.max_objective_violation, joint.objective);

    Point y_power = y;
    y_power.share = x.share;
    rep.max_power_only_violation =
        std::max(rep.max_power_only_violation, check(inst, sampler, x, y_power, theta).paths);
    Point y_share = y;
    y_share.power_w = x.power_w;
    rep.max_share_only_violation =
        std::max(rep.max_share_only_violation, check(inst, sampler, x, y_share, theta).paths);
  }
  return rep;
}

}  // namespace mhmp
