#include "program.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mhmp/errors.hpp"

namespace mhmp::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::size_t> allowed_out(const Topology& topo, const std::vector<bool>& allowed, std::size_t v) {
  std::vector<std::size_t> out;
  for (std::size_t e : topo.out_links(v))
    if (allowed[e]) out.push_back(e);
  return out;
}

}  // namespace

double share_load(const ProblemInstance& inst, std::size_t q, std::size_t link) {
  const std::size_t nq = inst.services();
  if (inst.traffic_mode == TrafficMode::kFlowPropagated) return inst.load_pkts[q];
  return inst.load_pkts[inst.topo->link_tx_node(link) * nq + q];
}

Program::Program(const ProblemInstance& inst, Goal goal, PowerRegime regime, bool budget_rows)
    : inst_(&inst), goal_(goal), regime_(regime) {
  inst.validate();
  services_ = inst.services();
  links_ = inst.topo->link_count();
  allowed_ = inst.allowed_links();
  for (std::size_t q = 0; q < services_; ++q)
    if (inst.service_active(q)) active_.push_back(q);
  if (goal == Goal::kSumMaxLatency) epi_count_ = active_.size();
  if (goal == Goal::kMaxBudgetRatio) epi_count_ = active_.empty() ? 0 : 1;

  const std::size_t n = services_ * links_ + links_ + epi_count_;
  fixed_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  cost_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  is_free_.assign(n, false);
  for (std::size_t k = 0; k < epi_count_; ++k) {
    is_free_[static_cast<std::size_t>(epi_var(k))] = true;
    cost_[epi_var(k)] = 1.0;
  }
  build_shares();
  build_powers();
  free_pos_.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i)
    if (is_free_[i]) {
      free_pos_[i] = static_cast<int>(free_.size());
      free_.push_back(static_cast<int>(i));
    }
  build_rows(budget_rows);
  build_null_space();
}

int Program::share_var(std::size_t q, std::size_t e) const { return static_cast<int>(q * links_ + e); }
int Program::power_var(std::size_t e) const { return static_cast<int>(services_ * links_ + e); }
int Program::epi_var(std::size_t k) const { return static_cast<int>(services_ * links_ + links_ + k); }

void Program::build_shares() {
  const Topology& topo = *inst_->topo;
  const bool flow = inst_->traffic_mode == TrafficMode::kFlowPropagated;
  for (std::size_t q : active_) {
    for (std::size_t v = 0; v < topo.node_count(); ++v) {
      const auto outs = allowed_out(topo, allowed_, v);
      if (outs.empty()) continue;
      if (flow) {
        std::vector<std::pair<int, double>> row;
        for (std::size_t e : outs) {
          is_free_[static_cast<std::size_t>(share_var(q, e))] = true;
          row.emplace_back(share_var(q, e), 1.0);
        }
        for (std::size_t e : topo.in_links(v))
          if (allowed_[e]) row.emplace_back(share_var(q, e), -1.0);
        equalities_.push_back(std::move(row));
        equality_rhs_.push_back(v == 0 ? 1.0 : 0.0);
        continue;
      }
      const double load = inst_->load_pkts[v * services_ + q];
      if (load <= 0.0 || outs.size() == 1) {
        for (std::size_t e : outs) fixed_[share_var(q, e)] = 1.0 / static_cast<double>(outs.size());
        continue;
      }
      std::vector<std::pair<int, double>> row;
      for (std::size_t e : outs) {
        is_free_[static_cast<std::size_t>(share_var(q, e))] = true;
        row.emplace_back(share_var(q, e), 1.0);
      }
      equalities_.push_back(std::move(row));
      equality_rhs_.push_back(1.0);
    }
  }
}

void Program::build_powers() {
  const Topology& topo = *inst_->topo;
  for (std::size_t v = 0; v < topo.node_count(); ++v) {
    const auto outs = allowed_out(topo, allowed_, v);
    if (outs.empty()) continue;
    const double even = 1.0 / static_cast<double>(outs.size());
    if (regime_ == PowerRegime::kFixedSplit || (regime_ == PowerRegime::kEqual && outs.size() == 1)) {
      for (std::size_t e : outs) fixed_[power_var(e)] = even;
      continue;
    }
    for (std::size_t e : outs) is_free_[static_cast<std::size_t>(power_var(e))] = true;
    if (regime_ == PowerRegime::kEqual) {
      std::vector<std::pair<int, double>> row;
      for (std::size_t e : outs) row.emplace_back(power_var(e), 1.0);
      equalities_.push_back(std::move(row));
      equality_rhs_.push_back(1.0);
    }
  }
  if (goal_ == Goal::kTotalPower)
    for (std::size_t e = 0; e < links_; ++e) cost_[power_var(e)] = 1.0;
}

void Program::build_rows(bool budget_rows) {
  const Topology& topo = *inst_->topo;
  const std::size_t n = var_count();
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_free_[i] || static_cast<int>(i) >= epi_var(0)) continue;
    linear_.push_back(LinearRow{{{static_cast<int>(i), -1.0}}, 0.0});
  }
  if (regime_ == PowerRegime::kAtMost) {
    for (std::size_t v = 0; v < topo.node_count(); ++v) {
      const auto outs = allowed_out(topo, allowed_, v);
      if (outs.empty()) continue;
      LinearRow row;
      for (std::size_t e : outs) row.terms.emplace_back(power_var(e), 1.0);
      row.rhs = 1.0;
      linear_.push_back(std::move(row));
    }
  }

  // Latency unit for the min-latency rows: worst path of the even start.
  if (goal_ == Goal::kSumMaxLatency) {
    const Eigen::VectorXd z0 = start_point();
    double worst = 0.0;
    for (std::size_t q : active_) {
      for (std::size_t b = 0; b < topo.path_count(); ++b) {
        double u = 0.0;
        for (std::size_t e : topo.path_link_indices(b)) {
          const double x = z0[share_var(q, e)];
          if (x <= 0.0) continue;
          const double d = inst_->curves[e].rate(z0[power_var(e)] * inst_->p_tot_w);
          u += d > 0.0 ? x * share_load(*inst_, q, e) * inst_->packet_bits[q] / d : kInf;
        }
        worst = std::max(worst, u);
      }
    }
    latency_unit_s_ = worst > 0.0 && std::isfinite(worst) ? worst : 1.0;
  }

  auto make_row = [&](std::size_t q, std::size_t b, double unit, int epi, double constant) {
    PathRow row;
    row.service = q;
    row.path = b;
    row.epi_var = epi;
    row.constant = constant;
    for (std::size_t e : topo.path_link_indices(b)) {
      const int sv = share_var(q, e);
      if (!is_free_[static_cast<std::size_t>(sv)] && fixed_[sv] == 0.0) continue;
      const double coef = share_load(*inst_, q, e) * inst_->packet_bits[q] / unit;
      if (coef == 0.0) continue;
      row.hops.push_back(Hop{sv, power_var(e), e, coef});
    }
    if (!row.hops.empty()) paths_.push_back(std::move(row));
  };

  for (std::size_t k = 0; k < active_.size(); ++k) {
    const std::size_t q = active_[k];
    for (std::size_t b = 0; b < topo.path_count(); ++b) {
      if (goal_ == Goal::kSumMaxLatency) make_row(q, b, latency_unit_s_, epi_var(k), 0.0);
      if (goal_ == Goal::kMaxBudgetRatio) make_row(q, b, inst_->budgets_s[q], epi_var(0), 0.0);
    }
  }
  if (goal_ == Goal::kTotalPower || budget_rows) {
    for (std::size_t q : active_)
      for (std::size_t b = 0; b < topo.path_count(); ++b) make_row(q, b, inst_->budgets_s[q], -1, 1.0);
  }
}

void Program::build_null_space() {
  const auto nf = static_cast<Eigen::Index>(free_.size());
  const auto m = static_cast<Eigen::Index>(equalities_.size());
  if (m == 0) {
    null_basis_ = Eigen::MatrixXd::Identity(nf, nf);
    return;
  }
  Eigen::MatrixXd at = Eigen::MatrixXd::Zero(nf, m);
  for (Eigen::Index r = 0; r < m; ++r)
    for (const auto& [var, coef] : equalities_[static_cast<std::size_t>(r)]) {
      const int pos = free_pos_[static_cast<std::size_t>(var)];
      if (pos >= 0) at(pos, r) += coef;
    }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(at);
  qr.setThreshold(1e-12);
  const Eigen::Index rank = qr.rank();
  const Eigen::MatrixXd q = qr.householderQ();
  null_basis_ = q.rightCols(nf - rank);
}

double Program::objective(const Eigen::VectorXd& z) const { return cost_.dot(z); }

double Program::hop_value(const Hop& h, const Eigen::VectorXd& z) const {
  const double x = z[h.share];
  if (x == 0.0) return 0.0;
  const double d = inst_->curves[h.link].rate(std::max(z[h.power], 0.0) * inst_->p_tot_w);
  return d > 0.0 ? h.coef * x / d : kInf;
}

double Program::row_value(const PathRow& r, const Eigen::VectorXd& z) const {
  double v = -r.constant;
  if (r.epi_var >= 0) v -= z[r.epi_var];
  for (const Hop& h : r.hops) v += hop_value(h, z);
  return v;
}

double Program::row_value(const LinearRow& r, const Eigen::VectorXd& z) const {
  double v = -r.rhs;
  for (const auto& [var, coef] : r.terms) v += coef * z[var];
  return v;
}

Eigen::VectorXd Program::constraints(const Eigen::VectorXd& z) const {
  Eigen::VectorXd g(static_cast<Eigen::Index>(constraint_count()));
  Eigen::Index i = 0;
  for (const auto& r : paths_) g[i++] = row_value(r, z);
  for (const auto& r : linear_) g[i++] = row_value(r, z);
  return g;
}

void Program::row_gradient(const PathRow& r, const Eigen::VectorXd& z,
                           std::vector<std::pair<int, double>>& out) const {
  out.clear();
  const double ptot = inst_->p_tot_w;
  for (const Hop& h : r.hops) {
    const double x = z[h.share];
    const RateCurve& c = inst_->curves[h.link];
    const double pw = z[h.power] * ptot;
    const double d = c.rate(pw);
    if (is_free_[static_cast<std::size_t>(h.share)]) out.emplace_back(h.share, h.coef / d);
    if (is_free_[static_cast<std::size_t>(h.power)])
      out.emplace_back(h.power, -h.coef * x * c.slope(pw) * ptot / (d * d));
  }
  if (r.epi_var >= 0) out.emplace_back(r.epi_var, -1.0);
}

Eigen::VectorXd Program::constraint_gradient(std::size_t i, const Eigen::VectorXd& z) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(z.size());
  if (i < paths_.size()) {
    std::vector<std::pair<int, double>> sparse;
    row_gradient(paths_[i], z, sparse);
    for (const auto& [var, val] : sparse) g[var] += val;
  } else {
    for (const auto& [var, coef] : linear_[i - paths_.size()].terms)
      if (is_free_[static_cast<std::size_t>(var)]) g[var] += coef;
  }
  return g;
}

double Program::barrier(const Eigen::VectorXd& z, double t) const {
  double phi = t * objective(z);
  for (const auto& r : paths_) {
    const double g = row_value(r, z);
    if (!(g < 0.0)) return kInf;
    phi -= std::log(-g);
  }
  for (const auto& r : linear_) {
    const double g = row_value(r, z);
    if (!(g < 0.0)) return kInf;
    phi -= std::log(-g);
  }
  return phi;
}

void Program::barrier_derivatives(const Eigen::VectorXd& z, double t, Eigen::VectorXd& grad,
                                  Eigen::MatrixXd& hess) const {
  const auto nf = static_cast<Eigen::Index>(free_.size());
  grad = Eigen::VectorXd::Zero(nf);
  hess = Eigen::MatrixXd::Zero(nf, nf);
  for (Eigen::Index i = 0; i < nf; ++i) grad[i] = t * cost_[free_[static_cast<std::size_t>(i)]];

  for (const auto& r : linear_) {
    const double w = -1.0 / row_value(r, z);
    for (const auto& [vi, ci] : r.terms) {
      const int pi = free_pos_[static_cast<std::size_t>(vi)];
      if (pi < 0) continue;
      grad[pi] += w * ci;
      for (const auto& [vj, cj] : r.terms) {
        const int pj = free_pos_[static_cast<std::size_t>(vj)];
        if (pj >= 0) hess(pi, pj) += w * w * ci * cj;
      }
    }
  }

  const double ptot = inst_->p_tot_w;
  std::vector<std::pair<int, double>> sparse;
  for (const auto& r : paths_) {
    const double w = -1.0 / row_value(r, z);
    row_gradient(r, z, sparse);
    for (const auto& [vi, gi] : sparse) {
      const int pi = free_pos_[static_cast<std::size_t>(vi)];
      grad[pi] += w * gi;
      for (const auto& [vj, gj] : sparse) hess(pi, free_pos_[static_cast<std::size_t>(vj)]) += w * w * gi * gj;
    }
    for (const Hop& h : r.hops) {
      const int ps = free_pos_[static_cast<std::size_t>(h.share)];
      const int pp = free_pos_[static_cast<std::size_t>(h.power)];
      if (pp < 0) continue;
      const RateCurve& c = inst_->curves[h.link];
      const double pw = z[h.power] * ptot;
      const double d = c.rate(pw);
      const double d1 = c.slope(pw) * ptot;
      const double d2 = c.curvature(pw) * ptot * ptot;
      const double x = z[h.share];
      hess(pp, pp) += w * h.coef * x * (2.0 * d1 * d1 - d * d2) / (d * d * d);
      if (ps >= 0) {
        const double cross = -w * h.coef * d1 / (d * d);
        hess(ps, pp) += cross;
        hess(pp, ps) += cross;
      }
    }
  }
}

Eigen::VectorXd Program::shares_from_path_weights(const std::vector<double>& w) const {
  const Topology& topo = *inst_->topo;
  Eigen::VectorXd flow = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(links_));
  for (std::size_t b = 0; b < w.size(); ++b)
    for (std::size_t e : topo.path_link_indices(b)) flow[static_cast<Eigen::Index>(e)] += w[b];
  return flow;
}

std::vector<double> Program::even_path_weights() const {
  const Topology& topo = *inst_->topo;
  std::vector<double> w(topo.path_count(), 0.0);
  for (std::size_t b = 0; b < w.size(); ++b) {
    double weight = 1.0;
    std::size_t v = 0;
    for (std::size_t e : topo.path_link_indices(b)) {
      if (!allowed_[e]) {
        weight = 0.0;
        break;
      }
      weight /= static_cast<double>(allowed_out(topo, allowed_, v).size());
      if (auto rx = topo.link_rx_node(e)) v = *rx;
    }
    w[b] = weight;
  }
  return w;
}

Eigen::VectorXd Program::start_point() const { return start_point(even_path_weights()); }

Eigen::VectorXd Program::start_point(const std::vector<double>& path_weights) const {
  const Topology& topo = *inst_->topo;
  Eigen::VectorXd z = fixed_;
  const Eigen::VectorXd flow = shares_from_path_weights(path_weights);
  const bool flow_mode = inst_->traffic_mode == TrafficMode::kFlowPropagated;
  for (std::size_t q : active_) {
    for (std::size_t v = 0; v < topo.node_count(); ++v) {
      const auto outs = allowed_out(topo, allowed_, v);
      double inflow = 0.0;
      for (std::size_t e : outs) inflow += flow[static_cast<Eigen::Index>(e)];
      for (std::size_t e : outs) {
        const int sv = share_var(q, e);
        if (!is_free_[static_cast<std::size_t>(sv)]) continue;
        const double f = flow[static_cast<Eigen::Index>(e)];
        z[sv] = flow_mode ? f : (inflow > 0.0 ? f / inflow : 1.0 / static_cast<double>(outs.size()));
      }
    }
  }
  const double fill = regime_ == PowerRegime::kAtMost ? 0.98 : 1.0;
  for (std::size_t v = 0; v < topo.node_count(); ++v) {
    const auto outs = allowed_out(topo, allowed_, v);
    for (std::size_t e : outs)
      if (is_free_[static_cast<std::size_t>(power_var(e))]) z[power_var(e)] = fill / static_cast<double>(outs.size());
  }
  lift_epigraph(z, 1.5);
  return z;
}

void Program::lift_epigraph(Eigen::VectorXd& z, double margin) const {
  for (std::size_t k = 0; k < epi_count_; ++k) z[epi_var(k)] = 0.0;
  std::vector<double> top(epi_count_, 0.0);
  for (const auto& r : paths_) {
    if (r.epi_var < 0) continue;
    double v = 0.0;
    for (const Hop& h : r.hops) v += hop_value(h, z);
    auto& slot = top[static_cast<std::size_t>(r.epi_var - epi_var(0))];
    slot = std::max(slot, v);
  }
  for (std::size_t k = 0; k < epi_count_; ++k)
    z[epi_var(k)] = top[k] + (margin - 1.0) * (top[k] + 1e-3);
}

Eigen::VectorXd Program::from_decision(const Decision& d) const {
  const Topology& topo = *inst_->topo;
  if (d.services != services_ || d.power_w.size() != links_) throw ConfigError("decision does not fit the instance");
  Eigen::VectorXd z = fixed_;
  const bool flow_mode = inst_->traffic_mode == TrafficMode::kFlowPropagated;
  for (std::size_t q : active_) {
    std::vector<double> reach(topo.node_count(), 0.0);
    reach[0] = 1.0;
    for (std::size_t v = 0; v < topo.node_count(); ++v)
      for (std::size_t e : topo.out_links(v)) {
        const double f = reach[v] * d.a(e, q);
        if (auto rx = topo.link_rx_node(e)) reach[*rx] += f;
        const int sv = share_var(q, e);
        if (is_free_[static_cast<std::size_t>(sv)]) z[sv] = flow_mode ? f : d.a(e, q);
      }
  }
  for (std::size_t e = 0; e < links_; ++e)
    if (is_free_[static_cast<std::size_t>(power_var(e))]) z[power_var(e)] = d.power_w[e] / inst_->p_tot_w;
  lift_epigraph(z, 1.0);
  return z;
}

Decision Program::to_decision(const Eigen::VectorXd& z, double zero_tol) const {
  const Topology& topo = *inst_->topo;
  Decision d(topo, services_);
  const bool flow_mode = inst_->traffic_mode == TrafficMode::kFlowPropagated;
  std::vector<bool> active(services_, false);
  for (std::size_t q : active_) active[q] = true;

  for (std::size_t q = 0; q < services_; ++q) {
    std::vector<double> inflow(topo.node_count(), 0.0);
    inflow[0] = 1.0;
    for (std::size_t v = 0; v < topo.node_count(); ++v) {
      const auto outs = allowed_out(topo, allowed_, v);
      const auto& all = topo.out_links(v);
      std::vector<double> a(all.size(), 0.0);
      double sum = 0.0;
      if (active[q]) {
        for (std::size_t k = 0; k < all.size(); ++k) {
          const std::size_t e = all[k];
          if (!allowed_[e]) continue;
          double x = z[share_var(q, e)];
          if (flow_mode) x = inflow[v] > zero_tol ? x / inflow[v] : 0.0;
          a[k] = x < zero_tol ? 0.0 : x;
          sum += a[k];
        }
      }
      if (sum <= 0.0) {
        // Idle node or service: even split over the allowed links.
        const std::size_t n = outs.empty() ? all.size() : outs.size();
        for (std::size_t k = 0; k < all.size(); ++k)
          a[k] = (outs.empty() || allowed_[all[k]]) ? 1.0 / static_cast<double>(n) : 0.0;
        sum = 1.0;
      }
      for (std::size_t k = 0; k < all.size(); ++k) {
        d.a(all[k], q) = a[k] / sum;
        if (flow_mode)
          if (auto rx = topo.link_rx_node(all[k])) inflow[*rx] += z[share_var(q, all[k])];
      }
    }
  }

  for (std::size_t e = 0; e < links_; ++e) d.power_w[e] = std::max(z[power_var(e)], 0.0) * inst_->p_tot_w;
  // Release power of idle relays and of links no service uses; under the
  // equality rule the freed power goes to the node's used links.
  const auto busy = active_nodes(topo, d);
  for (std::size_t v = 0; v < topo.node_count(); ++v) {
    const auto& outs = topo.out_links(v);
    if (!busy[v]) {
      for (std::size_t e : outs) d.power_w[e] = 0.0;
      continue;
    }
    std::vector<bool> used(outs.size(), false);
    bool any = false;
    for (std::size_t k = 0; k < outs.size(); ++k) {
      for (std::size_t q = 0; q < services_; ++q) used[k] = used[k] || (active[q] && d.a(outs[k], q) > 0.0);
      any = any || used[k];
    }
    if (!any) continue;
    double freed = 0.0, kept = 0.0;
    for (std::size_t k = 0; k < outs.size(); ++k) {
      if (!used[k]) {
        freed += d.power_w[outs[k]];
        d.power_w[outs[k]] = 0.0;
      } else {
        kept += d.power_w[outs[k]];
      }
    }
    if (regime_ != PowerRegime::kAtMost && freed > 0.0 && kept > 0.0)
      for (std::size_t k = 0; k < outs.size(); ++k)
        if (used[k]) d.power_w[outs[k]] += freed * d.power_w[outs[k]] / kept;
  }
  return d;
}

}  // namespace mhmp::detail
