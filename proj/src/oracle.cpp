#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "mhmp/errors.hpp"
#include "mhmp/solver.hpp"

// Brute-force reference kept independent of the barrier program: powers are
// gridded, shares come from an exact vertex enumeration of the inner linear
// program for every grid point.

namespace mhmp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Coordinate {
  std::vector<std::size_t> links;  ///< LL: two links of a node; LP: one link
};

struct ShareLayout {
  std::vector<std::size_t> free_links;            ///< links with a free share
  std::vector<int> free_index;                    ///< per link, -1 if fixed
  std::vector<double> fixed_share;                ///< per link
  std::vector<std::vector<std::pair<int, double>>> eq_rows;
  std::vector<double> eq_rhs;
};

struct InnerSolution {
  double t = kInf;
  std::vector<double> share;  ///< per link
};

class Oracle {
 public:
  Oracle(const ProblemInstance& inst) : inst_(inst), topo_(*inst.topo) {
    inst.validate();
    nq_ = inst.services();
    allowed_ = inst.allowed_links();
    lp_ = inst.objective == Objective::kMinPower;
    for (std::size_t q = 0; q < nq_; ++q) layouts_.push_back(layout(q));
    base_power_.assign(topo_.link_count(), 0.0);
    for (std::size_t v = 0; v < topo_.node_count(); ++v) {
      std::vector<std::size_t> outs;
      for (std::size_t e : topo_.out_links(v))
        if (allowed_[e]) outs.push_back(e);
      if (outs.empty()) continue;
      if (lp_) {
        for (std::size_t e : outs) coords_.push_back({{e}});
        node_groups_.push_back(outs);
      } else if (inst.power_policy == PowerPolicy::kEqualSplit || outs.size() == 1) {
        for (std::size_t e : outs) base_power_[e] = 1.0 / static_cast<double>(outs.size());
      } else {
        coords_.push_back({outs});
      }
    }
  }

  std::size_t dims() const { return coords_.size(); }

  // Power fractions for a coordinate vector.
  std::vector<double> powers(const std::vector<double>& c) const {
    std::vector<double> p = base_power_;
    for (std::size_t i = 0; i < coords_.size(); ++i) {
      const auto& links = coords_[i].links;
      if (links.size() == 1) {
        p[links[0]] = c[i];
      } else {
        p[links[0]] = c[i];
        p[links[1]] = 1.0 - c[i];
      }
    }
    return p;
  }

  bool admissible(const std::vector<double>& p) const {
    for (const auto& g : node_groups_) {
      double s = 0.0;
      for (std::size_t e : g) s += p[e];
      if (s > 1.0 + 1e-12) return false;
    }
    return true;
  }

  double value(const std::vector<double>& c, std::vector<InnerSolution>* keep = nullptr) {
    ++evaluations_;
    const auto p = powers(c);
    if (!admissible(p)) return kInf;
    double total = 0.0;
    std::vector<InnerSolution> sols;
    for (std::size_t q = 0; q < nq_; ++q) {
      InnerSolution s = inner(q, p);
      if (!std::isfinite(s.t)) return kInf;
      if (lp_ && s.t > inst_.budgets_s[q] * (1.0 + 1e-12)) return kInf;
      total += s.t;
      sols.push_back(std::move(s));
    }
    if (lp_) total = std::accumulate(p.begin(), p.end(), 0.0) * inst_.p_tot_w;
    if (keep) *keep = std::move(sols);
    return total;
  }

  std::size_t evaluations() const { return evaluations_; }

  Decision decision(const std::vector<double>& c, const std::vector<InnerSolution>& sols) const {
    Decision d(topo_, nq_);
    const auto p = powers(c);
    for (std::size_t e = 0; e < p.size(); ++e) d.power_w[e] = p[e] * inst_.p_tot_w;
    const bool flow = inst_.traffic_mode == TrafficMode::kFlowPropagated;
    for (std::size_t q = 0; q < nq_; ++q) {
      std::vector<double> inflow(topo_.node_count(), 0.0);
      inflow[0] = 1.0;
      const bool has = q < sols.size() && !sols[q].share.empty();
      for (std::size_t v = 0; v < topo_.node_count(); ++v) {
        const auto& outs = topo_.out_links(v);
        std::vector<double> a(outs.size(), 0.0);
        double sum = 0.0;
        for (std::size_t k = 0; k < outs.size(); ++k) {
          if (!has || !allowed_[outs[k]]) continue;
          const double x = sols[q].share[outs[k]];
          a[k] = flow ? (inflow[v] > 1e-12 ? x / inflow[v] : 0.0) : x;
          a[k] = std::max(a[k], 0.0);
          sum += a[k];
          if (flow)
            if (auto rx = topo_.link_rx_node(outs[k])) inflow[*rx] += x;
        }
        if (sum <= 1e-12) {
          std::size_t n = 0;
          for (std::size_t e : outs) n += allowed_[e] ? 1 : 0;
          for (std::size_t k = 0; k < outs.size(); ++k)
            a[k] = n == 0 ? 1.0 / static_cast<double>(outs.size()) : (allowed_[outs[k]] ? 1.0 / static_cast<double>(n) : 0.0);
          sum = 1.0;
        }
        for (std::size_t k = 0; k < outs.size(); ++k) d.a(outs[k], q) = a[k] / sum;
      }
    }
    return d;
  }

 private:
  double load(std::size_t q, std::size_t e) const {
    if (inst_.traffic_mode == TrafficMode::kFlowPropagated) return inst_.load_pkts[q];
    return inst_.load_pkts[topo_.link_tx_node(e) * nq_ + q];
  }

  ShareLayout layout(std::size_t q) const {
    ShareLayout s;
    const std::size_t nl = topo_.link_count();
    s.free_index.assign(nl, -1);
    s.fixed_share.assign(nl, 0.0);
    const bool flow = inst_.traffic_mode == TrafficMode::kFlowPropagated;
    for (std::size_t v = 0; v < topo_.node_count(); ++v) {
      std::vector<std::size_t> outs;
      for (std::size_t e : topo_.out_links(v))
        if (allowed_[e]) outs.push_back(e);
      if (outs.empty()) continue;
      const bool free = flow || (inst_.load_pkts[v * nq_ + q] > 0.0 && outs.size() > 1);
      if (!free) {
        for (std::size_t e : outs) s.fixed_share[e] = 1.0 / static_cast<double>(outs.size());
        continue;
      }
      for (std::size_t e : outs) {
        s.free_index[e] = static_cast<int>(s.free_links.size());
        s.free_links.push_back(e);
      }
    }
    for (std::size_t v = 0; v < topo_.node_count(); ++v) {
      std::vector<std::pair<int, double>> row;
      for (std::size_t e : topo_.out_links(v))
        if (s.free_index[e] >= 0) row.emplace_back(s.free_index[e], 1.0);
      if (row.empty()) continue;
      double rhs = 1.0;
      if (flow) {
        for (std::size_t e : topo_.in_links(v))
          if (s.free_index[e] >= 0) row.emplace_back(s.free_index[e], -1.0);
        rhs = v == 0 ? 1.0 : 0.0;
      }
      s.eq_rows.push_back(std::move(row));
      s.eq_rhs.push_back(rhs);
    }
    return s;
  }

  // min t over shares s.t. every path sum <= t, by enumerating vertices in
  // the equality-reduced coordinates.
  InnerSolution inner(std::size_t q, const std::vector<double>& p) const {
    const ShareLayout& s = layouts_[q];
    const std::size_t nl = topo_.link_count();
    InnerSolution out;
    double total_load = 0.0;
    for (std::size_t e = 0; e < nl; ++e) total_load += allowed_[e] ? load(q, e) : 0.0;
    if (total_load == 0.0) {
      out.t = 0.0;
      return out;
    }
    std::vector<double> cost(nl, 0.0);  // seconds per unit share
    std::vector<bool> dead(nl, false);
    for (std::size_t e = 0; e < nl; ++e) {
      const double bits = load(q, e) * inst_.packet_bits[q];
      if (!allowed_[e] || bits == 0.0) continue;
      const double d = inst_.curves[e].rate(p[e] * inst_.p_tot_w);
      if (d > 0.0) {
        cost[e] = bits / d;
      } else {
        dead[e] = true;
        if (s.free_index[e] < 0 && s.fixed_share[e] > 0.0) return out;
      }
    }

    const auto k = static_cast<Eigen::Index>(s.free_links.size());
    std::vector<std::pair<std::vector<std::pair<int, double>>, double>> eqs;
    for (std::size_t r = 0; r < s.eq_rows.size(); ++r) eqs.emplace_back(s.eq_rows[r], s.eq_rhs[r]);
    for (std::size_t e = 0; e < nl; ++e)
      if (dead[e] && s.free_index[e] >= 0) eqs.push_back({{{s.free_index[e], 1.0}}, 0.0});

    Eigen::MatrixXd eq = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(eqs.size()), k);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(eqs.size()));
    for (std::size_t r = 0; r < eqs.size(); ++r) {
      for (const auto& [i, c] : eqs[r].first) eq(static_cast<Eigen::Index>(r), i) += c;
      rhs[static_cast<Eigen::Index>(r)] = eqs[r].second;
    }
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(k);
    Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(k, k);
    if (eq.rows() > 0 && k > 0) {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(eq);
      x0 = lu.solve(rhs);
      if ((eq * x0 - rhs).cwiseAbs().maxCoeff() > 1e-9) return out;
      basis = lu.kernel();
      if (lu.rank() == k) basis = Eigen::MatrixXd::Zero(k, 0);
    }
    const Eigen::Index dim = basis.cols();

    // Inequalities a^T (y, t) <= b in reduced coordinates.
    std::vector<Eigen::VectorXd> rows_a;
    std::vector<double> rows_b;
    for (Eigen::Index i = 0; i < k; ++i) {
      Eigen::VectorXd a = Eigen::VectorXd::Zero(dim + 1);
      a.head(dim) = -basis.row(i).transpose();
      rows_a.push_back(a);
      rows_b.push_back(x0[i]);
    }
    for (std::size_t b = 0; b < topo_.path_count(); ++b) {
      Eigen::VectorXd c = Eigen::VectorXd::Zero(k);
      double constant = 0.0;
      bool any = false;
      for (std::size_t e : topo_.path_link_indices(b)) {
        if (cost[e] == 0.0) continue;
        any = true;
        if (s.free_index[e] >= 0)
          c[s.free_index[e]] += cost[e];
        else
          constant += cost[e] * s.fixed_share[e];
      }
      if (!any) continue;
      Eigen::VectorXd a(dim + 1);
      a.head(dim) = basis.transpose() * c;
      a[dim] = -1.0;
      rows_a.push_back(a);
      rows_b.push_back(-(c.dot(x0) + constant));
    }

    const std::size_t m = rows_a.size();
    const auto need = static_cast<std::size_t>(dim + 1);
    double scale = 1.0;
    for (double b : rows_b) scale = std::max(scale, std::abs(b));
    Eigen::VectorXd best_y;
    if (m < need) return out;
    std::vector<std::size_t> pick(need);
    std::iota(pick.begin(), pick.end(), 0);
    Eigen::MatrixXd sys(static_cast<Eigen::Index>(need), dim + 1);
    Eigen::VectorXd sys_b(static_cast<Eigen::Index>(need));
    while (true) {
      for (std::size_t r = 0; r < need; ++r) {
        sys.row(static_cast<Eigen::Index>(r)) = rows_a[pick[r]].transpose();
        sys_b[static_cast<Eigen::Index>(r)] = rows_b[pick[r]];
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
      if (lu.isInvertible()) {
        const Eigen::VectorXd y = lu.solve(sys_b);
        const double t = y[dim];
        if (t < out.t) {
          bool feasible = true;
          for (std::size_t r = 0; r < m && feasible; ++r)
            feasible = rows_a[r].dot(y) <= rows_b[r] + 1e-10 * scale;
          if (feasible) {
            out.t = t;
            best_y = y;
          }
        }
      }
      // Next combination in lexicographic order.
      std::size_t i = need;
      while (i > 0 && pick[i - 1] == m - need + i - 1) --i;
      if (i == 0) break;
      ++pick[i - 1];
      for (std::size_t j = i; j < need; ++j) pick[j] = pick[j - 1] + 1;
    }
    if (!std::isfinite(out.t)) return out;
    out.t = std::max(out.t, 0.0);
    out.share = s.fixed_share;
    const Eigen::VectorXd x = x0 + basis * best_y.head(dim);
    for (Eigen::Index i = 0; i < k; ++i) out.share[s.free_links[static_cast<std::size_t>(i)]] = std::max(x[i], 0.0);
    return out;
  }

  const ProblemInstance& inst_;
  const Topology& topo_;
  std::size_t nq_ = 0;
  bool lp_ = false;
  std::vector<bool> allowed_;
  std::vector<ShareLayout> layouts_;
  std::vector<Coordinate> coords_;
  std::vector<std::vector<std::size_t>> node_groups_;
  std::vector<double> base_power_;
  std::size_t evaluations_ = 0;
};

std::vector<double> grid_values(std::size_t points) {
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) g[i] = static_cast<double>(i) / static_cast<double>(points - 1);
  return g;
}

// Visits every point of values^dims; keeps the best.
void full_grid(Oracle& o, const std::vector<double>& values, std::vector<double>& best_c, double& best) {
  const std::size_t dims = o.dims();
  std::vector<std::size_t> idx(dims, 0);
  std::vector<double> c(dims);
  while (true) {
    for (std::size_t i = 0; i < dims; ++i) c[i] = values[idx[i]];
    const double v = o.value(c);
    if (v < best) {
      best = v;
      best_c = c;
    }
    std::size_t i = 0;
    while (i < dims && ++idx[i] == values.size()) idx[i++] = 0;
    if (i == dims) break;
  }
}

}  // namespace

SolverResult grid_oracle(const ProblemInstance& inst, const OracleOptions& opts) {
  if (!(opts.resolution > 0.0) || opts.resolution > 1.0) throw ConfigError("oracle resolution must be in (0, 1]");
  Oracle o(inst);
  const auto points = static_cast<std::size_t>(std::llround(1.0 / opts.resolution)) + 1;
  const std::size_t dims = o.dims();
  const double full = std::pow(static_cast<double>(points), static_cast<double>(dims)) *
                      static_cast<double>(std::max<std::size_t>(inst.services(), 1));

  std::vector<double> best_c(dims, 0.5);
  double best = kInf;
  if (dims == 0) {
    best = o.value(best_c);
  } else if (full <= opts.max_evaluations) {
    full_grid(o, grid_values(points), best_c, best);
  } else if (opts.reduced_sweeps) {
    const auto coarse = static_cast<std::size_t>(
        std::max(2.0, std::floor(std::pow(opts.coarse_points, 1.0 / static_cast<double>(dims)))));
    full_grid(o, grid_values(coarse), best_c, best);
    const auto fine = grid_values(points);
    for (int cycle = 0; cycle < 50; ++cycle) {
      bool improved = false;
      for (std::size_t i = 0; i < dims; ++i) {
        std::vector<double> c = best_c;
        for (double v : fine) {
          c[i] = v;
          const double val = o.value(c);
          if (val < best * (1.0 - 1e-12)) {
            best = val;
            best_c = c;
            improved = true;
          }
        }
      }
      if (!improved) break;
    }
  } else {
    throw ConfigError("oracle grid of " + std::to_string(full) +
                      " evaluations exceeds the guard; use a coarser resolution, a smaller instance or reduced sweeps");
  }

  SolverResult r;
  std::vector<InnerSolution> sols;
  if (std::isfinite(best)) o.value(best_c, &sols);
  r.decision = o.decision(best_c, sols);
  r.objective = best;
  r.status = std::isfinite(best) ? SolverStatus::kOptimal : SolverStatus::kInfeasible;
  r.iterations = static_cast<int>(std::min<std::size_t>(o.evaluations(), 2147483647));
  r.worst_latency_s = evaluate_latency(inst, r.decision).worst_latency_s;
  r.kkt_residual = 0.0;
  return r;
}

}  // namespace mhmp
