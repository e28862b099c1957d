#include <cmath>

#include "barrier.hpp"
#include "mhmp/errors.hpp"

namespace mhmp::detail {

double certify_program(const Program& prog, const Decision& decision) {
  if (!prog.has_traffic()) return 0.0;
  const ProblemInstance& inst = prog.instance();
  const Topology& topo = *inst.topo;
  const PowerRule rule = prog.regime() == PowerRegime::kAtMost ? PowerRule::kAtMostTotal : PowerRule::kEqualTotal;
  const DecisionCheck check = check_decision(topo, decision, inst.p_tot_w, rule);
  if (!check.ok(1e-6)) throw ConfigError("decision violates " + check.describe());

  const Eigen::VectorXd z = prog.from_decision(decision);
  const Eigen::VectorXd g = prog.constraints(z);
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (!(g[i] <= 1e-6)) throw ConfigError("decision violates the latency constraints");

  const auto& free = prog.free_vars();
  std::vector<int> free_pos(prog.var_count(), -1);
  for (std::size_t i = 0; i < free.size(); ++i) free_pos[static_cast<std::size_t>(free[i])] = static_cast<int>(i);

  // Links with no share and no power are switched off: their variables are
  // pinned at zero with multipliers of either sign.
  std::vector<int> pinned;
  for (std::size_t e = 0; e < topo.link_count(); ++e) {
    if (z[prog.power_var(e)] != 0.0) continue;
    bool carries = false;
    for (std::size_t q = 0; q < inst.services(); ++q) carries = carries || z[prog.share_var(q, e)] != 0.0;
    if (carries) continue;
    for (std::size_t q = 0; q < inst.services(); ++q)
      if (free_pos[static_cast<std::size_t>(prog.share_var(q, e))] >= 0) pinned.push_back(prog.share_var(q, e));
    if (free_pos[static_cast<std::size_t>(prog.power_var(e))] >= 0) pinned.push_back(prog.power_var(e));
  }
  std::vector<bool> is_pinned(prog.var_count(), false);
  for (int v : pinned) is_pinned[static_cast<std::size_t>(v)] = true;

  const Eigen::MatrixXd& basis = prog.null_basis();
  const Eigen::Index dim = basis.cols();
  const auto m = static_cast<Eigen::Index>(prog.constraint_count());
  const auto np = static_cast<Eigen::Index>(pinned.size());
  const auto nf = static_cast<Eigen::Index>(free.size());

  auto restrict = [&](const Eigen::VectorXd& full) {
    Eigen::VectorXd r(nf);
    for (Eigen::Index i = 0; i < nf; ++i) {
      const auto var = static_cast<std::size_t>(free[static_cast<std::size_t>(i)]);
      const double v = full[static_cast<Eigen::Index>(var)];
      r[i] = is_pinned[var] || !std::isfinite(v) ? 0.0 : v;
    }
    return r;
  };

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim + m, m + 2 * np);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dim + m);
  b.head(dim) = -basis.transpose() * restrict(prog.objective_gradient());
  for (Eigen::Index i = 0; i < m; ++i) {
    a.col(i).head(dim) = basis.transpose() * restrict(prog.constraint_gradient(static_cast<std::size_t>(i), z));
    a(dim + i, i) = std::max(-g[i], 0.0);
  }
  for (Eigen::Index k = 0; k < np; ++k) {
    const Eigen::VectorXd col = basis.row(free_pos[static_cast<std::size_t>(pinned[static_cast<std::size_t>(k)])]).transpose();
    a.col(m + 2 * k).head(dim) = col;
    a.col(m + 2 * k + 1).head(dim) = -col;
  }
  const Eigen::VectorXd lambda = nnls(a, b);
  return (a * lambda - b).cwiseAbs().maxCoeff();
}

}  // namespace mhmp::detail
