#include "barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mhmp::detail {

namespace {

Eigen::VectorXd newton_direction(const Eigen::MatrixXd& h, const Eigen::VectorXd& g) {
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (llt.info() == Eigen::Success) return llt.solve(-g);
  const double scale = std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
  double shift = 1e-10 * scale;
  Eigen::MatrixXd shifted = h;
  for (int k = 0; k < 40; ++k, shift *= 10.0) {
    shifted.diagonal() = h.diagonal().array() + shift;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) return llt.solve(-g);
  }
  return -g / scale;
}

}  // namespace

BarrierOutcome run_barrier(const Program& prog, const Eigen::VectorXd& z0, const SolverOptions& opts) {
  BarrierOutcome out;
  out.z = z0;
  const Eigen::MatrixXd& basis = prog.null_basis();
  const auto& free = prog.free_vars();
  const double m = static_cast<double>(prog.constraint_count());
  if (!std::isfinite(prog.barrier(z0, 1.0))) {
    out.interior_start = false;
    return out;
  }
  if (basis.cols() == 0 || m == 0.0) {
    out.converged = true;
    return out;
  }

  double t = m / std::max(std::abs(prog.objective(z0)), 1e-2);
  Eigen::VectorXd grad, gy, dy, step, trial;
  Eigen::MatrixXd hess, hy;
  for (int outer = 0; outer < opts.max_outer_iterations; ++outer) {
    int steps = 0;
    bool stalled = false;
    for (; steps < opts.max_newton_per_center; ++steps) {
      prog.barrier_derivatives(out.z, t, grad, hess);
      gy = basis.transpose() * grad;
      hy = basis.transpose() * hess * basis;
      dy = newton_direction(hy, gy);
      const double decrement = -gy.dot(dy);
      if (!(decrement > 2e-10)) break;
      step = basis * dy;
      const double phi0 = prog.barrier(out.z, t);
      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
        trial = out.z;
        for (std::size_t i = 0; i < free.size(); ++i) trial[free[i]] += alpha * step[static_cast<Eigen::Index>(i)];
        const double phi = prog.barrier(trial, t);
        if (phi <= phi0 - 0.01 * alpha * decrement) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        stalled = true;
        break;
      }
      out.z = trial;
    }
    out.newton_steps += steps;
    if (opts.record_trace) out.trace.push_back({outer, t, prog.objective(out.z), steps});
    const double gap = m / t;
    if (gap < opts.gap_tolerance || (stalled && gap < 1e-7)) {
      out.converged = true;
      break;
    }
    t *= opts.barrier_growth;
  }
  return out;
}

Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int max_iterations) {
  const Eigen::Index n = a.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (n == 0) return x;
  if (max_iterations <= 0) max_iterations = static_cast<int>(3 * n + 30);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double tol = 10.0 * std::numeric_limits<double>::epsilon() * a.cwiseAbs().maxCoeff() *
                     static_cast<double>(std::max(a.rows(), n));

  auto solve_passive = [&](Eigen::VectorXd& s) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j)
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    s = Eigen::VectorXd::Zero(n);
    if (idx.empty()) return;
    Eigen::MatrixXd ap(a.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) ap.col(static_cast<Eigen::Index>(k)) = a.col(idx[k]);
    const Eigen::VectorXd sp = ap.completeOrthogonalDecomposition().solve(b);
    for (std::size_t k = 0; k < idx.size(); ++k) s[idx[k]] = sp[static_cast<Eigen::Index>(k)];
  };

  Eigen::VectorXd w = a.transpose() * (b - a * x);
  Eigen::VectorXd s;
  for (int iter = 0; iter < max_iterations; ++iter) {
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!passive[static_cast<std::size_t>(j)] && w[j] > best_w) {
        best_w = w[j];
        best = j;
      }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;
    solve_passive(s);
    for (int inner = 0; inner < max_iterations; ++inner) {
      double alpha = 1.0;
      bool blocked = false;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!passive[static_cast<std::size_t>(j)] || s[j] > 0.0) continue;
        blocked = true;
        const double denom = x[j] - s[j];
        if (denom > 0.0) alpha = std::min(alpha, x[j] / denom);
      }
      if (!blocked) break;
      x += alpha * (s - x);
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && x[j] <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          x[j] = 0.0;
        }
      solve_passive(s);
    }
    x = s;
    w = a.transpose() * (b - a * x);
  }
  return x;
}

}  // namespace mhmp::detail
