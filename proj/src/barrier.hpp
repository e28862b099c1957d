#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mhmp/solver.hpp"
#include "program.hpp"

namespace mhmp::detail {

struct BarrierOutcome {
  Eigen::VectorXd z;
  bool converged = false;
  bool interior_start = true;
  int newton_steps = 0;
  std::vector<SolverTraceEntry> trace;
};

/// Primal log-barrier path following in the equality null space. `z0` must
/// be strictly interior; Newton steps use a shifted Cholesky factor when the
/// reduced Hessian is indefinite.
BarrierOutcome run_barrier(const Program& prog, const Eigen::VectorXd& z0, const SolverOptions& opts);

/// KKT residual of `prog` at a decision (see certify_kkt).
double certify_program(const Program& prog, const Decision& decision);

/// Lawson-Hanson nonnegative least squares: argmin ||A x - b|| s.t. x >= 0.
Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int max_iterations = 0);

}  // namespace mhmp::detail
