#pragma once

// Epigraph form of the block problems over link shares, power fractions and
// latency epigraph variables. Shares are link flow fractions in flow mode
// (linear conservation constraints) and split ratios in per-node mode.
// Powers are fractions of P_tot.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "mhmp/problem.hpp"

namespace mhmp::detail {

enum class Goal {
  kSumMaxLatency,  ///< min sum_q t_q with u_{q,b} <= t_q
  kTotalPower,     ///< min sum p with u_{q,b} <= budget_q
  kMaxBudgetRatio, ///< min s with u_{q,b} / budget_q <= s (feasibility phase)
};

enum class PowerRegime {
  kEqual,       ///< per-node sum of powers equals P_tot
  kAtMost,      ///< per-node sum of powers at most P_tot
  kFixedSplit,  ///< P_tot split evenly over usable links, not optimized
};

/// One hop of a path row. Variables index the full vector; fixed variables
/// simply hold their value there.
struct Hop {
  int share = 0;
  int power = 0;
  std::size_t link = 0;
  double coef = 0.0;  ///< bits scaled by the row's latency unit
};

/// sum_h coef_h x_h / D_h(p_h) - z[epi_var] - constant <= 0
struct PathRow {
  std::size_t service = 0;
  std::size_t path = 0;
  std::vector<Hop> hops;
  int epi_var = -1;
  double constant = 0.0;
};

/// sum_i coef_i z_i <= rhs
struct LinearRow {
  std::vector<std::pair<int, double>> terms;
  double rhs = 0.0;
};

class Program {
 public:
  Program(const ProblemInstance& inst, Goal goal, PowerRegime regime, bool budget_rows);

  const ProblemInstance& instance() const { return *inst_; }
  Goal goal() const { return goal_; }
  PowerRegime regime() const { return regime_; }

  std::size_t var_count() const { return fixed_.size(); }
  int share_var(std::size_t q, std::size_t e) const;
  int power_var(std::size_t e) const;
  int epi_var(std::size_t k) const;
  std::size_t epi_count() const { return epi_count_; }

  const std::vector<int>& free_vars() const { return free_; }
  /// Orthonormal basis of the equality null space in free coordinates.
  const Eigen::MatrixXd& null_basis() const { return null_basis_; }
  const std::vector<PathRow>& path_rows() const { return paths_; }
  const std::vector<LinearRow>& linear_rows() const { return linear_; }
  std::size_t constraint_count() const { return paths_.size() + linear_.size(); }
  bool has_traffic() const { return !active_.empty(); }
  double latency_unit_s() const { return latency_unit_s_; }

  /// Full-length vector holding the fixed values; free entries are zero.
  const Eigen::VectorXd& fixed_values() const { return fixed_; }
  double objective(const Eigen::VectorXd& z) const;
  const Eigen::VectorXd& objective_gradient() const { return cost_; }

  double hop_value(const Hop& h, const Eigen::VectorXd& z) const;
  double row_value(const PathRow& r, const Eigen::VectorXd& z) const;
  double row_value(const LinearRow& r, const Eigen::VectorXd& z) const;
  /// All constraint values, path rows first.
  Eigen::VectorXd constraints(const Eigen::VectorXd& z) const;
  /// Gradient of constraint i in full coordinates.
  Eigen::VectorXd constraint_gradient(std::size_t i, const Eigen::VectorXd& z) const;

  /// Barrier value t f(z) - sum log(-g_i(z)); +inf outside the interior.
  double barrier(const Eigen::VectorXd& z, double t) const;
  /// Gradient and Hessian of the barrier in free coordinates.
  void barrier_derivatives(const Eigen::VectorXd& z, double t, Eigen::VectorXd& grad,
                           Eigen::MatrixXd& hess) const;

  /// Path weights of the even split at every node over its allowed links.
  std::vector<double> even_path_weights() const;
  /// Strictly interior point: uniform shares, even power, slack epigraph.
  Eigen::VectorXd start_point() const;
  /// Interior point steering shares toward `weights` (per path, summing to 1).
  Eigen::VectorXd start_point(const std::vector<double>& path_weights) const;
  /// Sets every epigraph variable to `margin` times its tightest feasible value.
  void lift_epigraph(Eigen::VectorXd& z, double margin) const;

  Eigen::VectorXd from_decision(const Decision& d) const;
  /// Converts to a Decision; shares below `zero_tol` are snapped to zero
  /// and powers of links that carry nothing are released.
  Decision to_decision(const Eigen::VectorXd& z, double zero_tol = 1e-9) const;

 private:
  void build_shares();
  void build_powers();
  void build_rows(bool budget_rows);
  void build_null_space();
  void row_gradient(const PathRow& r, const Eigen::VectorXd& z, std::vector<std::pair<int, double>>& out) const;
  Eigen::VectorXd shares_from_path_weights(const std::vector<double>& w) const;

  const ProblemInstance* inst_;
  Goal goal_;
  PowerRegime regime_;
  std::size_t services_ = 0;
  std::size_t links_ = 0;
  std::size_t epi_count_ = 0;
  std::vector<std::size_t> active_;       ///< services with traffic
  std::vector<bool> allowed_;             ///< per link
  std::vector<bool> is_free_;
  std::vector<int> free_;
  std::vector<int> free_pos_;
  Eigen::VectorXd fixed_;
  Eigen::VectorXd cost_;
  std::vector<std::vector<std::pair<int, double>>> equalities_;
  std::vector<double> equality_rhs_;
  Eigen::MatrixXd null_basis_;
  std::vector<PathRow> paths_;
  std::vector<LinearRow> linear_;
  double latency_unit_s_ = 1.0;
};

/// Offered packets feeding the share variable of (q, link).
double share_load(const ProblemInstance& inst, std::size_t q, std::size_t link);

}  // namespace mhmp::detail
