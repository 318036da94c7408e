#pragma once

#include <json.hpp>

#include "dpda/problem_model.hpp"

namespace dpda {

// Centralized reference solution (x*, theta*) used by every metric.
struct OracleSolution {
  Vector x_star;
  BlockVector theta_star;  // one block of size m_i per agent
  double gap = 0.0;        // |sum_i <theta_i, A_i x - b_i>|
  int iterations_used = 0;
  double kkt_residual = 0.0;
  bool converged = false;
};

struct KktResidual {
  double stationarity = 0.0;
  double primal_feasibility = 0.0;
  double dual_feasibility = 0.0;
  double complementarity = 0.0;

  double max() const;
};

// Infinity-norm KKT residual of the centralized problem at (x, theta).
// Stationarity is measured through the prox fixed point
// x = prox_rho(x - grad f(x) - sum_i A_i^T theta_i).
KktResidual kkt_residual(const ProblemInstance& instance, const Vector& x, const BlockVector& theta);

struct OracleOptions {
  double tol = 1e-10;
  int max_iters = 2'000'000;
  // The accelerated schedule is restarted from the current iterate once the
  // KKT residual has dropped by `restart_factor`, or after `max_restart_period`.
  double restart_factor = 0.2;
  int max_restart_period = 5000;
  int check_every = 20;
};

// Solves min_x sum_i phi_i(x) s.t. A_i x - b_i in K_i with the accelerated
// primal-dual iteration on the stacked constraint (one node). When the
// residual never reaches tol the best iterate is returned with converged=false.
OracleSolution solve_centralized(const ProblemInstance& instance, double tol, int max_iters);
OracleSolution solve_centralized(const ProblemInstance& instance, const OracleOptions& opts);

nlohmann::json to_json(const OracleSolution& sol);
OracleSolution oracle_from_json(const nlohmann::json& j);

}  // namespace dpda
