#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpda/graph_topology.hpp"
#include "dpda/oracle.hpp"
#include "dpda/problem_model.hpp"

namespace dpda {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct MetricRow {
  std::size_t k = 0;
  std::uint64_t t_k = 0;
  double suboptimality = kNaN;          // |Phi(x_bar) - phi(x*)|
  double infeasibility = kNaN;          // max_i d_K(A_i x_bar_i - b_i)
  double consensus_violation = kNaN;    // max_i ||x_i - p(x)||
  double relative_error_last = kNaN;
  double relative_error_ergodic = kNaN;
  double bound_lhs = kNaN;
  double theorem_bound = kNaN;          // rhs of the ergodic bound
  double iterate_error_sq = kNaN;       // ||x^K - 1 (x) x*||^2
  double iterate_bound = kNaN;
  double lower_bound_value = kNaN;      // Phi - phi* + sum ||theta*|| d_K, must be >= -eps
  double accumulation = 0.0;            // measured averaging-error accumulation (time-varying)
  double N_K = 0.0;
};

struct MetricTrace {
  std::vector<MetricRow> rows;
  double epsilon_oracle = 0.0;
  double theta0 = 0.0;                  // initialization part of the bound
  nlohmann::json metadata = nlohmann::json::object();

  const MetricRow& at_k(std::size_t k) const;
};

// Column order of trace CSV files.
std::vector<std::string> trace_columns();
std::string trace_csv(const MetricTrace& trace);
nlohmann::json to_json(const MetricTrace& trace);

double relative_error(const BlockVector& xs, const Vector& x_star);
double infeasibility(const BlockVector& xs, const ProblemInstance& problem);
double consensus_violation(const BlockVector& xs);
// ||x - P_C x||
double consensus_distance(const BlockVector& xs);
// ||M x|| = sqrt(sum over edges ||x_i - x_j||^2)
double edge_disagreement(const BlockVector& xs, const GraphSnapshot& g);

enum class Regularizer { Laplacian, ConsensusDistance };

// Phi(x) = sum_i phi_i(x_i) + (alpha/2) r(x)
double regularized_objective(const BlockVector& xs, const ProblemInstance& problem, double alpha,
                             Regularizer reg, const GraphSnapshot* graph);
double suboptimality(const BlockVector& x_bar, const ProblemInstance& problem, const OracleSolution& oracle,
                     double alpha, Regularizer reg, const GraphSnapshot* graph);

// 10 * KKT residual * (1 + ||theta*||)
double epsilon_oracle(const OracleSolution& oracle);

// 1/(2 gamma0) + sum_i [||x_i^0 - x*||^2/(2 tau0) + 2 ||theta_i*||^2 / kappa_i^0]
double theta_initial(const BlockVector& x0, const OracleSolution& oracle, double gamma0, double tau0,
                     const std::vector<double>& kappa0);

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double iterate_error_sq = 0.0;
  double iterate_bound = 0.0;
  double lower_bound_value = 0.0;
};

struct BoundInputs {
  BlockVector x_bar;       // ergodic iterate
  BlockVector x_last;      // x^K
  double N_K = 0.0;        // sum gamma^{k-1}/gamma0
  double gamma0 = 0.0;
  double gamma_K = 0.0;
  double tau_tilde_K = 0.0;
  double alpha = 0.0;
  double theta_budget = 0.0;  // Theta_0, or Theta_1 + accumulation
};

BoundCheck theorem_bound_static(const BoundInputs& in, const ProblemInstance& problem, const OracleSolution& oracle,
                                const GraphSnapshot& graph);
BoundCheck theorem_bound_tv(const BoundInputs& in, const ProblemInstance& problem, const OracleSolution& oracle);

// Summand of the accumulation bound: beta^{q_k} k^4.
double accumulation_summand(double beta, double q, std::size_t k);
// First k0 from which beta^{10 ln(k+1)} k^4 is decreasing; needs 10 |ln beta| > 4.
std::size_t summand_decrease_start(double beta, double c1 = 10.0);

}  // namespace dpda
