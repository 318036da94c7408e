#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "dpda/cones_prox.hpp"
#include "dpda/linalg.hpp"

namespace dpda {

// f_i(x) = 0.5 ||C x - d||^2,  rho_i(x) = lasso_weight ||x||_1 + box indicator.
struct AgentObjective {
  Matrix C;
  Vector d;
  double lasso_weight = 0.0;
  std::optional<double> box_half_width;
  double lipschitz = 0.0;         // L_i = sigma_max(C)^2
  double strong_convexity = 0.0;  // mu_i = sigma_min(C)^2, 0 when rank deficient

  Eigen::Index dim() const { return C.cols(); }
};

AgentObjective make_objective(Matrix C, Vector d, double lasso_weight,
                              std::optional<double> box_half_width = std::nullopt);

// A x - b in K.
struct ConicConstraint {
  Matrix A;
  Vector b;
  ConeKind cone_kind = ConeKind::NonpositiveOrthant;
  double a_norm = 0.0;  // spectral norm of A, cached

  Eigen::Index rows() const { return A.rows(); }
  ConeTag tag() const { return {cone_kind, A.rows()}; }
};

ConicConstraint make_constraint(Matrix A, Vector b, ConeKind kind);

// A constraint with no rows, for unconstrained agents.
ConicConstraint empty_constraint(Eigen::Index n);

struct Agent {
  AgentObjective objective;
  ConicConstraint constraint;
};

struct InstanceMetadata {
  double L_max = 0.0;
  double ubar_mu = 0.0;  // min_i mu_i
  double bar_mu = 0.0;   // lambda_min(sum_i C_i^T C_i)
};

class InvalidInstance : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ProblemInstance {
 public:
  // Throws InvalidInstance on dimension mismatch or when the sum objective is
  // not strongly convex.
  ProblemInstance(std::vector<Agent> agents, std::optional<Vector> planted_x_star = std::nullopt,
                  std::uint64_t seed = 0);

  const std::vector<Agent>& agents() const { return agents_; }
  const Agent& agent(std::size_t i) const { return agents_.at(i); }
  std::size_t num_agents() const { return agents_.size(); }
  Eigen::Index n() const { return n_; }
  const InstanceMetadata& metadata() const { return metadata_; }
  const std::optional<Vector>& planted_x_star() const { return planted_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::vector<Agent> agents_;
  Eigen::Index n_ = 0;
  InstanceMetadata metadata_;
  std::optional<Vector> planted_;
  std::uint64_t seed_ = 0;
};

struct ClassoParams {
  Eigen::Index n = 20;
  Eigen::Index m_obs = 22;
  std::size_t num_agents = 10;
  // Global l1 weight; each agent receives lasso_weight / num_agents.
  double lasso_weight = 0.05;
  double noise_std = 1e-3;
  double box_half_width = 20.0;
  std::uint64_t seed = 0;
};

// Isotonic constrained-LASSO instance: Gaussian C_i with singular values
// resampled uniformly from [1, 3], planted ascending x*, and the (n-1) x n
// difference constraint A x <= 0 at every agent.
ProblemInstance generate_classo(const ClassoParams& params);

// The (n-1) x n matrix with A(l,l) = 1, A(l,l+1) = -1.
Matrix isotonic_matrix(Eigen::Index n);

Vector local_gradient(const AgentObjective& agent, const Vector& x);
double smooth_value(const AgentObjective& agent, const Vector& x);
// rho_i(x); +inf outside the domain box.
double nonsmooth_value(const AgentObjective& agent, const Vector& x);
// phi_i(x) = rho_i(x) + f_i(x).
double local_objective(const AgentObjective& agent, const Vector& x);

// sum_i phi_i(x) evaluated at a common point.
double central_objective(const ProblemInstance& instance, const Vector& x);

double compute_bar_mu(const ProblemInstance& instance);

nlohmann::json to_json(const ProblemInstance& instance);
ProblemInstance instance_from_json(const nlohmann::json& j);

}  // namespace dpda
