#include "dpda/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dpda {

double KktResidual::max() const {
  return std::max({stationarity, primal_feasibility, dual_feasibility, complementarity});
}

namespace {

struct CentralData {
  Matrix gram;       // sum_i C_i^T C_i
  Vector linear;     // sum_i C_i^T d_i
  double lasso = 0;  // sum_i lasso weights
  std::optional<double> box;
};

CentralData central_data(const ProblemInstance& inst) {
  CentralData c{Matrix::Zero(inst.n(), inst.n()), Vector::Zero(inst.n()), 0.0, std::nullopt};
  for (const auto& a : inst.agents()) {
    c.gram.noalias() += a.objective.C.transpose() * a.objective.C;
    c.linear.noalias() += a.objective.C.transpose() * a.objective.d;
    c.lasso += a.objective.lasso_weight;
    if (a.objective.box_half_width)
      c.box = c.box ? std::min(*c.box, *a.objective.box_half_width) : *a.objective.box_half_width;
  }
  return c;
}

KktResidual residual_with(const ProblemInstance& inst, const CentralData& c, const Vector& x,
                          const BlockVector& theta) {
  KktResidual r;
  Vector grad = c.gram * x - c.linear;
  for (std::size_t i = 0; i < inst.num_agents(); ++i) {
    const auto& con = inst.agent(i).constraint;
    if (con.rows() == 0) continue;
    grad.noalias() += con.A.transpose() * theta[i];
    const Vector slack = con.A * x - con.b;
    const ConeTag tag = con.tag();
    r.primal_feasibility =
        std::max(r.primal_feasibility, (slack - project_cone(tag, slack)).lpNorm<Eigen::Infinity>());
    r.dual_feasibility =
        std::max(r.dual_feasibility, (theta[i] - project_polar(tag, theta[i])).lpNorm<Eigen::Infinity>());
    r.complementarity = std::max(r.complementarity, std::abs(theta[i].dot(slack)));
  }
  r.stationarity = (x - prox_l1_box(x - grad, c.lasso, c.box)).lpNorm<Eigen::Infinity>();
  return r;
}

}  // namespace

KktResidual kkt_residual(const ProblemInstance& instance, const Vector& x, const BlockVector& theta) {
  if (theta.size() != instance.num_agents())
    throw std::invalid_argument("kkt_residual: one dual block per agent expected");
  return residual_with(instance, central_data(instance), x, theta);
}

OracleSolution solve_centralized(const ProblemInstance& instance, double tol, int max_iters) {
  OracleOptions opts;
  opts.tol = tol;
  opts.max_iters = max_iters;
  return solve_centralized(instance, opts);
}

OracleSolution solve_centralized(const ProblemInstance& inst, const OracleOptions& opts) {
  if (!(opts.tol > 0.0)) throw std::invalid_argument("solve_centralized: tol must be positive");
  const CentralData c = central_data(inst);
  const std::size_t N = inst.num_agents();
  const Eigen::Index n = inst.n();

  Eigen::Index total_rows = 0;
  for (const auto& a : inst.agents()) total_rows += a.constraint.rows();
  Matrix stacked(total_rows, n);
  {
    Eigen::Index r = 0;
    for (const auto& a : inst.agents()) {
      stacked.middleRows(r, a.constraint.rows()) = a.constraint.A;
      r += a.constraint.rows();
    }
  }
  const double a_norm = spectral_norm(stacked);

  const double L = max_eigenvalue(c.gram);
  const double mu = min_eigenvalue(c.gram);
  // Single-node instance of the distributed schedule with delta1 = 1,
  // delta2 = L: tau0 = 1/(2L), kappa0 = L / ||A||^2.
  const double delta2 = L;
  const double tau0 = 1.0 / (L + delta2);
  const double kappa0 = a_norm > 0.0 ? delta2 / (a_norm * a_norm) : 0.0;

  Vector x = Vector::Zero(n);
  if (c.box) x = x.cwiseMax(-*c.box).cwiseMin(*c.box);
  BlockVector theta(N);
  for (std::size_t i = 0; i < N; ++i) theta[i] = Vector::Zero(inst.agent(i).constraint.rows());

  OracleSolution best;
  best.x_star = x;
  best.theta_star = theta;
  best.kkt_residual = residual_with(inst, c, x, theta).max();

  int it = 0;
  double restart_ref = best.kkt_residual;
  while (it < opts.max_iters && best.kkt_residual > opts.tol) {
    // Fresh accelerated schedule from the current iterate.
    double tau = tau0;
    double tau_tilde = 1.0 / (1.0 / tau0 - mu);
    double eta = 0.0;
    double kappa = kappa0;
    Vector x_prev = x;
    for (int local = 1; local <= opts.max_restart_period && it < opts.max_iters; ++local, ++it) {
      const Vector x_bar = x + eta * (x - x_prev);
      Vector grad = c.gram * x - c.linear;
      for (std::size_t i = 0; i < N; ++i) {
        const auto& con = inst.agent(i).constraint;
        if (con.rows() == 0) continue;
        theta[i] = project_polar(con.tag(), theta[i] + kappa * (con.A * x_bar - con.b));
        grad.noalias() += con.A.transpose() * theta[i];
      }
      x_prev = x;
      x = prox_l1_box(x - tau * grad, tau * c.lasso, c.box);

      eta = 1.0 / std::sqrt(1.0 + mu * tau_tilde);
      tau_tilde *= eta;
      tau = 1.0 / (1.0 / tau_tilde + mu);
      kappa /= eta;

      if (local % opts.check_every == 0) {
        const double res = residual_with(inst, c, x, theta).max();
        if (res < best.kkt_residual) {
          best.kkt_residual = res;
          best.x_star = x;
          best.theta_star = theta;
        }
        if (res <= opts.tol) {
          ++it;
          break;
        }
        if (res <= opts.restart_factor * restart_ref) {
          restart_ref = res;
          ++it;
          break;
        }
      }
    }
    restart_ref = std::min(restart_ref, residual_with(inst, c, x, theta).max());
  }

  best.iterations_used = it;
  best.converged = best.kkt_residual <= opts.tol;
  double gap = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const auto& con = inst.agent(i).constraint;
    if (con.rows() == 0) continue;
    gap += best.theta_star[i].dot(con.A * best.x_star - con.b);
  }
  best.gap = std::abs(gap);
  return best;
}

nlohmann::json to_json(const OracleSolution& sol) {
  nlohmann::json thetas = nlohmann::json::array();
  for (const auto& t : sol.theta_star) thetas.push_back(std::vector<double>(t.data(), t.data() + t.size()));
  return {{"x_star", std::vector<double>(sol.x_star.data(), sol.x_star.data() + sol.x_star.size())},
          {"theta_star", thetas},
          {"gap", sol.gap},
          {"iterations_used", sol.iterations_used},
          {"kkt_residual", sol.kkt_residual},
          {"converged", sol.converged}};
}

OracleSolution oracle_from_json(const nlohmann::json& j) {
  auto to_vec = [](const nlohmann::json& a) {
    const auto d = a.get<std::vector<double>>();
    return Vector(Eigen::Map<const Vector>(d.data(), static_cast<Eigen::Index>(d.size())));
  };
  OracleSolution s;
  s.x_star = to_vec(j.at("x_star"));
  for (const auto& t : j.at("theta_star")) s.theta_star.push_back(to_vec(t));
  s.gap = j.at("gap").get<double>();
  s.iterations_used = j.at("iterations_used").get<int>();
  s.kkt_residual = j.at("kkt_residual").get<double>();
  s.converged = j.at("converged").get<bool>();
  return s;
}

}  // namespace dpda
