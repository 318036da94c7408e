#include "dpda/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dpda/mixing.hpp"

namespace dpda {

const MetricRow& MetricTrace::at_k(std::size_t k) const {
  for (const auto& r : rows)
    if (r.k == k) return r;
  throw std::out_of_range("trace has no row for k=" + std::to_string(k));
}

std::vector<std::string> trace_columns() {
  return {"k",           "t_k",          "suboptimality",    "infeasibility", "consensus_violation",
          "relative_error_last", "relative_error_ergodic", "theorem_bound", "N_K",
          "bound_lhs",   "iterate_error_sq", "iterate_bound", "lower_bound_value", "accumulation"};
}

namespace {

std::vector<double> row_values(const MetricRow& r) {
  return {r.suboptimality,       r.infeasibility,  r.consensus_violation, r.relative_error_last,
          r.relative_error_ergodic, r.theorem_bound, r.N_K,                 r.bound_lhs,
          r.iterate_error_sq,    r.iterate_bound,  r.lower_bound_value,   r.accumulation};
}

}  // namespace

std::string trace_csv(const MetricTrace& trace) {
  std::ostringstream os;
  os.precision(17);
  const auto cols = trace_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
  os << '\n';
  for (const auto& r : trace.rows) {
    os << r.k << ',' << r.t_k;
    for (double v : row_values(r)) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

nlohmann::json to_json(const MetricTrace& trace) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : trace.rows) {
    const auto vals = row_values(r);
    const auto cols = trace_columns();
    nlohmann::json row = {{"k", r.k}, {"t_k", r.t_k}};
    for (std::size_t c = 0; c < vals.size(); ++c) row[cols[c + 2]] = num(vals[c]);
    rows.push_back(std::move(row));
  }
  return {{"rows", rows},
          {"epsilon_oracle", trace.epsilon_oracle},
          {"theta0", trace.theta0},
          {"metadata", trace.metadata}};
}

double relative_error(const BlockVector& xs, const Vector& x_star) {
  const double ref = x_star.norm();
  if (!(ref > 0.0)) throw std::invalid_argument("relative_error: oracle solution has zero norm");
  double worst = 0.0;
  for (const auto& x : xs) worst = std::max(worst, (x - x_star).norm());
  return worst / ref;
}

double infeasibility(const BlockVector& xs, const ProblemInstance& problem) {
  if (xs.size() != problem.num_agents()) throw std::invalid_argument("infeasibility: agent count mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto& c = problem.agent(i).constraint;
    if (c.rows() == 0) continue;
    worst = std::max(worst, distance_to_cone(c.tag(), c.A * xs[i] - c.b));
  }
  return worst;
}

double consensus_violation(const BlockVector& xs) {
  const BlockVector avg = exact_average(xs);
  double worst = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) worst = std::max(worst, (xs[i] - avg[i]).norm());
  return worst;
}

double consensus_distance(const BlockVector& xs) {
  const BlockVector avg = exact_average(xs);
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (xs[i] - avg[i]).squaredNorm();
  return std::sqrt(s);
}

double edge_disagreement(const BlockVector& xs, const GraphSnapshot& g) {
  double s = 0.0;
  for (const auto& [a, b] : g.edges) s += (xs[a] - xs[b]).squaredNorm();
  return std::sqrt(s);
}

double regularized_objective(const BlockVector& xs, const ProblemInstance& problem, double alpha, Regularizer reg,
                             const GraphSnapshot* graph) {
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) total += local_objective(problem.agent(i).objective, xs[i]);
  if (alpha > 0.0) {
    if (reg == Regularizer::Laplacian) {
      if (!graph) throw std::invalid_argument("regularized_objective: Laplacian term needs the graph");
      const double e = edge_disagreement(xs, *graph);
      total += 0.5 * alpha * e * e;
    } else {
      const double d = consensus_distance(xs);
      total += 0.5 * alpha * d * d;
    }
  }
  return total;
}

double suboptimality(const BlockVector& x_bar, const ProblemInstance& problem, const OracleSolution& oracle,
                     double alpha, Regularizer reg, const GraphSnapshot* graph) {
  const double phi_star = central_objective(problem, oracle.x_star);
  return std::abs(regularized_objective(x_bar, problem, alpha, reg, graph) - phi_star);
}

double epsilon_oracle(const OracleSolution& oracle) {
  return 10.0 * oracle.kkt_residual * (1.0 + norm(oracle.theta_star));
}

double theta_initial(const BlockVector& x0, const OracleSolution& oracle, double gamma0, double tau0,
                     const std::vector<double>& kappa0) {
  double t = 1.0 / (2.0 * gamma0);
  for (std::size_t i = 0; i < x0.size(); ++i) {
    t += (x0[i] - oracle.x_star).squaredNorm() / (2.0 * tau0);
    if (oracle.theta_star[i].size() > 0) t += 2.0 * oracle.theta_star[i].squaredNorm() / kappa0[i];
  }
  return t;
}

namespace {

double weighted_cone_distance(const BlockVector& x_bar, const ProblemInstance& problem, const OracleSolution& oracle) {
  double s = 0.0;
  for (std::size_t i = 0; i < x_bar.size(); ++i) {
    const auto& c = problem.agent(i).constraint;
    if (c.rows() == 0) continue;
    s += oracle.theta_star[i].norm() * distance_to_cone(c.tag(), c.A * x_bar[i] - c.b);
  }
  return s;
}

BoundCheck finish_bound(const BoundInputs& in, const ProblemInstance& problem, const OracleSolution& oracle,
                        double objective_gap, double consensus_term) {
  BoundCheck b;
  const double cone_term = weighted_cone_distance(in.x_bar, problem, oracle);
  b.lhs = std::max(std::abs(objective_gap), consensus_term + cone_term);
  b.rhs = in.theta_budget / in.N_K;
  b.lower_bound_value = objective_gap + cone_term;
  for (const auto& x : in.x_last) b.iterate_error_sq += (x - oracle.x_star).squaredNorm();
  b.iterate_bound = in.tau_tilde_K / in.gamma_K * 2.0 * in.gamma0 * in.theta_budget;
  return b;
}

}  // namespace

BoundCheck theorem_bound_static(const BoundInputs& in, const ProblemInstance& problem, const OracleSolution& oracle,
                                const GraphSnapshot& graph) {
  if (!(in.N_K > 0.0)) throw std::invalid_argument("theorem_bound_static: need K >= 1");
  const double gap = regularized_objective(in.x_bar, problem, in.alpha, Regularizer::Laplacian, &graph) -
                     central_objective(problem, oracle.x_star);
  return finish_bound(in, problem, oracle, gap, edge_disagreement(in.x_bar, graph));
}

BoundCheck theorem_bound_tv(const BoundInputs& in, const ProblemInstance& problem, const OracleSolution& oracle) {
  if (!(in.N_K > 0.0)) throw std::invalid_argument("theorem_bound_tv: need K >= 1");
  const double gap = regularized_objective(in.x_bar, problem, in.alpha, Regularizer::ConsensusDistance, nullptr) -
                     central_objective(problem, oracle.x_star);
  return finish_bound(in, problem, oracle, gap, consensus_distance(in.x_bar));
}

double accumulation_summand(double beta, double q, std::size_t k) {
  if (k == 0 || beta <= 0.0) return 0.0;
  return std::exp(q * std::log(beta) + 4.0 * std::log(static_cast<double>(k)));
}

std::size_t summand_decrease_start(double beta, double c1) {
  // d/dk [c1 ln(k+1) ln(beta) + 4 ln k] = c1 ln(beta)/(k+1) + 4/k < 0
  // iff k > 4 / (-c1 ln(beta) - 4).
  const double rate = -c1 * std::log(beta);
  if (!(rate > 4.0)) throw std::invalid_argument("summand_decrease_start: beta^{c1 ln(k+1)} k^4 never decreases");
  return static_cast<std::size_t>(std::floor(4.0 / (rate - 4.0))) + 1;
}

}  // namespace dpda
