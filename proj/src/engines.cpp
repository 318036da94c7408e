#include "dpda/engines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace dpda {

std::string to_string(EngineKind kind) { return kind == EngineKind::DPDA ? "dpda" : "dpda_tv"; }

EngineKind engine_kind_from_string(const std::string& name) {
  if (name == "dpda") return EngineKind::DPDA;
  if (name == "dpda_tv") return EngineKind::DPDA_TV;
  throw std::invalid_argument("unknown engine: " + name);
}

std::size_t q_rounds(const QRule& rule, std::size_t k) {
  const double lk = std::log(static_cast<double>(k) + 1.0);
  double q = 0.0;
  if (rule.kind == QRule::Kind::Log) {
    q = rule.c1 * lk;
  } else {
    if (!(rule.beta > 0.0 && rule.beta < 1.0)) throw std::invalid_argument("q_rounds: beta must be in (0,1)");
    q = (5.0 + rule.c) * lk / std::log(1.0 / rule.beta);
  }
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(q)));
}

NonFiniteIterate::NonFiniteIterate(std::size_t k_, std::size_t agent_, const std::string& field_)
    : std::runtime_error("non-finite iterate at k=" + std::to_string(k_) + ", agent " + std::to_string(agent_) +
                         ", field " + field_),
      k(k_),
      agent(agent_),
      field(field_) {}

namespace {

Vector prox_agent(const AgentObjective& obj, const Vector& v, double tau) {
  return prox_l1_box(v, tau * obj.lasso_weight, obj.box_half_width);
}

Vector dual_step(const ConicConstraint& con, const Vector& theta, const Vector& point, double kappa) {
  if (con.rows() == 0) return theta;
  return project_polar(con.tag(), theta + kappa * (con.A * point - con.b));
}

Vector primal_force(const Agent& agent, const Vector& x, const Vector& theta) {
  Vector g = local_gradient(agent.objective, x);
  if (agent.constraint.rows() > 0) g.noalias() += agent.constraint.A.transpose() * theta;
  return g;
}

void check_finite(const Vector& v, std::size_t k, std::size_t i, const char* field) {
  if (!v.allFinite()) throw NonFiniteIterate(k, i, field);
}

}  // namespace

void dpda_step(std::vector<StaticAgentState>& agents, const ScheduleState& schedule, const ProblemInstance& problem,
               const GraphSnapshot& graph, double alpha, const MessageObserver& observer) {
  const std::size_t N = agents.size();
  if (graph.directed || graph.num_nodes != N || problem.num_agents() != N || schedule.kappa.size() != N)
    throw std::invalid_argument("dpda_step: schedule, graph and agent count disagree");

  const double eta = schedule.eta, gamma = schedule.gamma, tau = schedule.tau;
  for (std::size_t i = 0; i < N; ++i) {
    auto& a = agents[i];
    const Vector x_tilde = a.x_cur + eta * (a.x_cur - a.x_prev);
    a.theta = dual_step(problem.agent(i).constraint, a.theta, x_tilde, schedule.kappa[i]);
    a.s += gamma * x_tilde;
  }

  // One round: agent i receives (s_j^{k+1}, x_j^k) from every neighbor j.
  std::vector<Vector> next(N);
  for (std::size_t i = 0; i < N; ++i) {
    const auto& a = agents[i];
    Vector coupling = Vector::Zero(a.x_cur.size());
    for (std::size_t j : graph.neighbors[i]) {
      if (observer) observer(schedule.k, j, i);
      coupling += a.s - agents[j].s;
      if (alpha > 0.0) coupling += alpha * (a.x_cur - agents[j].x_cur);
    }
    const Vector v = a.x_cur - tau * (primal_force(problem.agent(i), a.x_cur, a.theta) + coupling);
    next[i] = prox_agent(problem.agent(i).objective, v, tau);
  }
  for (std::size_t i = 0; i < N; ++i) {
    agents[i].x_prev = std::move(agents[i].x_cur);
    agents[i].x_cur = std::move(next[i]);
  }
}

TvDiagnostics dpda_tv_step(std::vector<TvAgentState>& agents, const ScheduleState& schedule,
                           const ProblemInstance& problem, MixingSession& session, std::size_t q,
                           const TvStepOptions& opts) {
  const std::size_t N = agents.size();
  if (q < 1) throw std::invalid_argument("dpda_tv_step: q must be >= 1");
  if (problem.num_agents() != N || schedule.kappa.size() != N || session.sequence().base.num_nodes != N)
    throw std::invalid_argument("dpda_tv_step: schedule, network and agent count disagree");

  const double eta = schedule.eta, gamma = schedule.gamma, tau = schedule.tau;
  const double alpha = opts.alpha;
  const Eigen::Index n = problem.n();

  BlockVector omega(N), xi(N);
  for (std::size_t i = 0; i < N; ++i) {
    auto& a = agents[i];
    const Vector xi_tilde = a.xi_cur + eta * (a.xi_cur - a.xi_prev);
    a.theta = dual_step(problem.agent(i).constraint, a.theta, xi_tilde, schedule.kappa[i]);
    a.omega = a.nu / gamma + xi_tilde;
    omega[i] = a.omega;
    xi[i] = a.xi_cur;
  }

  BlockVector r_omega, r_xi;
  if (alpha > 0.0 && opts.joint_rounds) {
    BlockVector payload(N);
    for (std::size_t i = 0; i < N; ++i) {
      payload[i].resize(2 * n);
      payload[i] << omega[i], xi[i];
    }
    const BlockVector mixed = session.approx_average(payload, q);
    r_omega.resize(N);
    r_xi.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
      r_omega[i] = mixed[i].head(n);
      r_xi[i] = mixed[i].tail(n);
    }
  } else {
    r_omega = session.approx_average(omega, q);
    if (alpha > 0.0) r_xi = session.approx_average(xi, q);
  }

  const double radius = opts.ball_radius;
  auto clip = [radius](const Vector& v) { return std::isfinite(radius) ? project_ball(v, radius) : v; };

  std::vector<Vector> next(N);
  for (std::size_t i = 0; i < N; ++i) {
    auto& a = agents[i];
    a.nu = gamma * (a.omega - clip(r_omega[i]));
    Vector force = primal_force(problem.agent(i), a.xi_cur, a.theta) + a.nu;
    if (alpha > 0.0) force += alpha * (a.xi_cur - r_xi[i]);
    next[i] = prox_agent(problem.agent(i).objective, a.xi_cur - tau * force, tau);
  }

  TvDiagnostics diag;
  if (opts.diagnostics) {
    diag.valid = true;
    const Vector target = clip(exact_average(omega).front());
    const Vector xi_mean = alpha > 0.0 ? exact_average(xi).front() : Vector();
    double e1 = 0.0, e2 = 0.0, e3 = 0.0, nu = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const auto& a = agents[i];
      e1 += (target - clip(r_omega[i])).squaredNorm();
      nu += a.nu.squaredNorm();
      if (alpha > 0.0) {
        e2 += (xi_mean - r_xi[i]).squaredNorm();
        const Vector force = primal_force(problem.agent(i), a.xi_cur, a.theta) + a.nu + alpha * (a.xi_cur - xi_mean);
        const Vector exact = prox_agent(problem.agent(i).objective, a.xi_cur - tau * force, tau);
        e3 += (next[i] - exact).squaredNorm();
      }
    }
    diag.e1 = std::sqrt(e1);
    diag.e2 = std::sqrt(e2);
    diag.e3 = std::sqrt(e3);
    diag.nu_next = std::sqrt(nu);
  }

  for (std::size_t i = 0; i < N; ++i) {
    agents[i].xi_prev = std::move(agents[i].xi_cur);
    agents[i].xi_cur = std::move(next[i]);
  }
  return diag;
}

BlockVector ErgodicAccumulator::x_bar() const {
  BlockVector out = x_sum;
  for (auto& b : out) b /= weight;
  return out;
}

BlockVector ErgodicAccumulator::theta_bar() const {
  BlockVector out = theta_sum;
  for (auto& b : out) b /= weight;
  return out;
}

ErgodicAccumulator ergodic_update(ErgodicAccumulator acc, const BlockVector& x_new, const BlockVector& theta_new,
                                  double gamma_prev) {
  if (!(gamma_prev > 0.0)) throw std::invalid_argument("ergodic_update: gamma must be positive");
  if (acc.x_sum.empty()) {
    acc.x_sum = zeros_like(x_new);
    acc.theta_sum = zeros_like(theta_new);
  }
  for (std::size_t i = 0; i < x_new.size(); ++i) acc.x_sum[i] += gamma_prev * x_new[i];
  for (std::size_t i = 0; i < theta_new.size(); ++i) acc.theta_sum[i] += gamma_prev * theta_new[i];
  acc.weight += gamma_prev;
  return acc;
}

RunSetup prepare_run(const RunConfig& config, const ProblemInstance& problem, const GraphSequence& graphs) {
  const std::size_t N = problem.num_agents();
  if (graphs.base.num_nodes != N) throw std::invalid_argument("run: graph size differs from agent count");
  const bool is_static = config.engine == EngineKind::DPDA;
  if (is_static && graphs.kind != SequenceKind::Static)
    throw std::invalid_argument("run: DPDA needs a static graph");

  RunSetup setup;
  ScheduleConstants& c = setup.constants;
  for (const auto& a : problem.agents()) {
    c.lipschitz.push_back(a.objective.lipschitz);
    c.a_norm.push_back(a.constraint.a_norm);
  }
  const double L_max = problem.metadata().L_max;
  if (is_static) {
    c.degrees = graphs.base.degrees;
    const double d_max = static_cast<double>(graphs.base.max_degree());
    c.delta1 = config.delta1.value_or(d_max > 0.0 ? d_max : 1.0);
    c.delta2 = config.delta2.value_or(2.0 * L_max);
    setup.lambda2 = N > 1 ? lambda2_weighted(laplacian(graphs.base)) : 1.0;
  } else {
    c.delta1 = config.delta1.value_or(1.0);
    c.delta2 = config.delta2.value_or(1.0);
    setup.lambda2 = 1.0;
  }
  setup.params = choose_parameters(is_static ? NetworkMode::Static : NetworkMode::TimeVarying,
                                   problem.metadata().ubar_mu, problem.metadata().bar_mu, c.lipschitz,
                                   setup.lambda2, config.params);
  c.alpha = setup.params.alpha;
  c.mu = setup.params.mu;
  setup.schedule0 = is_static ? init_static(c, graphs.base) : init_tv(c);

  double box = 0.0;
  for (const auto& a : problem.agents())
    box = a.objective.box_half_width ? std::max(box, *a.objective.box_half_width)
                                     : std::numeric_limits<double>::infinity();
  setup.domain_diameter = 2.0 * box * std::sqrt(static_cast<double>(problem.n()));
  setup.ball_radius = 2.0 * setup.domain_diameter;
  return setup;
}

BlockVector initial_iterate(const RunConfig& config, const ProblemInstance& problem) {
  BlockVector x0 = make_blocks(problem.num_agents(), problem.n(), 0.0);
  if (config.init == InitKind::Gaussian) {
    std::mt19937_64 gen(config.init_seed);
    std::normal_distribution<double> gauss(0.0, config.init_scale);
    for (auto& b : x0)
      for (Eigen::Index j = 0; j < b.size(); ++j) b(j) = gauss(gen);
  }
  return x0;
}

std::vector<ScheduleState> schedule_history(const RunSetup& setup, ScheduleMode mode, std::size_t K) {
  std::vector<ScheduleState> hist;
  hist.reserve(K + 1);
  hist.push_back(mode == ScheduleMode::Accelerated ? setup.schedule0 : frozen_start(setup.schedule0));
  for (std::size_t k = 0; k < K; ++k)
    hist.push_back(mode == ScheduleMode::Accelerated ? advance(hist.back(), setup.constants.mu)
                                                     : advance_frozen(hist.back()));
  return hist;
}

MetricTrace run(const RunConfig& config, const ProblemInstance& problem, const GraphSequence& graphs,
                const OracleSolution& oracle) {
  const RunSetup setup = prepare_run(config, problem, graphs);
  const std::size_t N = problem.num_agents();
  const std::size_t K = config.iterations;
  const bool is_static = config.engine == EngineKind::DPDA;
  const bool accelerated = config.schedule_mode == ScheduleMode::Accelerated;
  if (oracle.theta_star.size() != N || oracle.x_star.size() != problem.n())
    throw std::invalid_argument("run: oracle does not match the instance");

  const BlockVector x0 = initial_iterate(config, problem);
  ScheduleState sched = accelerated ? setup.schedule0 : frozen_start(setup.schedule0);
  const double gamma0 = sched.gamma0;
  const double alpha = setup.constants.alpha;
  const double sqrtN_delta = std::sqrt(static_cast<double>(N)) * setup.domain_diameter;

  MetricTrace trace;
  trace.epsilon_oracle = epsilon_oracle(oracle);
  trace.theta0 = theta_initial(x0, oracle, gamma0, setup.schedule0.tau, setup.schedule0.kappa);
  trace.metadata = {{"engine", to_string(config.engine)},
                    {"schedule_mode", to_string(config.schedule_mode)},
                    {"iterations", K},
                    {"delta1", setup.constants.delta1},
                    {"delta2", setup.constants.delta2},
                    {"alpha", alpha},
                    {"mu", setup.constants.mu},
                    {"mu_alpha", setup.params.mu_alpha},
                    {"alpha_min", setup.params.alpha_min},
                    {"lambda2", setup.lambda2},
                    {"tau0", setup.schedule0.tau},
                    {"gamma0", gamma0},
                    {"oracle_kkt", oracle.kkt_residual}};
  if (!is_static) trace.metadata["mixing"] = to_string(config.mixing);

  std::set<std::size_t> log_at(config.log_points.begin(), config.log_points.end());
  log_at.insert(0);
  log_at.insert(K);
  if (config.cadence > 0)
    for (std::size_t k = config.cadence; k < K; k += config.cadence) log_at.insert(k);

  std::vector<StaticAgentState> static_agents;
  std::vector<TvAgentState> tv_agents;
  std::optional<MixingSession> session;
  for (std::size_t i = 0; i < N; ++i) {
    const Vector theta0 = Vector::Zero(problem.agent(i).constraint.rows());
    if (is_static)
      static_agents.push_back({x0[i], x0[i], theta0, Vector::Zero(problem.n())});
    else
      tv_agents.push_back({x0[i], x0[i], theta0, Vector::Zero(problem.n()), Vector::Zero(problem.n())});
  }
  if (!is_static) session.emplace(graphs, config.mixing);

  auto current_x = [&]() {
    BlockVector x(N);
    for (std::size_t i = 0; i < N; ++i) x[i] = is_static ? static_agents[i].x_cur : tv_agents[i].xi_cur;
    return x;
  };
  auto current_theta = [&]() {
    BlockVector t(N);
    for (std::size_t i = 0; i < N; ++i) t[i] = is_static ? static_agents[i].theta : tv_agents[i].theta;
    return t;
  };

  ErgodicAccumulator acc;
  double accumulation = 0.0;
  const bool has_ref = oracle.x_star.norm() > 0.0;

  auto record = [&](std::size_t k) {
    MetricRow row;
    row.k = k;
    row.t_k = is_static ? k : session->clock();
    row.N_K = sched.N_K_accum;
    row.accumulation = accumulation;
    const BlockVector x = current_x();
    const BlockVector x_bar = k == 0 ? x : acc.x_bar();
    row.consensus_violation = consensus_violation(x);
    row.infeasibility = infeasibility(x_bar, problem);
    if (has_ref) {
      row.relative_error_last = relative_error(x, oracle.x_star);
      row.relative_error_ergodic = relative_error(x_bar, oracle.x_star);
    }
    row.suboptimality = suboptimality(x_bar, problem, oracle, alpha,
                                      is_static ? Regularizer::Laplacian : Regularizer::ConsensusDistance,
                                      is_static ? &graphs.base : nullptr);
    if (k > 0) {
      BoundInputs in{x_bar, x, sched.N_K_accum, gamma0, sched.gamma, sched.tau_tilde, alpha,
                     trace.theta0 + (is_static ? 0.0 : accumulation)};
      const BoundCheck b = is_static ? theorem_bound_static(in, problem, oracle, graphs.base)
                                     : theorem_bound_tv(in, problem, oracle);
      row.bound_lhs = b.lhs;
      row.theorem_bound = b.rhs;
      row.iterate_error_sq = b.iterate_error_sq;
      row.iterate_bound = b.iterate_bound;
      row.lower_bound_value = b.lower_bound_value;
    }
    trace.rows.push_back(row);
  };

  record(0);
  TvStepOptions tv_opts{alpha, setup.ball_radius, config.joint_rounds, config.diagnostics};
  for (std::size_t k = 0; k < K; ++k) {
    const double gamma_k = sched.gamma;
    if (is_static) {
      dpda_step(static_agents, sched, problem, graphs.base, alpha);
      for (std::size_t i = 0; i < N; ++i) {
        check_finite(static_agents[i].x_cur, k + 1, i, "x");
        check_finite(static_agents[i].theta, k + 1, i, "theta");
        check_finite(static_agents[i].s, k + 1, i, "s");
      }
    } else {
      const TvDiagnostics d = dpda_tv_step(tv_agents, sched, problem, *session, q_rounds(config.q_rule, k), tv_opts);
      for (std::size_t i = 0; i < N; ++i) {
        check_finite(tv_agents[i].xi_cur, k + 1, i, "xi");
        check_finite(tv_agents[i].theta, k + 1, i, "theta");
        check_finite(tv_agents[i].nu, k + 1, i, "nu");
      }
      if (d.valid) {
        const double e1_part = d.e1 * (4.0 * gamma_k * sqrtN_delta + 1.0 + d.nu_next);
        const double e2_part = d.e3 > 0.0 ? d.e3 * (2.0 * sqrtN_delta / sched.tau + alpha * d.e2) : 0.0;
        accumulation += gamma_k / gamma0 * (e1_part + e2_part);
      }
    }
    acc = ergodic_update(std::move(acc), current_x(), current_theta(), gamma_k);
    sched = accelerated ? advance(sched, setup.constants.mu) : advance_frozen(sched);
    if (log_at.count(k + 1)) record(k + 1);
  }
  return trace;
}

}  // namespace dpda
