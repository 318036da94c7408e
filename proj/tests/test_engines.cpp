#include <doctest.h>

#include "dpda/scenario.hpp"
#include "reference.hpp"

using namespace dpda;

namespace {

std::vector<StaticAgentState> static_start(const ProblemInstance& p, const BlockVector& x0) {
  std::vector<StaticAgentState> out;
  for (std::size_t i = 0; i < p.num_agents(); ++i)
    out.push_back({x0[i], x0[i], Vector::Zero(p.agent(i).constraint.rows()), Vector::Zero(p.n())});
  return out;
}

std::vector<TvAgentState> tv_start(const ProblemInstance& p, const BlockVector& x0) {
  std::vector<TvAgentState> out;
  for (std::size_t i = 0; i < p.num_agents(); ++i)
    out.push_back({x0[i], x0[i], Vector::Zero(p.agent(i).constraint.rows()), Vector::Zero(p.n()), Vector::Zero(p.n())});
  return out;
}

Vector stacked_x(const std::vector<StaticAgentState>& a) {
  BlockVector b;
  for (const auto& s : a) b.push_back(s.x_cur);
  return ref::stack(b);
}

GraphSequence static_seq(const GraphSnapshot& g) { return GraphSequence{g, 1, 1.0, 0, SequenceKind::Static}; }

BlockVector random_start(std::uint64_t seed, std::size_t N, Eigen::Index n) {
  std::mt19937_64 gen(seed);
  BlockVector x(N);
  for (auto& b : x) b = ref::random_vector(gen, n);
  return x;
}

ScheduleState fixed_schedule(double tau, double gamma, std::size_t N, std::size_t k = 0) {
  ScheduleState s;
  s.tau = tau;
  s.tau_tilde = tau;
  s.gamma = gamma;
  s.gamma0 = gamma;
  s.eta = 1.0;
  s.kappa.assign(N, gamma);
  s.kappa_over_gamma.assign(N, 1.0);
  s.k = k;
  return s;
}

}  // namespace

TEST_CASE("q_rounds") {
  QRule log_rule;
  CHECK(q_rounds(log_rule, 0) == 1);
  CHECK(q_rounds(log_rule, 1) == 7);  // ceil(10 ln 2)
  CHECK(q_rounds(log_rule, 4999) == static_cast<std::size_t>(std::ceil(10.0 * std::log(5000.0))));
  QRule th{QRule::Kind::Theorem2, 10.0, 1.0, 0.5};
  CHECK(q_rounds(th, 1) == static_cast<std::size_t>(std::ceil(6.0 * std::log(2.0) / std::log(2.0))));
  th.beta = 1.0;
  CHECK_THROWS(q_rounds(th, 3));
}

TEST_CASE("single agent without constraints is a gradient step") {
  const Vector c = ref::vec({1.0, -2.0, 0.5});
  const ProblemInstance p({Agent{make_objective(Matrix::Identity(3, 3), c, 0.0), empty_constraint(3)}});
  const GraphSnapshot g = make_undirected(1, {});
  RunConfig cfg;
  const RunSetup setup = prepare_run(cfg, p, static_seq(g));
  const BlockVector x0{ref::vec({4.0, 4.0, -1.0})};
  auto agents = static_start(p, x0);
  dpda_step(agents, setup.schedule0, p, g, 0.0);
  const Vector expected = x0[0] - setup.schedule0.tau * (x0[0] - c);
  CHECK((agents[0].x_cur - expected).norm() < 1e-15);
  CHECK(agents[0].theta.size() == 0);
}

TEST_CASE("two agents with vanishing objectives reach consensus at the initial mean") {
  // f_i = 0 is not strongly convex, so the objectives are scaled to 1e-8 ||x||^2.
  const double eps = 1e-4;
  std::vector<Agent> agents;
  for (int i = 0; i < 2; ++i)
    agents.push_back({make_objective(eps * Matrix::Identity(2, 2), Vector::Zero(2), 0.0), empty_constraint(2)});
  const ProblemInstance p(std::move(agents));
  const GraphSnapshot g = make_undirected(2, {{0, 1}});
  const BlockVector x0{ref::vec({3.0, -1.0}), ref::vec({1.0, 5.0})};
  const std::size_t K = 3000;
  std::vector<ScheduleState> hist;
  for (std::size_t k = 0; k <= K; ++k) hist.push_back(fixed_schedule(0.25, 1.0, 2, k));
  auto state = static_start(p, x0);
  for (std::size_t k = 0; k < K; ++k) dpda_step(state, hist[k], p, g, 0.0);
  // Closed-form linear recursion on the stacked vector.
  const auto dense = ref::lambda_form_dpda(p, g, hist, 0.0, x0, K);
  CHECK((stacked_x(state) - dense.back()).norm() < 1e-12);
  const Vector mean = 0.5 * (x0[0] + x0[1]);
  for (const auto& a : state) CHECK((a.x_cur - mean).norm() < 1e-3);
}

TEST_CASE("static engine matches the explicit edge-dual form") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const ProblemInstance p = ref::small_instance(seed, 5, 4, 3, true, 0.05, 2.0);
    const GraphSnapshot g = generate_small_world(5, 7, seed);
    RunConfig cfg;
    const RunSetup setup = prepare_run(cfg, p, static_seq(g));
    REQUIRE(setup.constants.alpha > 0.0);  // rank-deficient C_i
    const auto hist = schedule_history(setup, ScheduleMode::Accelerated, 100);
    const BlockVector x0 = random_start(seed, 5, 4);
    const auto dense = ref::lambda_form_dpda(p, g, hist, setup.constants.alpha, x0, 100);
    auto agents = static_start(p, x0);
    const Matrix Omega = ref::kron_identity(laplacian(g), 4);
    for (std::size_t k = 0; k < 100; ++k) {
      dpda_step(agents, hist[k], p, g, setup.constants.alpha);
      CHECK((stacked_x(agents) - dense[k + 1]).norm() < 1e-12 * (1.0 + dense[k + 1].norm()));
      BlockVector s;
      for (const auto& a : agents) s.push_back(a.s);
      const Vector S = ref::stack(s);
      // Neighbor-sum consensus force equals the dense Laplacian product.
      Vector force(S.size());
      for (std::size_t i = 0; i < 5; ++i) {
        Vector f = Vector::Zero(4);
        for (std::size_t j : g.neighbors[i]) f += s[i] - s[j];
        force.segment(static_cast<Eigen::Index>(i) * 4, 4) = f;
      }
      CHECK((force - Omega * S).norm() <= 1e-12 * (1.0 + S.norm()));
      for (std::size_t i = 0; i < 5; ++i) {
        const auto& con = p.agent(i).constraint;
        CHECK(distance_to_polar(con.tag(), agents[i].theta) == 0.0);
      }
    }
  }
}

TEST_CASE("static engine only reads neighbor messages") {
  const ProblemInstance p = ref::small_instance(4, 8, 3, 4, true);
  const GraphSnapshot g = generate_small_world(8, 12, 4);
  RunConfig cfg;
  const RunSetup setup = prepare_run(cfg, p, static_seq(g));
  auto agents = static_start(p, random_start(4, 8, 3));
  auto hist = schedule_history(setup, ScheduleMode::Accelerated, 20);
  std::size_t messages = 0, foreign = 0;
  MessageObserver spy = [&](std::uint64_t, std::size_t from, std::size_t to) {
    ++messages;
    const auto& nb = g.neighbors[to];
    if (std::find(nb.begin(), nb.end(), from) == nb.end()) ++foreign;
  };
  for (std::size_t k = 0; k < 20; ++k) dpda_step(agents, hist[k], p, g, setup.constants.alpha, spy);
  CHECK(foreign == 0);
  CHECK(messages == 20 * 2 * g.edges.size());
}

TEST_CASE("time-varying engine with exact mixing equals the idealized recursion") {
  const ProblemInstance p = ref::small_instance(11, 5, 3, 5, true, 0.05, 3.0);
  REQUIRE(p.metadata().ubar_mu > 0.0);
  GraphSequence seq{generate_small_world(5, 8, 11), 5, 0.8, 3, SequenceKind::TimeVaryingUndirected};
  RunConfig cfg;
  cfg.engine = EngineKind::DPDA_TV;
  cfg.mixing = MixingMode::Exact;
  const RunSetup setup = prepare_run(cfg, p, seq);
  REQUIRE(setup.constants.alpha == 0.0);
  const auto hist = schedule_history(setup, ScheduleMode::Accelerated, 50);
  const BlockVector x0 = random_start(11, 5, 3);
  for (double radius : {setup.ball_radius, 0.5}) {
    const auto ideal = ref::idealized_tv(p, hist, 0.0, radius, x0, 50);
    MixingSession session(seq, MixingMode::Exact);
    auto agents = tv_start(p, x0);
    double worst = 0.0;
    for (std::size_t k = 0; k < 50; ++k) {
      const TvDiagnostics d = dpda_tv_step(agents, hist[k], p, session, 3, {0.0, radius, true, true});
      BlockVector xi;
      for (const auto& a : agents) xi.push_back(a.xi_cur);
      worst = std::max(worst, (ref::stack(xi) - ideal[k + 1]).norm());
      CHECK(d.e1 < 1e-13);
      CHECK(d.e3 == 0.0);
    }
    CHECK(worst < 1e-12);
    CHECK(session.clock() == 150);
  }
}

TEST_CASE("time-varying engine with one agent reduces to single-agent primal-dual") {
  const ProblemInstance p = ref::small_instance(5, 1, 3, 6, true, 0.1, 5.0);
  GraphSequence seq{make_undirected(1, {}), 5, 0.8, 1, SequenceKind::TimeVaryingUndirected};
  RunConfig cfg;
  cfg.engine = EngineKind::DPDA_TV;
  const RunSetup setup = prepare_run(cfg, p, seq);
  const auto hist = schedule_history(setup, ScheduleMode::Accelerated, 60);
  const BlockVector x0 = random_start(5, 1, 3);
  MixingSession session(seq, MixingMode::MetropolisUndirected);
  auto tv = tv_start(p, x0);
  auto st = static_start(p, x0);
  const GraphSnapshot lone = make_undirected(1, {});
  for (std::size_t k = 0; k < 60; ++k) {
    dpda_tv_step(tv, hist[k], p, session, 4, {0.0, setup.ball_radius, true, false});
    dpda_step(st, hist[k], p, lone, 0.0);
    CHECK(tv[0].nu.norm() == 0.0);
    CHECK((tv[0].xi_cur - st[0].x_cur).norm() < 1e-14);
  }
}

TEST_CASE("ergodic_update") {
  std::mt19937_64 gen(1);
  ErgodicAccumulator acc;
  const BlockVector x1{ref::vec({1, 2})};
  acc = ergodic_update(acc, x1, {ref::vec({3})}, 0.7);
  CHECK((acc.x_bar()[0] - x1[0]).norm() < 1e-15);
  CHECK((acc.theta_bar()[0] - ref::vec({3})).norm() < 1e-15);

  ErgodicAccumulator flat;
  Vector sum = Vector::Zero(2);
  for (int k = 0; k < 10; ++k) {
    const Vector v = ref::random_vector(gen, 2);
    sum += v;
    flat = ergodic_update(flat, {v}, {}, 2.0);
  }
  CHECK((flat.x_bar()[0] - sum / 10.0).norm() < 1e-14);
  CHECK_THROWS(ergodic_update(flat, {sum}, {}, 0.0));

  // Weighted sum against a stored-history recomputation.
  const ProblemInstance p = ref::small_instance(7, 4, 3, 4, true);
  const GraphSnapshot g = generate_small_world(4, 5, 7);
  RunConfig cfg;
  const RunSetup setup = prepare_run(cfg, p, static_seq(g));
  const auto hist = schedule_history(setup, ScheduleMode::Accelerated, 1000);
  auto agents = static_start(p, random_start(7, 4, 3));
  ErgodicAccumulator run_acc;
  std::vector<Vector> xs;
  for (std::size_t k = 0; k < 1000; ++k) {
    dpda_step(agents, hist[k], p, g, setup.constants.alpha);
    BlockVector x, th;
    for (const auto& a : agents) {
      x.push_back(a.x_cur);
      th.push_back(a.theta);
    }
    xs.push_back(ref::stack(x));
    run_acc = ergodic_update(run_acc, x, th, hist[k].gamma);
  }
  Vector num = Vector::Zero(xs[0].size());
  double den = 0.0;
  for (std::size_t k = 0; k < 1000; ++k) {
    num += hist[k].gamma * xs[k];
    den += hist[k].gamma;
  }
  CHECK((ref::stack(run_acc.x_bar()) - num / den).norm() < 1e-12 * (1.0 + num.norm() / den));
  CHECK(std::abs(run_acc.weight / hist[0].gamma - hist[1000].N_K_accum) < 1e-9 * hist[1000].N_K_accum);
}

TEST_CASE("run: trace shape, determinism and guards") {
  const ScenarioConfig sc = builtin_scenario("static-10-45");
  const ReplicationInputs in = build_replication(sc, 0);
  const OracleSolution oracle = solve_centralized(in.problem, 1e-10, 2000000);
  REQUIRE(oracle.converged);

  RunConfig cfg = sc.engine;
  cfg.iterations = 0;
  const MetricTrace empty = run(cfg, in.problem, in.graphs, oracle);
  REQUIRE(empty.rows.size() == 1);
  CHECK(empty.rows[0].k == 0);

  cfg.iterations = 2000;
  cfg.log_points = {200};
  cfg.cadence = 0;
  const MetricTrace a = run(cfg, in.problem, in.graphs, oracle);
  const MetricTrace b = run(cfg, in.problem, in.graphs, oracle);
  CHECK(trace_csv(a) == trace_csv(b));
  CHECK(a.rows.size() == 3);
  CHECK(a.at_k(2000).suboptimality < a.at_k(200).suboptimality);
  for (std::size_t r = 1; r < a.rows.size(); ++r) CHECK(a.rows[r].N_K > a.rows[r - 1].N_K);

  RunConfig base = cfg;
  base.schedule_mode = ScheduleMode::ConstantBaseline;
  const MetricTrace c = run(base, in.problem, in.graphs, oracle);
  CHECK(a.at_k(2000).relative_error_last <= c.at_k(2000).relative_error_last);

  RunConfig bad = cfg;
  bad.init = InitKind::Gaussian;
  bad.init_scale = std::numeric_limits<double>::quiet_NaN();
  try {
    run(bad, in.problem, in.graphs, oracle);
    FAIL("expected NonFiniteIterate");
  } catch (const NonFiniteIterate& e) {
    CHECK(e.k == 1);
    CHECK(e.field == "x");
  }

  RunConfig tv = cfg;
  tv.engine = EngineKind::DPDA_TV;
  CHECK_NOTHROW(prepare_run(tv, in.problem, in.graphs));
  CHECK_THROWS(prepare_run(cfg, in.problem, GraphSequence{in.graphs.base, 5, 0.8, 1,
                                                          SequenceKind::TimeVaryingUndirected}));
}

TEST_CASE("time-varying scenario reaches consensus by k = 5000") {
  ScenarioConfig sc = builtin_scenario("tv-undirected-10-45");
  const ReplicationInputs in = build_replication(sc, 0);
  const OracleSolution oracle = solve_centralized(in.problem, 1e-10, 2000000);
  RunConfig cfg = sc.engine;
  cfg.iterations = 5000;
  cfg.cadence = 0;
  cfg.log_points = {};
  cfg.diagnostics = false;
  const MetricTrace t = run(cfg, in.problem, in.graphs, oracle);
  CHECK(t.at_k(5000).consensus_violation < 1e-3);
  CHECK(t.at_k(5000).consensus_violation < t.at_k(0).consensus_violation + 1e-3);
}
