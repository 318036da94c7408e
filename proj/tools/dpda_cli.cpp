// Command-line driver for the decentralized primal-dual experiments.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "dpda/scenario.hpp"

namespace {

using namespace dpda;
namespace fs = std::filesystem;

constexpr int kExitConfig = 1;
constexpr int kExitOracle = 2;
constexpr int kExitBounds = 3;
constexpr int kExitRuntime = 4;

struct Overrides {
  std::optional<std::size_t> replications;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iterations;
  std::optional<std::string> output;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--replications", o.replications, "Number of seeded replications");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--iterations", o.iterations, "Iterations K per run");
  cmd->add_option("--output", o.output, "Output directory");
}

ScenarioConfig resolve(const std::string& name, const Overrides& o) {
  ScenarioConfig cfg = load_scenario(name);
  if (o.replications) cfg.replications = *o.replications;
  if (o.seed) cfg.master_seed = *o.seed;
  if (o.iterations) cfg.engine.iterations = *o.iterations;
  if (o.output) cfg.output_dir = *o.output;
  if (cfg.replications < 1) throw ConfigError("--replications must be >= 1");
  if (cfg.engine.iterations < 1) throw ConfigError("--iterations must be >= 1");
  return cfg;
}

int cmd_scenarios() {
  for (const auto& name : builtin_scenario_names()) {
    const ScenarioConfig c = builtin_scenario(name);
    std::printf("%-24s engine=%s agents=%zu network=%s edges=%zu modes=%zu\n", name.c_str(),
                to_string(c.engine.engine).c_str(), c.problem.num_agents, to_string(c.network.kind).c_str(),
                c.network.num_edges, c.schedule_modes.size());
  }
  return 0;
}

int cmd_run(const ScenarioConfig& cfg, std::size_t jobs, bool check_bounds) {
  const ScenarioResult res = run_scenario(cfg, jobs);
  const fs::path dir = fs::path(cfg.output_dir) / cfg.name;
  bool failed = false;
  for (const auto& m : res.modes) {
    const auto& rel = m.averaged.metric("relative_error_last");
    const auto& inf = m.averaged.metric("infeasibility");
    std::printf("%s %s: K=%zu relative_error=%.3e infeasibility=%.3e", cfg.name.c_str(), to_string(m.mode).c_str(),
                m.averaged.k.back(), rel.mean.back(), inf.mean.back());
    if (m.bounds_checked) std::printf(" bounds=%s", m.violations.empty() ? "ok" : "VIOLATED");
    std::printf("\n");
    for (const auto& v : m.violations)
      std::fprintf(stderr, "  replication %zu k=%zu %s: %.6e vs %.6e\n", v.replication, v.k, v.check.c_str(),
                   v.value, v.limit);
    failed = failed || !m.violations.empty();
  }
  std::printf("wrote %s (config %s)\n", (dir / "summary.json").string().c_str(), res.config_hash.substr(0, 16).c_str());
  return check_bounds && failed ? kExitBounds : 0;
}

int cmd_oracle(const ScenarioConfig& cfg, std::size_t jobs) {
  const fs::path cache = fs::path(cfg.output_dir) / "oracle_cache";
  std::vector<OracleSolution> sols(cfg.replications);
  parallel_for(cfg.replications, jobs, [&](std::size_t r) {
    const ReplicationInputs in = build_replication(cfg, r);
    sols[r] = cached_oracle(in.problem, cache, cfg.oracle_tol, cfg.oracle_max_iters);
  });
  for (std::size_t r = 0; r < sols.size(); ++r)
    std::printf("replication %zu: kkt=%.3e iterations=%d ||x*||=%.6f\n", r, sols[r].kkt_residual,
                sols[r].iterations_used, sols[r].x_star.norm());
  return 0;
}

int cmd_validate(const ScenarioConfig& cfg) {
  const ReplicationInputs in = build_replication(cfg, 0);
  const RunSetup setup = prepare_run(cfg.engine, in.problem, in.graphs);
  const NetworkMode net = cfg.engine.engine == EngineKind::DPDA ? NetworkMode::Static : NetworkMode::TimeVarying;
  constexpr double tol = 1e-12;
  bool ok = true;
  std::printf("alpha=%.6g mu=%.6g tau0=%.6g gamma0=%.6g\n", setup.constants.alpha, setup.constants.mu,
              setup.schedule0.tau, setup.schedule0.gamma);
  for (ScheduleMode mode : cfg.schedule_modes) {
    const auto hist = schedule_history(setup, mode, cfg.engine.iterations);
    const ConditionReport rep = validate_conditions(hist, setup.constants, net);
    std::printf("%s (%zu steps):\n", to_string(mode).c_str(), rep.checked_steps);
    for (std::size_t c = 0; c < kNumConditions; ++c)
      std::printf("  %-18s worst relative slack %+.3e at k=%zu\n", to_string(static_cast<Condition>(c)).c_str(),
                  rep.worst_slack[c], rep.worst_k[c]);
    for (const auto& v : rep.violations(tol)) std::fprintf(stderr, "  %s\n", v.c_str());
    ok = ok && rep.ok(tol);
  }
  return ok ? 0 : kExitBounds;
}

int cmd_decay(const ScenarioConfig& cfg) {
  const ReplicationInputs in = build_replication(cfg, 0);
  const MixingMode mode = in.graphs.kind == SequenceKind::Static ? MixingMode::MetropolisUndirected : cfg.engine.mixing;
  const DecayEstimate est =
      estimate_decay(in.graphs, mode, cfg.decay_trials, cfg.decay_rounds, derive_seed(cfg.master_seed, "decay"));
  const fs::path out = fs::path(cfg.output_dir) / cfg.name / "decay.csv";
  write_atomic(out, provenance_line(cfg) + decay_csv(est));
  std::printf("beta=%.6f Gamma=%.6e degenerate=%s\nwrote %s\n", est.beta, est.Gamma, est.degenerate ? "yes" : "no",
              out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized primal-dual experiments on constrained LASSO"};
  app.set_version_flag("--version", std::string(DPDA_VERSION));
  app.require_subcommand(1);

  std::string target;
  std::size_t jobs = 1;
  bool check_bounds = false;
  Overrides o;

  auto* scenarios = app.add_subcommand("scenarios", "List built-in scenarios");
  auto* run_cmd = app.add_subcommand("run", "Run a scenario and write traces");
  run_cmd->add_option("config", target, "Built-in scenario name or JSON config file")->required();
  run_cmd->add_option("--jobs", jobs, "Parallel replications")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--check-bounds", check_bounds, "Exit 3 if any bound check fails");
  add_overrides(run_cmd, o);
  auto* oracle_cmd = app.add_subcommand("oracle", "Solve and cache the centralized solutions");
  oracle_cmd->add_option("config", target)->required();
  oracle_cmd->add_option("--jobs", jobs)->check(CLI::PositiveNumber);
  add_overrides(oracle_cmd, o);
  auto* validate_cmd = app.add_subcommand("validate", "Report step-size condition slacks");
  validate_cmd->add_option("config", target)->required();
  add_overrides(validate_cmd, o);
  auto* decay_cmd = app.add_subcommand("decay", "Estimate the averaging error decay of the network");
  decay_cmd->add_option("config", target)->required();
  add_overrides(decay_cmd, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (scenarios->parsed()) return cmd_scenarios();
    const ScenarioConfig cfg = resolve(target, o);
    if (run_cmd->parsed()) return cmd_run(cfg, jobs, check_bounds);
    if (oracle_cmd->parsed()) return cmd_oracle(cfg, jobs);
    if (validate_cmd->parsed()) return cmd_validate(cfg);
    if (decay_cmd->parsed()) return cmd_decay(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const OracleNotConverged& e) {
    std::cerr << "oracle: " << e.what() << '\n';
    return kExitOracle;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
