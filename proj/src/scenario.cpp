#include "dpda/scenario.hpp"

#include <sodium.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace dpda {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct SodiumInit {
  SodiumInit() {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
  }
};

void ensure_sodium() { static SodiumInit once; }

std::string hex(const unsigned char* p, std::size_t n) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    s += digits[p[i] >> 4];
    s += digits[p[i] & 15];
  }
  return s;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Reads keys of one JSON object and rejects the ones nobody asked for.
class StrictReader {
 public:
  StrictReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path(key) + ": " + e.what());
    }
  }

  void get_optional(const std::string& key, std::optional<double>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (j_.at(key).is_null()) {
      out.reset();
      return;
    }
    double v = 0.0;
    get(key, v);
    out = v;
  }

  template <class E, class F>
  void get_enum(const std::string& key, E& out, F parse) {
    std::string s;
    seen_.insert(key);
    if (!j_.contains(key)) return;
    get(key, s);
    try {
      out = parse(s);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path(key) + ": " + e.what());
    }
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ConfigError(path(item.key()) + ": unknown key");
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

QRule::Kind q_kind_from_string(const std::string& s) {
  if (s == "log") return QRule::Kind::Log;
  if (s == "theorem2") return QRule::Kind::Theorem2;
  throw std::invalid_argument("unknown q rule: " + s);
}

InitKind init_kind_from_string(const std::string& s) {
  if (s == "zeros") return InitKind::Zeros;
  if (s == "gaussian") return InitKind::Gaussian;
  throw std::invalid_argument("unknown init: " + s);
}

ScenarioConfig static_base(std::size_t N, std::size_t E) {
  ScenarioConfig c;
  c.name = "static-" + std::to_string(N) + "-" + std::to_string(E);
  c.problem.num_agents = N;
  c.network.kind = SequenceKind::Static;
  c.network.num_edges = E;
  c.engine.engine = EngineKind::DPDA;
  c.engine.iterations = 2000;
  c.engine.cadence = 10;
  c.engine.log_points = {1};
  return c;
}

ScenarioConfig tv_base(bool directed) {
  ScenarioConfig c;
  c.engine.engine = EngineKind::DPDA_TV;
  c.engine.iterations = 2000;
  c.engine.cadence = 10;
  c.engine.log_points = {1};
  c.network.period = 5;
  c.network.keep_prob = 0.8;
  if (directed) {
    c.name = "tv-directed-fig7";
    c.problem.num_agents = 12;
    c.network.kind = SequenceKind::TimeVaryingDirected;
    c.network.topology = "fig7";
    c.network.num_edges = fig7_fixture().edges.size();
    c.engine.mixing = MixingMode::PushSumDirected;
  } else {
    c.name = "tv-undirected-10-45";
    c.problem.num_agents = 10;
    c.network.kind = SequenceKind::TimeVaryingUndirected;
    c.network.num_edges = 45;
    c.engine.mixing = MixingMode::MetropolisUndirected;
  }
  return c;
}

}  // namespace

std::vector<std::string> builtin_scenario_names() {
  return {"static-10-15",        "static-10-45",     "static-40-60",
          "static-40-180",       "tv-undirected-10-45", "tv-directed-fig7",
          "compare-static",      "compare-tv-undirected", "compare-tv-directed"};
}

ScenarioConfig builtin_scenario(const std::string& name) {
  ScenarioConfig c;
  if (name == "static-10-15") c = static_base(10, 15);
  else if (name == "static-10-45") c = static_base(10, 45);
  else if (name == "static-40-60") c = static_base(40, 60);
  else if (name == "static-40-180") c = static_base(40, 180);
  else if (name == "tv-undirected-10-45") c = tv_base(false);
  else if (name == "tv-directed-fig7") c = tv_base(true);
  else if (name == "compare-static") c = static_base(10, 45);
  else if (name == "compare-tv-undirected") c = tv_base(false);
  else if (name == "compare-tv-directed") c = tv_base(true);
  else throw ConfigError("unknown scenario: " + name);
  if (name.rfind("compare-", 0) == 0) {
    c.name = name;
    c.schedule_modes = {ScheduleMode::Accelerated, ScheduleMode::ConstantBaseline};
  }
  return c;
}

json to_json(const ScenarioConfig& c) {
  json modes = json::array();
  for (auto m : c.schedule_modes) modes.push_back(to_string(m));
  const RunConfig& e = c.engine;
  return {
      {"name", c.name},
      {"master_seed", c.master_seed},
      {"replications", c.replications},
      {"output_dir", c.output_dir},
      {"problem",
       {{"n", c.problem.n},
        {"m_obs", c.problem.m_obs},
        {"num_agents", c.problem.num_agents},
        {"lasso_weight", c.problem.lasso_weight},
        {"noise_std", c.problem.noise_std},
        {"box_half_width", c.problem.box_half_width}}},
      {"network",
       {{"kind", to_string(c.network.kind)},
        {"topology", c.network.topology},
        {"num_edges", c.network.num_edges},
        {"period", c.network.period},
        {"keep_prob", c.network.keep_prob}}},
      {"engine",
       {{"engine", to_string(e.engine)},
        {"schedule_modes", modes},
        {"iterations", e.iterations},
        {"q_rule",
         {{"kind", e.q_rule.kind == QRule::Kind::Log ? "log" : "theorem2"},
          {"c1", e.q_rule.c1},
          {"c", e.q_rule.c},
          {"beta", e.q_rule.beta}}},
        {"mixing", to_string(e.mixing)},
        {"delta1", optional_json(e.delta1)},
        {"delta2", optional_json(e.delta2)},
        {"alpha", optional_json(e.params.alpha)},
        {"mu", optional_json(e.params.mu)},
        {"alpha_margin", e.params.alpha_margin},
        {"init", e.init == InitKind::Zeros ? "zeros" : "gaussian"},
        {"init_scale", e.init_scale},
        {"cadence", e.cadence},
        {"log_points", e.log_points},
        {"joint_rounds", e.joint_rounds},
        {"diagnostics", e.diagnostics}}},
      {"oracle", {{"tol", c.oracle_tol}, {"max_iters", c.oracle_max_iters}}},
      {"decay", {{"trials", c.decay_trials}, {"rounds", c.decay_rounds}}},
  };
}

ScenarioConfig scenario_from_json(const json& input) {
  json j = input;
  if (!j.is_object()) throw ConfigError("config: expected an object");
  if (j.contains("base")) {
    if (!j["base"].is_string()) throw ConfigError("config.base: expected a scenario name");
    json merged = to_json(builtin_scenario(j["base"].get<std::string>()));
    j.erase("base");
    merged.merge_patch(j);
    j = std::move(merged);
  }

  ScenarioConfig c;
  StrictReader top(j, "config");
  top.get("name", c.name);
  top.get("master_seed", c.master_seed);
  top.get("replications", c.replications);
  top.get("output_dir", c.output_dir);

  if (const json* p = top.child("problem")) {
    StrictReader r(*p, "config.problem");
    r.get("n", c.problem.n);
    r.get("m_obs", c.problem.m_obs);
    r.get("num_agents", c.problem.num_agents);
    r.get("lasso_weight", c.problem.lasso_weight);
    r.get("noise_std", c.problem.noise_std);
    r.get("box_half_width", c.problem.box_half_width);
    r.finish();
  }
  if (const json* p = top.child("network")) {
    StrictReader r(*p, "config.network");
    r.get_enum("kind", c.network.kind, sequence_kind_from_string);
    r.get("topology", c.network.topology);
    r.get("num_edges", c.network.num_edges);
    r.get("period", c.network.period);
    r.get("keep_prob", c.network.keep_prob);
    r.finish();
  }
  if (const json* p = top.child("engine")) {
    StrictReader r(*p, "config.engine");
    RunConfig& e = c.engine;
    r.get_enum("engine", e.engine, engine_kind_from_string);
    std::vector<std::string> modes;
    r.get("schedule_modes", modes);
    if (p->contains("schedule_modes")) {
      c.schedule_modes.clear();
      for (const auto& m : modes) {
        try {
          c.schedule_modes.push_back(schedule_mode_from_string(m));
        } catch (const std::invalid_argument& err) {
          throw ConfigError(r.path("schedule_modes") + ": " + err.what());
        }
      }
    }
    r.get("iterations", e.iterations);
    if (const json* q = r.child("q_rule")) {
      StrictReader qr(*q, "config.engine.q_rule");
      qr.get_enum("kind", e.q_rule.kind, q_kind_from_string);
      qr.get("c1", e.q_rule.c1);
      qr.get("c", e.q_rule.c);
      qr.get("beta", e.q_rule.beta);
      qr.finish();
    }
    r.get_enum("mixing", e.mixing, mixing_mode_from_string);
    r.get_optional("delta1", e.delta1);
    r.get_optional("delta2", e.delta2);
    r.get_optional("alpha", e.params.alpha);
    r.get_optional("mu", e.params.mu);
    r.get("alpha_margin", e.params.alpha_margin);
    r.get_enum("init", e.init, init_kind_from_string);
    r.get("init_scale", e.init_scale);
    r.get("cadence", e.cadence);
    r.get("log_points", e.log_points);
    r.get("joint_rounds", e.joint_rounds);
    r.get("diagnostics", e.diagnostics);
    r.finish();
  }
  if (const json* p = top.child("oracle")) {
    StrictReader r(*p, "config.oracle");
    r.get("tol", c.oracle_tol);
    r.get("max_iters", c.oracle_max_iters);
    r.finish();
  }
  if (const json* p = top.child("decay")) {
    StrictReader r(*p, "config.decay");
    r.get("trials", c.decay_trials);
    r.get("rounds", c.decay_rounds);
    r.finish();
  }
  top.finish();

  if (c.name.empty()) throw ConfigError("config.name: must not be empty");
  if (c.replications < 1) throw ConfigError("config.replications: must be >= 1");
  if (c.engine.iterations < 1) throw ConfigError("config.engine.iterations: must be >= 1");
  if (c.schedule_modes.empty()) throw ConfigError("config.engine.schedule_modes: must not be empty");
  if (c.network.topology != "small_world" && c.network.topology != "fig7")
    throw ConfigError("config.network.topology: expected small_world or fig7");
  if (!(c.oracle_tol > 0.0)) throw ConfigError("config.oracle.tol: must be positive");
  return c;
}

ScenarioConfig load_scenario(const std::string& name_or_path) {
  const auto names = builtin_scenario_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) return builtin_scenario(name_or_path);
  std::ifstream in(name_or_path);
  if (!in) throw ConfigError("no built-in scenario or readable file named " + name_or_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(name_or_path + ": " + e.what());
  }
  return scenario_from_json(j);
}

std::string blake2b_hex(const std::string& data) {
  ensure_sodium();
  std::array<unsigned char, 32> out{};
  crypto_generichash(out.data(), out.size(), reinterpret_cast<const unsigned char*>(data.data()), data.size(),
                     nullptr, 0);
  return hex(out.data(), out.size());
}

std::string config_hash(const ScenarioConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output_dir");
  return blake2b_hex(j.dump());
}

std::uint64_t derive_seed(std::uint64_t master, const std::string& label) {
  ensure_sodium();
  static_assert(crypto_generichash_KEYBYTES_MIN <= 16);
  std::array<unsigned char, 16> key{'d', 'p', 'd', 'a', 's', 'e', 'e', 'd'};
  for (int b = 0; b < 8; ++b) key[8 + b] = static_cast<unsigned char>(master >> (8 * b));
  std::array<unsigned char, 8> out{};
  crypto_generichash(out.data(), out.size(), reinterpret_cast<const unsigned char*>(label.data()), label.size(),
                     key.data(), key.size());
  std::uint64_t s = 0;
  for (int b = 0; b < 8; ++b) s |= static_cast<std::uint64_t>(out[b]) << (8 * b);
  return s;
}

std::vector<std::uint64_t> seed_split(std::uint64_t master, const std::vector<std::string>& labels) {
  std::vector<std::uint64_t> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back(derive_seed(master, l));
  return out;
}

ReplicationInputs build_replication(const ScenarioConfig& cfg, std::size_t r) {
  const std::string tag = "/" + std::to_string(r);
  const auto seeds = seed_split(cfg.master_seed, {"instance" + tag, "graph" + tag, "sequence" + tag, "init" + tag});

  GraphSequence seq;
  seq.kind = cfg.network.kind;
  if (cfg.network.topology == "fig7") {
    if (cfg.network.kind != SequenceKind::TimeVaryingDirected)
      throw ConfigError("config.network: the fig7 topology is directed; use kind tv_directed");
    seq.base = fig7_fixture();
  } else {
    if (cfg.network.kind == SequenceKind::TimeVaryingDirected)
      throw ConfigError("config.network: kind tv_directed needs the fig7 topology");
    seq.base = generate_small_world(cfg.problem.num_agents, cfg.network.num_edges, seeds[1]);
  }
  if (seq.base.num_nodes != cfg.problem.num_agents)
    throw ConfigError("config: network has " + std::to_string(seq.base.num_nodes) + " nodes but problem has " +
                      std::to_string(cfg.problem.num_agents) + " agents");
  if (seq.kind == SequenceKind::Static) {
    seq.period = 1;
    seq.keep_prob = 1.0;
  } else {
    seq.period = cfg.network.period;
    seq.keep_prob = cfg.network.keep_prob;
  }
  seq.seed = seeds[2];

  ClassoParams params = cfg.problem;
  params.seed = seeds[0];
  return {generate_classo(params), std::move(seq), seeds[0], seeds[1], seeds[3]};
}

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(std::hash<std::string>{}(path.string() + content) & 0xffffff);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

OracleSolution cached_oracle(const ProblemInstance& problem, const fs::path& cache_dir, double tol, int max_iters) {
  std::ostringstream key;
  key.precision(17);
  key << to_json(problem).dump() << "|tol=" << tol;
  const fs::path file = cache_dir / (blake2b_hex(key.str()) + ".json");

  if (fs::exists(file)) {
    std::ifstream in(file);
    const json j = json::parse(in);
    if (j.at("tol").get<double>() == tol) return oracle_from_json(j.at("solution"));
  }
  OracleSolution sol = solve_centralized(problem, tol, max_iters);
  if (!sol.converged) {
    std::ostringstream os;
    os << "oracle did not reach tolerance " << tol << " (KKT residual " << sol.kkt_residual << " after "
       << sol.iterations_used << " iterations, instance seed " << problem.seed() << ")";
    throw OracleNotConverged(os.str());
  }
  write_atomic(file, json{{"tol", tol}, {"solution", to_json(sol)}}.dump(1));
  return sol;
}

std::vector<BoundViolation> check_trace_bounds(const MetricTrace& trace, std::size_t replication, bool time_varying) {
  std::vector<BoundViolation> out;
  const double eps = trace.epsilon_oracle;
  for (const auto& row : trace.rows) {
    if (row.k == 0) continue;
    if (!(row.bound_lhs <= row.theorem_bound + eps))
      out.push_back({replication, row.k, "ergodic", row.bound_lhs, row.theorem_bound + eps});
    if (time_varying) continue;
    if (!(row.iterate_error_sq <= row.iterate_bound + eps))
      out.push_back({replication, row.k, "iterate", row.iterate_error_sq, row.iterate_bound + eps});
    if (!(row.lower_bound_value >= -eps)) out.push_back({replication, row.k, "lower", row.lower_bound_value, -eps});
  }
  return out;
}

std::string provenance_line(const ScenarioConfig& cfg) {
  return "# config_hash=" + config_hash(cfg) + " master_seed=" + std::to_string(cfg.master_seed) +
         " version=" + DPDA_VERSION + "\n";
}

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json violation_json(const BoundViolation& v) {
  return {{"replication", v.replication}, {"k", v.k}, {"check", v.check}, {"value", v.value}, {"limit", v.limit}};
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg, std::size_t jobs, bool write_files) {
  ScenarioResult result;
  result.config_hash = config_hash(cfg);
  const fs::path dir = fs::path(cfg.output_dir) / cfg.name;
  const fs::path cache = fs::path(cfg.output_dir) / "oracle_cache";
  const std::string header = provenance_line(cfg);
  const bool tv = cfg.engine.engine == EngineKind::DPDA_TV;

  std::vector<std::optional<ReplicationInputs>> inputs(cfg.replications);
  std::vector<OracleSolution> oracles(cfg.replications);
  parallel_for(cfg.replications, jobs, [&](std::size_t r) {
    inputs[r].emplace(build_replication(cfg, r));
    oracles[r] = write_files ? cached_oracle(inputs[r]->problem, cache, cfg.oracle_tol, cfg.oracle_max_iters)
                             : solve_centralized(inputs[r]->problem, cfg.oracle_tol, cfg.oracle_max_iters);
    if (!oracles[r].converged)
      throw OracleNotConverged("oracle did not converge for replication " + std::to_string(r));
  });

  json summary = {{"scenario", cfg.name},
                  {"config_hash", result.config_hash},
                  {"master_seed", cfg.master_seed},
                  {"version", DPDA_VERSION},
                  {"config", to_json(cfg)}};
  summary["config"].erase("output_dir");
  json oracle_rows = json::array();
  for (std::size_t r = 0; r < cfg.replications; ++r)
    oracle_rows.push_back({{"replication", r},
                           {"instance_seed", inputs[r]->instance_seed},
                           {"graph_seed", inputs[r]->graph_seed},
                           {"kkt_residual", oracles[r].kkt_residual},
                           {"iterations", oracles[r].iterations_used}});
  summary["oracle"] = oracle_rows;
  summary["modes"] = json::array();

  for (ScheduleMode mode : cfg.schedule_modes) {
    ModeResult mr;
    mr.mode = mode;
    mr.traces = run_replications(cfg.replications, jobs, [&](std::size_t r) {
      RunConfig rc = cfg.engine;
      rc.schedule_mode = mode;
      rc.init_seed = inputs[r]->init_seed;
      try {
        MetricTrace t = run(rc, inputs[r]->problem, inputs[r]->graphs, oracles[r]);
        t.metadata["replication"] = r;
        t.metadata["instance_seed"] = inputs[r]->instance_seed;
        return t;
      } catch (const std::exception& e) {
        throw std::runtime_error(std::string(e.what()) + " (instance seed " +
                                 std::to_string(inputs[r]->instance_seed) + ")");
      }
    });
    mr.averaged = average_traces(mr.traces);
    mr.bounds_checked = mode == ScheduleMode::Accelerated && (!tv || cfg.engine.diagnostics);
    if (mr.bounds_checked)
      for (std::size_t r = 0; r < mr.traces.size(); ++r) {
        auto v = check_trace_bounds(mr.traces[r], r, tv);
        mr.violations.insert(mr.violations.end(), v.begin(), v.end());
      }

    const std::string stem = to_string(mode);
    json files = {{"averaged", stem + "_trace.csv"}, {"replications", json::array()}};
    if (write_files) {
      write_atomic(dir / (stem + "_trace.csv"), header + averaged_csv(mr.averaged));
      for (std::size_t r = 0; r < mr.traces.size(); ++r) {
        char name[64];
        std::snprintf(name, sizeof name, "replications/%s_rep%03zu.csv", stem.c_str(), r);
        write_atomic(dir / name, header + trace_csv(mr.traces[r]));
        files["replications"].push_back(name);
      }
    }

    json final_metrics = json::object();
    const std::size_t last = mr.averaged.k.size() - 1;
    for (std::size_t m = 0; m < mr.averaged.names.size(); ++m) {
      const auto& env = mr.averaged.envelopes[m];
      final_metrics[mr.averaged.names[m]] = {
          {"mean", finite_or_null(env.mean[last])}, {"min", finite_or_null(env.min[last])},
          {"max", finite_or_null(env.max[last])}};
    }
    json violations = json::array();
    for (const auto& v : mr.violations) violations.push_back(violation_json(v));
    summary["modes"].push_back({{"schedule_mode", stem},
                                {"engine", to_string(cfg.engine.engine)},
                                {"replications", cfg.replications},
                                {"final_k", mr.averaged.k[last]},
                                {"final", final_metrics},
                                {"bound_check",
                                 {{"checked", mr.bounds_checked},
                                  {"passed", mr.violations.empty()},
                                  {"violations", violations}}},
                                {"metadata", mr.traces.front().metadata},
                                {"files", files}});
    result.modes.push_back(std::move(mr));
  }

  result.summary = std::move(summary);
  if (write_files) write_atomic(dir / "summary.json", result.summary.dump(2) + "\n");
  return result;
}

}  // namespace dpda
