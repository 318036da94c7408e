#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpda/metrics.hpp"
#include "dpda/mixing.hpp"
#include "dpda/oracle.hpp"
#include "dpda/stepsize_schedule.hpp"

namespace dpda {

struct StaticAgentState {
  Vector x_cur;
  Vector x_prev;
  Vector theta;
  Vector s;  // dual aggregate, lambda = M s
};

struct TvAgentState {
  Vector xi_cur;
  Vector xi_prev;
  Vector theta;
  Vector nu;
  Vector omega;
};

enum class EngineKind { DPDA, DPDA_TV };
enum class InitKind { Zeros, Gaussian };

std::string to_string(EngineKind kind);
EngineKind engine_kind_from_string(const std::string& name);

// Rounds per iteration: max(1, ceil(c1 ln(k+1))) or max(1, ceil((5+c) ln(k+1) / ln(1/beta))).
struct QRule {
  enum class Kind { Log, Theorem2 };
  Kind kind = Kind::Log;
  double c1 = 10.0;
  double c = 1.0;
  double beta = 0.5;
};

std::size_t q_rounds(const QRule& rule, std::size_t k);

class NonFiniteIterate : public std::runtime_error {
 public:
  NonFiniteIterate(std::size_t k, std::size_t agent, const std::string& field);
  std::size_t k;
  std::size_t agent;
  std::string field;
};

// Fig. 1 iteration with the schedule at index k. Exactly one exchange of
// (s^{k+1}, x^k) with neighbors; the observer sees every received message.
void dpda_step(std::vector<StaticAgentState>& agents, const ScheduleState& schedule, const ProblemInstance& problem,
               const GraphSnapshot& graph, double alpha, const MessageObserver& observer = {});

struct TvStepOptions {
  double alpha = 0.0;
  double ball_radius = 0.0;   // 2 Delta; infinity disables clipping
  bool joint_rounds = true;   // R(omega) and R(xi) share the same q rounds
  bool diagnostics = false;   // compute the averaging error sequences with exact averages
};

struct TvDiagnostics {
  bool valid = false;
  double e1 = 0.0;        // ||P_{C~}(omega) - P_B(R(omega))||
  double e2 = 0.0;        // ||P_C(xi) - R(xi)||, alpha > 0 only
  double e3 = 0.0;        // ||xi^{k+1} - x^{k+1}|| against the exact-average update
  double nu_next = 0.0;   // ||nu^{k+1}||
};

TvDiagnostics dpda_tv_step(std::vector<TvAgentState>& agents, const ScheduleState& schedule,
                           const ProblemInstance& problem, MixingSession& session, std::size_t q,
                           const TvStepOptions& opts);

// gamma-weighted running sums for the ergodic iterate.
struct ErgodicAccumulator {
  BlockVector x_sum;
  BlockVector theta_sum;
  double weight = 0.0;

  BlockVector x_bar() const;
  BlockVector theta_bar() const;
};

ErgodicAccumulator ergodic_update(ErgodicAccumulator acc, const BlockVector& x_new, const BlockVector& theta_new,
                                  double gamma_prev);

struct RunConfig {
  EngineKind engine = EngineKind::DPDA;
  ScheduleMode schedule_mode = ScheduleMode::Accelerated;
  std::size_t iterations = 1000;
  QRule q_rule;
  MixingMode mixing = MixingMode::MetropolisUndirected;
  std::vector<std::size_t> log_points;  // extra k values to record
  std::size_t cadence = 0;              // record every cadence iterations (0: log_points only)
  InitKind init = InitKind::Zeros;
  double init_scale = 1.0;
  std::uint64_t init_seed = 0;
  bool joint_rounds = true;
  bool diagnostics = true;
  std::optional<double> delta1;         // static default d_max, time-varying default 1
  std::optional<double> delta2;         // static default 2 L_max, time-varying default 1
  ParameterRule params;
};

// Everything derived from (config, problem, graph) before iterating.
struct RunSetup {
  ScheduleConstants constants;
  ChosenParameters params;
  ScheduleState schedule0;
  double lambda2 = 0.0;
  double ball_radius = 0.0;
  double domain_diameter = 0.0;  // Delta
};

RunSetup prepare_run(const RunConfig& config, const ProblemInstance& problem, const GraphSequence& graphs);

BlockVector initial_iterate(const RunConfig& config, const ProblemInstance& problem);

// Iterates K steps and records metrics at k = 0, the log points, the cadence
// and K. Throws NonFiniteIterate on divergence.
MetricTrace run(const RunConfig& config, const ProblemInstance& problem, const GraphSequence& graphs,
                const OracleSolution& oracle);

// Schedule history for K advances (k = 0..K), in the configured mode.
std::vector<ScheduleState> schedule_history(const RunSetup& setup, ScheduleMode mode, std::size_t K);

}  // namespace dpda
