#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "dpda/graph_topology.hpp"

namespace dpda {

enum class NetworkMode { Static, TimeVarying };
enum class ScheduleMode { Accelerated, ConstantBaseline };

std::string to_string(ScheduleMode mode);
ScheduleMode schedule_mode_from_string(const std::string& name);

struct ScheduleConstants {
  double delta1 = 1.0;
  double delta2 = 1.0;
  double alpha = 0.0;
  double mu = 0.0;
  std::vector<double> lipschitz;      // L_i
  std::vector<double> a_norm;         // ||A_i||
  std::vector<std::size_t> degrees;   // d_i, static networks only

  std::size_t num_agents() const { return lipschitz.size(); }
};

struct ScheduleState {
  double tau = 0.0;
  double tau_tilde = 0.0;
  double eta = 0.0;
  double gamma = 0.0;
  std::vector<double> kappa;
  std::size_t k = 0;
  double N_K_accum = 0.0;  // sum_{j=1}^{k} gamma^{j-1} / gamma^0

  double gamma0 = 0.0;
  std::vector<double> kappa_over_gamma;  // fixed per agent
};

// kappa_i / gamma = delta1 / ||A_i||^2 (delta1 when A_i = 0).
std::vector<double> kappa_ratios(const ScheduleConstants& c);

// Throws std::invalid_argument when mu >= 1/tau0 or inputs are inconsistent.
ScheduleState init_static(const ScheduleConstants& c, const GraphSnapshot& graph);
ScheduleState init_tv(const ScheduleConstants& c);

// One accelerated update k -> k+1.
ScheduleState advance(const ScheduleState& s, double mu);
// Constant-step baseline: parameters stay at their initial values with eta = 1.
ScheduleState frozen_start(const ScheduleState& init);
ScheduleState advance_frozen(const ScheduleState& s);

struct MuAlpha {
  double mu_alpha = 0.0;
  double alpha_min = 0.0;
};

// Strong convexity modulus of the consensus-regularized objective.
MuAlpha mu_alpha_static(double bar_mu, std::size_t N, double L_bar, double lambda2, double alpha);
MuAlpha mu_alpha_tv(double bar_mu, std::size_t N, double L_bar, double alpha);

// sqrt(sum L_i^2 / N)
double l_bar(const std::vector<double>& lipschitz);

struct ParameterRule {
  std::optional<double> alpha;     // default: 0 if ubar_mu > 0, else margin * alpha_min
  std::optional<double> mu;        // default: max(ubar_mu, mu_alpha)
  double alpha_margin = 1.05;
};

struct ChosenParameters {
  double alpha = 0.0;
  double mu = 0.0;
  double mu_alpha = 0.0;
  double alpha_min = 0.0;
};

// lambda2 is ignored for TimeVarying.
ChosenParameters choose_parameters(NetworkMode mode, double ubar_mu, double bar_mu,
                                   const std::vector<double>& lipschitz, double lambda2,
                                   const ParameterRule& rule);

enum class Condition { KappaBound = 0, TauRecursion, KappaGammaRatio, GammaEta, Cond5 };
constexpr std::size_t kNumConditions = 5;
std::string to_string(Condition c);

struct ConditionReport {
  // Worst relative slack per condition; negative means violated.
  // Equality conditions report -|relative mismatch|.
  std::array<double, kNumConditions> worst_slack{};
  std::array<std::size_t, kNumConditions> worst_k{};
  std::size_t checked_steps = 0;

  bool ok(double tol = 1e-12) const;
  std::vector<std::string> violations(double tol = 1e-12) const;
};

// Checks the step-size conditions between every consecutive pair of states.
ConditionReport validate_conditions(const std::vector<ScheduleState>& history, const ScheduleConstants& c,
                                    NetworkMode mode);

// CSV with header k,tau,tau_tilde,eta,gamma,N_K.
std::string schedule_csv(const std::vector<ScheduleState>& history);

}  // namespace dpda
