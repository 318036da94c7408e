#include "dpda/stepsize_schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dpda {

std::string to_string(ScheduleMode mode) {
  return mode == ScheduleMode::Accelerated ? "accelerated" : "constant";
}

ScheduleMode schedule_mode_from_string(const std::string& name) {
  if (name == "accelerated") return ScheduleMode::Accelerated;
  if (name == "constant") return ScheduleMode::ConstantBaseline;
  throw std::invalid_argument("unknown schedule mode: " + name);
}

std::vector<double> kappa_ratios(const ScheduleConstants& c) {
  std::vector<double> r(c.num_agents());
  for (std::size_t i = 0; i < r.size(); ++i)
    r[i] = c.a_norm[i] > 0.0 ? c.delta1 / (c.a_norm[i] * c.a_norm[i]) : c.delta1;
  return r;
}

namespace {

void check_constants(const ScheduleConstants& c) {
  if (c.num_agents() == 0) throw std::invalid_argument("schedule: no agents");
  if (c.a_norm.size() != c.num_agents()) throw std::invalid_argument("schedule: ||A_i|| list size mismatch");
  if (!(c.delta1 > 0.0) || !(c.delta2 > 0.0)) throw std::invalid_argument("schedule: delta1, delta2 must be > 0");
  if (!(c.alpha >= 0.0)) throw std::invalid_argument("schedule: alpha must be >= 0");
  if (!(c.mu > 0.0)) throw std::invalid_argument("schedule: mu must be > 0");
}

ScheduleState finish_init(const ScheduleConstants& c, double tau0, double gamma0) {
  if (c.mu >= 1.0 / tau0) throw std::invalid_argument("schedule: mu >= 1/tau0 makes tau_tilde0 nonpositive");
  ScheduleState s;
  s.tau = tau0;
  s.tau_tilde = 1.0 / (1.0 / tau0 - c.mu);
  s.eta = 0.0;
  s.gamma = gamma0;
  s.gamma0 = gamma0;
  s.kappa_over_gamma = kappa_ratios(c);
  s.kappa.resize(s.kappa_over_gamma.size());
  for (std::size_t i = 0; i < s.kappa.size(); ++i) s.kappa[i] = gamma0 * s.kappa_over_gamma[i];
  return s;
}

}  // namespace

ScheduleState init_static(const ScheduleConstants& c, const GraphSnapshot& graph) {
  check_constants(c);
  if (graph.directed) throw std::invalid_argument("init_static: graph must be undirected");
  if (graph.num_nodes != c.num_agents()) throw std::invalid_argument("init_static: graph size mismatch");
  double tau0 = std::numeric_limits<double>::infinity();
  double gamma0 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.num_agents(); ++i) {
    const double d = static_cast<double>(graph.degrees[i]);
    tau0 = std::min(tau0, 1.0 / (c.lipschitz[i] + c.delta2 + 2.0 * d * c.alpha));
    gamma0 = std::min(gamma0, c.delta2 / (2.0 * d + c.delta1));
  }
  return finish_init(c, tau0, gamma0);
}

ScheduleState init_tv(const ScheduleConstants& c) {
  check_constants(c);
  double tau0 = std::numeric_limits<double>::infinity();
  for (double L : c.lipschitz) tau0 = std::min(tau0, 1.0 / (L + c.delta2 + c.alpha));
  return finish_init(c, tau0, c.delta2 / (1.0 + c.delta1));
}

ScheduleState advance(const ScheduleState& s, double mu) {
  ScheduleState n = s;
  n.N_K_accum = s.N_K_accum + s.gamma / s.gamma0;
  n.eta = 1.0 / std::sqrt(1.0 + mu * s.tau_tilde);
  n.tau_tilde = n.eta * s.tau_tilde;
  n.tau = 1.0 / (1.0 / n.tau_tilde + mu);
  n.gamma = s.gamma / n.eta;
  for (std::size_t i = 0; i < n.kappa.size(); ++i) n.kappa[i] = n.gamma * n.kappa_over_gamma[i];
  n.k = s.k + 1;
  return n;
}

ScheduleState frozen_start(const ScheduleState& init) {
  ScheduleState s = init;
  s.eta = 1.0;
  return s;
}

ScheduleState advance_frozen(const ScheduleState& s) {
  ScheduleState n = s;
  n.N_K_accum = s.N_K_accum + s.gamma / s.gamma0;
  n.k = s.k + 1;
  return n;
}

double l_bar(const std::vector<double>& lipschitz) {
  if (lipschitz.empty()) return 0.0;
  double s = 0.0;
  for (double L : lipschitz) s += L * L;
  return std::sqrt(s / static_cast<double>(lipschitz.size()));
}

MuAlpha mu_alpha_static(double bar_mu, std::size_t N, double L_bar, double lambda2, double alpha) {
  if (!(bar_mu > 0.0) || N == 0 || !(lambda2 > 0.0))
    throw std::invalid_argument("mu_alpha: bar_mu, N, lambda2 must be positive");
  const double a = bar_mu / static_cast<double>(N);
  const double b = alpha * lambda2;
  MuAlpha r;
  r.mu_alpha = 0.5 * (a + b) - std::sqrt(0.25 * (a - b) * (a - b) + 4.0 * L_bar * L_bar);
  r.alpha_min = 4.0 * static_cast<double>(N) * L_bar * L_bar / (lambda2 * bar_mu);
  return r;
}

MuAlpha mu_alpha_tv(double bar_mu, std::size_t N, double L_bar, double alpha) {
  return mu_alpha_static(bar_mu, N, L_bar, 1.0, alpha);
}

ChosenParameters choose_parameters(NetworkMode mode, double ubar_mu, double bar_mu,
                                   const std::vector<double>& lipschitz, double lambda2,
                                   const ParameterRule& rule) {
  const std::size_t N = lipschitz.size();
  const double Lb = l_bar(lipschitz);
  const double l2 = mode == NetworkMode::Static ? lambda2 : 1.0;
  ChosenParameters p;
  p.alpha_min = mu_alpha_static(bar_mu, N, Lb, l2, 0.0).alpha_min;
  p.alpha = rule.alpha ? *rule.alpha : (ubar_mu > 0.0 ? 0.0 : rule.alpha_margin * p.alpha_min);
  if (!(p.alpha >= 0.0)) throw std::invalid_argument("choose_parameters: alpha must be >= 0");
  if (p.alpha == 0.0 && !(ubar_mu > 0.0))
    throw std::invalid_argument("choose_parameters: alpha = 0 requires every local objective strongly convex");
  p.mu_alpha = mu_alpha_static(bar_mu, N, Lb, l2, p.alpha).mu_alpha;
  const double upper = std::max(ubar_mu, p.mu_alpha);
  p.mu = rule.mu ? *rule.mu : upper;
  if (!(p.mu > 0.0) || p.mu > upper * (1.0 + 1e-15))
    throw std::invalid_argument("choose_parameters: mu must lie in (0, max(ubar_mu, mu_alpha)]");
  return p;
}

std::string to_string(Condition c) {
  switch (c) {
    case Condition::KappaBound: return "kappa_bound";
    case Condition::TauRecursion: return "tau_recursion";
    case Condition::KappaGammaRatio: return "kappa_gamma_ratio";
    case Condition::GammaEta: return "gamma_eta";
    case Condition::Cond5: return "cond5";
  }
  return "unknown";
}

bool ConditionReport::ok(double tol) const {
  return std::all_of(worst_slack.begin(), worst_slack.end(), [tol](double s) { return s >= -tol; });
}

std::vector<std::string> ConditionReport::violations(double tol) const {
  std::vector<std::string> out;
  for (std::size_t c = 0; c < kNumConditions; ++c)
    if (worst_slack[c] < -tol) {
      std::ostringstream os;
      os << to_string(static_cast<Condition>(c)) << " violated at k=" << worst_k[c]
         << " (relative slack " << worst_slack[c] << ")";
      out.push_back(os.str());
    }
  return out;
}

namespace {

double rel_ineq(double lhs, double rhs) {
  const double scale = std::max({std::abs(lhs), std::abs(rhs), std::numeric_limits<double>::min()});
  return (lhs - rhs) / scale;
}

double rel_eq(double lhs, double rhs) { return -std::abs(rel_ineq(lhs, rhs)); }

}  // namespace

ConditionReport validate_conditions(const std::vector<ScheduleState>& history, const ScheduleConstants& c,
                                    NetworkMode mode) {
  if (history.size() < 2) throw std::invalid_argument("validate_conditions: need at least two states");
  if (mode == NetworkMode::Static && c.degrees.size() != c.num_agents())
    throw std::invalid_argument("validate_conditions: static mode needs degrees");
  ConditionReport rep;
  rep.worst_slack.fill(std::numeric_limits<double>::infinity());
  auto note = [&](Condition cond, double slack, std::size_t k) {
    auto idx = static_cast<std::size_t>(cond);
    if (slack < rep.worst_slack[idx]) {
      rep.worst_slack[idx] = slack;
      rep.worst_k[idx] = k;
    }
  };

  for (std::size_t t = 0; t + 1 < history.size(); ++t) {
    const ScheduleState& s = history[t];
    const ScheduleState& n = history[t + 1];
    for (std::size_t i = 0; i < c.num_agents(); ++i) {
      if (c.a_norm[i] > 0.0)
        note(Condition::KappaBound, rel_ineq(c.delta1, s.kappa[i] * c.a_norm[i] * c.a_norm[i] / s.gamma), s.k);
      note(Condition::KappaGammaRatio, rel_eq(s.gamma / s.kappa[i], n.gamma / n.kappa[i]), s.k);

      const double coupling = mode == NetworkMode::Static ? 2.0 * static_cast<double>(c.degrees[i]) * c.alpha
                                                          : c.alpha;
      const double spread = mode == NetworkMode::Static ? 2.0 * static_cast<double>(c.degrees[i]) + c.delta1
                                                        : 1.0 + c.delta1;
      const double ge = n.gamma * n.eta;
      note(Condition::Cond5, rel_ineq(s.gamma * (1.0 / s.tau - c.lipschitz[i] - coupling), ge * ge * spread),
           s.k);
    }
    note(Condition::TauRecursion, rel_ineq(s.gamma / s.tau, n.gamma * (1.0 / n.tau - c.mu)), s.k);
    note(Condition::GammaEta, rel_eq(s.gamma, n.gamma * n.eta), s.k);
    ++rep.checked_steps;
  }
  for (auto& w : rep.worst_slack)
    if (std::isinf(w)) w = 0.0;
  return rep;
}

std::string schedule_csv(const std::vector<ScheduleState>& history) {
  std::ostringstream os;
  os.precision(17);
  os << "k,tau,tau_tilde,eta,gamma,N_K\n";
  for (const auto& s : history)
    os << s.k << ',' << s.tau << ',' << s.tau_tilde << ',' << s.eta << ',' << s.gamma << ',' << s.N_K_accum
       << '\n';
  return os.str();
}

}  // namespace dpda
