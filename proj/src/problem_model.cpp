#include "dpda/problem_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace dpda {

AgentObjective make_objective(Matrix C, Vector d, double lasso_weight,
                              std::optional<double> box_half_width) {
  if (C.rows() != d.size()) throw InvalidInstance("objective: C and d row mismatch");
  if (!(lasso_weight >= 0.0)) throw InvalidInstance("objective: lasso_weight must be >= 0");
  if (box_half_width && !(*box_half_width > 0.0))
    throw InvalidInstance("objective: box half-width must be > 0");

  AgentObjective obj;
  obj.C = std::move(C);
  obj.d = std::move(d);
  obj.lasso_weight = lasso_weight;
  obj.box_half_width = box_half_width;
  if (obj.C.size() > 0) {
    Eigen::JacobiSVD<Matrix> svd(obj.C);
    const Vector& sv = svd.singularValues();
    obj.lipschitz = sv(0) * sv(0);
    obj.strong_convexity =
        obj.C.rows() >= obj.C.cols() ? sv(sv.size() - 1) * sv(sv.size() - 1) : 0.0;
  }
  return obj;
}

ConicConstraint make_constraint(Matrix A, Vector b, ConeKind kind) {
  if (A.rows() != b.size()) throw InvalidInstance("constraint: A and b row mismatch");
  ConicConstraint c;
  c.A = std::move(A);
  c.b = std::move(b);
  c.cone_kind = kind;
  c.a_norm = spectral_norm(c.A);
  return c;
}

ConicConstraint empty_constraint(Eigen::Index n) {
  return make_constraint(Matrix(0, n), Vector(0), ConeKind::Zero);
}

ProblemInstance::ProblemInstance(std::vector<Agent> agents, std::optional<Vector> planted_x_star,
                                 std::uint64_t seed)
    : agents_(std::move(agents)), planted_(std::move(planted_x_star)), seed_(seed) {
  if (agents_.empty()) throw InvalidInstance("instance: no agents");
  n_ = agents_.front().objective.dim();
  Matrix gram = Matrix::Zero(n_, n_);
  metadata_.ubar_mu = std::numeric_limits<double>::infinity();
  for (const auto& a : agents_) {
    if (a.objective.dim() != n_ || a.constraint.A.cols() != n_)
      throw InvalidInstance("instance: agents do not share dimension n");
    metadata_.L_max = std::max(metadata_.L_max, a.objective.lipschitz);
    metadata_.ubar_mu = std::min(metadata_.ubar_mu, a.objective.strong_convexity);
    gram.noalias() += a.objective.C.transpose() * a.objective.C;
  }
  if (planted_ && planted_->size() != n_)
    throw InvalidInstance("instance: planted x* has wrong dimension");
  metadata_.bar_mu = min_eigenvalue(gram);
  if (!(metadata_.bar_mu > 0.0))
    throw InvalidInstance("instance: sum of local objectives is not strongly convex");
}

Matrix isotonic_matrix(Eigen::Index n) {
  Matrix A = Matrix::Zero(n - 1, n);
  for (Eigen::Index l = 0; l + 1 < n; ++l) {
    A(l, l) = 1.0;
    A(l, l + 1) = -1.0;
  }
  return A;
}

ProblemInstance generate_classo(const ClassoParams& p) {
  if (p.n < 2) throw InvalidInstance("generate_classo: n must be >= 2");
  if (p.m_obs < 1) throw InvalidInstance("generate_classo: m_obs must be >= 1");
  if (p.num_agents < 1) throw InvalidInstance("generate_classo: need at least one agent");
  if (!(p.noise_std >= 0.0)) throw InvalidInstance("generate_classo: noise_std must be >= 0");

  std::mt19937_64 gen(p.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const Eigen::Index q = p.n / 4;
  Vector planted = Vector::Zero(p.n);
  {
    std::uniform_real_distribution<double> neg(-10.0, 0.0), pos(0.0, 10.0);
    std::vector<double> head(q), tail(q);
    for (auto& v : head) v = neg(gen);
    for (auto& v : tail) v = pos(gen);
    std::sort(head.begin(), head.end());
    std::sort(tail.begin(), tail.end());
    for (Eigen::Index j = 0; j < q; ++j) {
      planted(j) = head[j];
      planted(p.n - q + j) = tail[j];
    }
  }

  const Matrix A = isotonic_matrix(p.n);
  const ConicConstraint shared = make_constraint(A, Vector::Zero(p.n - 1), ConeKind::NonpositiveOrthant);
  const double per_agent_weight = p.lasso_weight / static_cast<double>(p.num_agents);

  std::uniform_real_distribution<double> sv_dist(1.0, 3.0);
  std::vector<Agent> agents;
  agents.reserve(p.num_agents);
  for (std::size_t i = 0; i < p.num_agents; ++i) {
    Matrix G(p.m_obs, p.n);
    for (Eigen::Index r = 0; r < G.rows(); ++r)
      for (Eigen::Index c = 0; c < G.cols(); ++c) G(r, c) = gauss(gen);
    Eigen::JacobiSVD<Matrix> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vector s(svd.singularValues().size());
    for (Eigen::Index k = 0; k < s.size(); ++k) s(k) = sv_dist(gen);
    std::sort(s.data(), s.data() + s.size(), std::greater<>());
    Matrix C = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();

    Vector eps(p.n);
    for (Eigen::Index j = 0; j < p.n; ++j) eps(j) = p.noise_std * gauss(gen);
    Vector d = C * (planted + eps);

    agents.push_back({make_objective(std::move(C), std::move(d), per_agent_weight, p.box_half_width),
                      shared});
  }
  return ProblemInstance(std::move(agents), planted, p.seed);
}

Vector local_gradient(const AgentObjective& agent, const Vector& x) {
  if (x.size() != agent.dim()) throw std::invalid_argument("local_gradient: dimension mismatch");
  return agent.C.transpose() * (agent.C * x - agent.d);
}

double smooth_value(const AgentObjective& agent, const Vector& x) {
  if (x.size() != agent.dim()) throw std::invalid_argument("smooth_value: dimension mismatch");
  return 0.5 * (agent.C * x - agent.d).squaredNorm();
}

double nonsmooth_value(const AgentObjective& agent, const Vector& x) {
  if (agent.box_half_width && x.cwiseAbs().maxCoeff() > *agent.box_half_width * (1.0 + 1e-12))
    return std::numeric_limits<double>::infinity();
  return agent.lasso_weight * x.lpNorm<1>();
}

double local_objective(const AgentObjective& agent, const Vector& x) {
  return nonsmooth_value(agent, x) + smooth_value(agent, x);
}

double central_objective(const ProblemInstance& instance, const Vector& x) {
  double total = 0.0;
  for (const auto& a : instance.agents()) total += local_objective(a.objective, x);
  return total;
}

double compute_bar_mu(const ProblemInstance& instance) {
  Matrix gram = Matrix::Zero(instance.n(), instance.n());
  for (const auto& a : instance.agents()) gram.noalias() += a.objective.C.transpose() * a.objective.C;
  return min_eigenvalue(gram);
}

namespace {

nlohmann::json matrix_json(const Matrix& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw InvalidInstance("matrix json: data length does not match shape");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  return m;
}

std::vector<double> vec(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector vec_from(const nlohmann::json& j) {
  const auto d = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(d.data(), static_cast<Eigen::Index>(d.size()));
}

}  // namespace

nlohmann::json to_json(const ProblemInstance& instance) {
  nlohmann::json agents = nlohmann::json::array();
  for (const auto& a : instance.agents()) {
    nlohmann::json ja = {{"C", matrix_json(a.objective.C)},
                         {"d", vec(a.objective.d)},
                         {"lasso_weight", a.objective.lasso_weight},
                         {"A", matrix_json(a.constraint.A)},
                         {"b", vec(a.constraint.b)},
                         {"cone_kind", to_string(a.constraint.cone_kind)}};
    ja["box_half_width"] = a.objective.box_half_width ? nlohmann::json(*a.objective.box_half_width)
                                                      : nlohmann::json(nullptr);
    agents.push_back(std::move(ja));
  }
  const auto& md = instance.metadata();
  nlohmann::json j = {{"n", instance.n()},
                      {"agents", std::move(agents)},
                      {"metadata", {{"L_max", md.L_max}, {"ubar_mu", md.ubar_mu}, {"bar_mu", md.bar_mu}}},
                      {"seed", instance.seed()}};
  j["planted_x_star"] = instance.planted_x_star() ? nlohmann::json(vec(*instance.planted_x_star()))
                                                  : nlohmann::json(nullptr);
  return j;
}

ProblemInstance instance_from_json(const nlohmann::json& j) {
  std::vector<Agent> agents;
  for (const auto& ja : j.at("agents")) {
    std::optional<double> box;
    if (ja.contains("box_half_width") && !ja.at("box_half_width").is_null())
      box = ja.at("box_half_width").get<double>();
    agents.push_back({make_objective(matrix_from_json(ja.at("C")), vec_from(ja.at("d")),
                                     ja.at("lasso_weight").get<double>(), box),
                      make_constraint(matrix_from_json(ja.at("A")), vec_from(ja.at("b")),
                                      cone_kind_from_string(ja.at("cone_kind").get<std::string>()))});
  }
  std::optional<Vector> planted;
  if (j.contains("planted_x_star") && !j.at("planted_x_star").is_null())
    planted = vec_from(j.at("planted_x_star"));
  ProblemInstance inst(std::move(agents), planted, j.value("seed", std::uint64_t{0}));
  if (inst.n() != j.at("n").get<Eigen::Index>()) throw InvalidInstance("instance json: n mismatch");
  return inst;
}

}  // namespace dpda
