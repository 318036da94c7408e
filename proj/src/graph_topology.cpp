#include "dpda/graph_topology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <random>
#include <set>
#include <stdexcept>

namespace dpda {

std::size_t GraphSnapshot::max_degree() const {
  return degrees.empty() ? 0 : *std::max_element(degrees.begin(), degrees.end());
}

namespace {

void check_edges(std::size_t n, const std::vector<Edge>& edges) {
  std::set<Edge> seen;
  for (const auto& [a, b] : edges) {
    if (a >= n || b >= n) throw std::invalid_argument("graph: node index out of range");
    if (a == b) throw std::invalid_argument("graph: self-edge");
    if (!seen.insert({a, b}).second) throw std::invalid_argument("graph: duplicate edge");
  }
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

GraphSnapshot make_undirected(std::size_t num_nodes, std::vector<Edge> edges) {
  for (auto& e : edges)
    if (e.first > e.second) std::swap(e.first, e.second);
  std::sort(edges.begin(), edges.end());
  check_edges(num_nodes, edges);
  GraphSnapshot g;
  g.num_nodes = num_nodes;
  g.directed = false;
  g.neighbors.assign(num_nodes, {});
  for (const auto& [a, b] : edges) {
    g.neighbors[a].push_back(b);
    g.neighbors[b].push_back(a);
  }
  g.degrees.resize(num_nodes);
  for (std::size_t i = 0; i < num_nodes; ++i) {
    std::sort(g.neighbors[i].begin(), g.neighbors[i].end());
    g.degrees[i] = g.neighbors[i].size();
  }
  g.edges = std::move(edges);
  return g;
}

GraphSnapshot make_directed(std::size_t num_nodes, std::vector<Edge> arcs) {
  std::sort(arcs.begin(), arcs.end());
  check_edges(num_nodes, arcs);
  GraphSnapshot g;
  g.num_nodes = num_nodes;
  g.directed = true;
  g.in_neighbors.assign(num_nodes, {});
  g.out_neighbors.assign(num_nodes, {});
  for (const auto& [a, b] : arcs) {
    g.out_neighbors[a].push_back(b);
    g.in_neighbors[b].push_back(a);
  }
  g.degrees.resize(num_nodes);
  for (std::size_t i = 0; i < num_nodes; ++i) {
    std::sort(g.in_neighbors[i].begin(), g.in_neighbors[i].end());
    std::sort(g.out_neighbors[i].begin(), g.out_neighbors[i].end());
    g.degrees[i] = g.out_neighbors[i].size() + 1;
  }
  g.edges = std::move(arcs);
  return g;
}

GraphSnapshot generate_small_world(std::size_t num_nodes, std::size_t num_edges, std::uint64_t seed) {
  if (num_nodes < 3) throw std::invalid_argument("generate_small_world: need at least 3 nodes");
  const std::size_t max_edges = num_nodes * (num_nodes - 1) / 2;
  if (num_edges < num_nodes || num_edges > max_edges)
    throw std::invalid_argument("generate_small_world: infeasible edge count");

  std::mt19937_64 gen(seed);
  std::vector<std::size_t> perm(num_nodes);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), gen);

  std::set<Edge> cycle;
  for (std::size_t k = 0; k < num_nodes; ++k) {
    std::size_t a = perm[k], b = perm[(k + 1) % num_nodes];
    cycle.insert({std::min(a, b), std::max(a, b)});
  }
  std::vector<Edge> chords;
  for (std::size_t a = 0; a < num_nodes; ++a)
    for (std::size_t b = a + 1; b < num_nodes; ++b)
      if (!cycle.count({a, b})) chords.push_back({a, b});
  std::shuffle(chords.begin(), chords.end(), gen);

  std::vector<Edge> edges(cycle.begin(), cycle.end());
  edges.insert(edges.end(), chords.begin(), chords.begin() + static_cast<long>(num_edges - num_nodes));
  return make_undirected(num_nodes, std::move(edges));
}

GraphSnapshot fig7_fixture() {
  // Arcs as drawn, 1-based.
  static const std::vector<Edge> drawn = {
      {1, 10}, {1, 6},  {8, 1},  {8, 10}, {8, 6},  {6, 8},  {6, 3},  {11, 1},
      {9, 11}, {9, 3},  {9, 5},  {4, 9},  {4, 11}, {7, 4},  {7, 12}, {7, 6},
      {2, 10}, {12, 6}, {12, 2}, {12, 5}, {3, 12}, {5, 3},  {10, 7}, {10, 5}};
  std::vector<Edge> arcs;
  arcs.reserve(drawn.size());
  for (const auto& [a, b] : drawn) arcs.push_back({a - 1, b - 1});
  return make_directed(12, std::move(arcs));
}

std::string to_string(SequenceKind kind) {
  switch (kind) {
    case SequenceKind::Static: return "static";
    case SequenceKind::TimeVaryingUndirected: return "tv_undirected";
    case SequenceKind::TimeVaryingDirected: return "tv_directed";
  }
  throw std::invalid_argument("unknown sequence kind");
}

SequenceKind sequence_kind_from_string(const std::string& name) {
  if (name == "static") return SequenceKind::Static;
  if (name == "tv_undirected") return SequenceKind::TimeVaryingUndirected;
  if (name == "tv_directed") return SequenceKind::TimeVaryingDirected;
  throw std::invalid_argument("unknown sequence kind: " + name);
}

std::size_t sampled_edge_count(std::size_t base_edges, double keep_prob) {
  if (!(keep_prob >= 0.0 && keep_prob <= 1.0)) throw std::invalid_argument("keep_prob must be in [0,1]");
  // Guard against 0.8 * 45 = 36.000000000000004.
  const double raw = keep_prob * static_cast<double>(base_edges);
  return std::min(base_edges, static_cast<std::size_t>(std::ceil(raw - 1e-9)));
}

namespace {

std::vector<std::size_t> sample_indices(const GraphSequence& seq, std::uint64_t block, std::uint64_t pos) {
  const std::size_t total = seq.base.edges.size();
  const std::size_t keep = sampled_edge_count(total, seq.keep_prob);
  std::mt19937_64 gen(mix(mix(mix(seq.seed) ^ block) ^ (pos + 0x51ed27ULL)));
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates.
  for (std::size_t k = 0; k < keep; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, total - 1);
    std::swap(idx[k], idx[pick(gen)]);
  }
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  return idx;
}

GraphSnapshot from_base_subset(const GraphSnapshot& base, const std::vector<std::size_t>& idx) {
  std::vector<Edge> edges;
  edges.reserve(idx.size());
  for (std::size_t k : idx) edges.push_back(base.edges[k]);
  return base.directed ? make_directed(base.num_nodes, std::move(edges))
                       : make_undirected(base.num_nodes, std::move(edges));
}

}  // namespace

GraphSnapshot sample_sequence(const GraphSequence& seq, std::uint64_t t) {
  if (seq.kind == SequenceKind::Static) return seq.base;
  if (seq.period < 1) throw std::invalid_argument("sample_sequence: period must be >= 1");
  if ((seq.kind == SequenceKind::TimeVaryingDirected) != seq.base.directed)
    throw std::invalid_argument("sample_sequence: sequence kind does not match base graph");

  const std::uint64_t block = t / seq.period;
  const std::uint64_t pos = t % seq.period;
  if (pos + 1 < seq.period) return from_base_subset(seq.base, sample_indices(seq, block, pos));

  std::vector<bool> covered(seq.base.edges.size(), false);
  for (std::uint64_t p = 0; p + 1 < seq.period; ++p)
    for (std::size_t k : sample_indices(seq, block, p)) covered[k] = true;
  std::vector<std::size_t> rest;
  for (std::size_t k = 0; k < covered.size(); ++k)
    if (!covered[k]) rest.push_back(k);
  return from_base_subset(seq.base, rest);
}

Matrix laplacian(const GraphSnapshot& g) {
  if (g.directed) throw std::invalid_argument("laplacian: directed graph");
  Matrix L = Matrix::Zero(static_cast<Eigen::Index>(g.num_nodes), static_cast<Eigen::Index>(g.num_nodes));
  for (const auto& [a, b] : g.edges) {
    const auto i = static_cast<Eigen::Index>(a), j = static_cast<Eigen::Index>(b);
    L(i, j) -= 1.0;
    L(j, i) -= 1.0;
    L(i, i) += 1.0;
    L(j, j) += 1.0;
  }
  return L;
}

Matrix incidence(const GraphSnapshot& g) {
  if (g.directed) throw std::invalid_argument("incidence: directed graph");
  Matrix H = Matrix::Zero(static_cast<Eigen::Index>(g.edges.size()), static_cast<Eigen::Index>(g.num_nodes));
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto r = static_cast<Eigen::Index>(e);
    H(r, static_cast<Eigen::Index>(g.edges[e].first)) = 1.0;
    H(r, static_cast<Eigen::Index>(g.edges[e].second)) = -1.0;
  }
  return H;
}

double lambda2_weighted(const Matrix& W) {
  if (W.rows() != W.cols() || !W.isApprox(W.transpose(), 1e-12))
    throw std::invalid_argument("lambda2_weighted: matrix is not symmetric");
  const Vector ev = symmetric_eigenvalues(W);
  const double cutoff = 1e-10 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index k = 0; k < ev.size(); ++k)
    if (ev(k) > cutoff) return ev(k);
  throw std::invalid_argument("lambda2_weighted: no positive eigenvalue");
}

namespace {

std::size_t reach_count(std::size_t n, const std::vector<std::vector<std::size_t>>& adj) {
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> q;
  seen[0] = true;
  q.push(0);
  std::size_t count = 1;
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    for (std::size_t v : adj[u])
      if (!seen[v]) {
        seen[v] = true;
        ++count;
        q.push(v);
      }
  }
  return count;
}

}  // namespace

bool is_connected(const GraphSnapshot& g) {
  if (g.num_nodes <= 1) return true;
  if (g.directed) {
    std::vector<std::vector<std::size_t>> und(g.num_nodes);
    for (const auto& [a, b] : g.edges) {
      und[a].push_back(b);
      und[b].push_back(a);
    }
    return reach_count(g.num_nodes, und) == g.num_nodes;
  }
  return reach_count(g.num_nodes, g.neighbors) == g.num_nodes;
}

bool is_strongly_connected(const GraphSnapshot& g) {
  if (!g.directed) return is_connected(g);
  if (g.num_nodes <= 1) return true;
  return reach_count(g.num_nodes, g.out_neighbors) == g.num_nodes &&
         reach_count(g.num_nodes, g.in_neighbors) == g.num_nodes;
}

nlohmann::json to_json(const GraphSnapshot& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [a, b] : g.edges) edges.push_back({a, b});
  return {{"num_nodes", g.num_nodes}, {"directed", g.directed}, {"edges", edges}};
}

GraphSnapshot graph_from_json(const nlohmann::json& j) {
  std::vector<Edge> edges;
  for (const auto& e : j.at("edges")) edges.push_back({e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>()});
  const auto n = j.at("num_nodes").get<std::size_t>();
  return j.value("directed", false) ? make_directed(n, std::move(edges)) : make_undirected(n, std::move(edges));
}

}  // namespace dpda
