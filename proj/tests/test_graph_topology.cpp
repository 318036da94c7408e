#include <doctest.h>

#include <fstream>
#include <set>

#include "dpda/graph_topology.hpp"
#include "reference.hpp"

using namespace dpda;

namespace {

std::set<Edge> edge_set(const GraphSnapshot& g) { return {g.edges.begin(), g.edges.end()}; }

// Kosaraju SCC count as an independent strong-connectivity oracle.
std::size_t scc_count(const GraphSnapshot& g) {
  const std::size_t n = g.num_nodes;
  std::vector<std::vector<std::size_t>> fwd(n), rev(n);
  for (const auto& [a, b] : g.edges) {
    fwd[a].push_back(b);
    rev[b].push_back(a);
  }
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> order;
  std::function<void(std::size_t)> dfs1 = [&](std::size_t v) {
    seen[v] = true;
    for (auto w : fwd[v])
      if (!seen[w]) dfs1(w);
    order.push_back(v);
  };
  for (std::size_t v = 0; v < n; ++v)
    if (!seen[v]) dfs1(v);
  std::vector<int> comp(n, -1);
  std::function<void(std::size_t, int)> dfs2 = [&](std::size_t v, int c) {
    comp[v] = c;
    for (auto w : rev[v])
      if (comp[w] < 0) dfs2(w, c);
  };
  int c = 0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if (comp[*it] < 0) dfs2(*it, c++);
  return static_cast<std::size_t>(c);
}

}  // namespace

TEST_CASE("snapshot construction") {
  const GraphSnapshot g = make_undirected(3, {{2, 1}, {0, 1}});
  CHECK(g.edges == std::vector<Edge>{{0, 1}, {1, 2}});
  CHECK(g.degrees == std::vector<std::size_t>{1, 2, 1});
  CHECK(g.neighbors[1] == std::vector<std::size_t>{0, 2});
  CHECK_THROWS(make_undirected(3, {{0, 0}}));
  CHECK_THROWS(make_undirected(3, {{0, 1}, {1, 0}}));
  CHECK_THROWS(make_undirected(3, {{0, 3}}));

  const GraphSnapshot d = make_directed(3, {{0, 1}, {1, 2}, {2, 0}, {0, 2}});
  CHECK(d.degrees == std::vector<std::size_t>{3, 2, 2});  // out-degree plus self
  CHECK(d.in_neighbors[2] == std::vector<std::size_t>{0, 1});
  CHECK_THROWS(make_directed(2, {{0, 1}, {0, 1}}));
}

TEST_CASE("generate_small_world") {
  const GraphSnapshot tri = generate_small_world(3, 3, 1);
  CHECK(edge_set(tri) == std::set<Edge>{{0, 1}, {0, 2}, {1, 2}});
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const GraphSnapshot g = generate_small_world(10, 15, seed);
    CHECK(g.edges.size() == 15);
    CHECK(is_connected(g));
    const GraphSnapshot h = generate_small_world(40, 180, seed);
    CHECK(h.edges.size() == 180);
    CHECK(is_connected(h));
  }
  CHECK(edge_set(generate_small_world(10, 20, 5)) == edge_set(generate_small_world(10, 20, 5)));
  CHECK_THROWS(generate_small_world(10, 9, 1));
  CHECK_THROWS(generate_small_world(10, 46, 1));
  CHECK_THROWS(generate_small_world(2, 1, 1));
}

TEST_CASE("sample_sequence") {
  const GraphSnapshot base = generate_small_world(10, 45, 3);
  GraphSequence seq{base, 5, 0.8, 77, SequenceKind::TimeVaryingUndirected};
  CHECK(sampled_edge_count(45, 0.8) == 36);
  for (std::uint64_t block = 0; block < 20; ++block) {
    std::set<Edge> uni;
    for (std::uint64_t p = 0; p < 5; ++p) {
      const GraphSnapshot s = sample_sequence(seq, block * 5 + p);
      if (p < 4) CHECK(s.edges.size() == 36);
      for (const auto& e : s.edges) {
        CHECK(edge_set(base).count(e) == 1);
        uni.insert(e);
      }
    }
    CHECK(uni == edge_set(base));
  }
  CHECK(sample_sequence(seq, 13).edges == sample_sequence(seq, 13).edges);
  GraphSequence other = seq;
  other.seed = 78;
  bool differs = false;
  for (std::uint64_t t = 0; t < 4; ++t) differs = differs || sample_sequence(other, t).edges != sample_sequence(seq, t).edges;
  CHECK(differs);

  seq.keep_prob = 1.0;
  for (std::uint64_t t = 0; t < 10; ++t) {
    const GraphSnapshot s = sample_sequence(seq, t);
    if (t % 5 == 4)
      CHECK(s.edges.empty());
    else
      CHECK(s.edges == base.edges);
  }

  GraphSequence directed{fig7_fixture(), 5, 0.8, 4, SequenceKind::TimeVaryingDirected};
  std::set<Edge> uni;
  for (std::uint64_t t = 5; t < 10; ++t)
    for (const auto& e : sample_sequence(directed, t).edges) uni.insert(e);
  CHECK(uni == edge_set(fig7_fixture()));
  CHECK(sample_sequence(directed, 0).directed);
  directed.kind = SequenceKind::TimeVaryingUndirected;
  CHECK_THROWS(sample_sequence(directed, 0));
}

TEST_CASE("fig7 fixture") {
  const GraphSnapshot g = fig7_fixture();
  CHECK(g.num_nodes == 12);
  CHECK(g.directed);
  CHECK(is_strongly_connected(g));
  CHECK(scc_count(g) == 1);
  const auto arcs = edge_set(g);
  CHECK(arcs.count({9, 6}) == 1);  // 10 -> 7 in 1-based labels
  CHECK(arcs.count({6, 9}) == 0);
  CHECK(arcs.count({7, 5}) == 1);  // the bidirectional pair 8 <-> 6
  CHECK(arcs.count({5, 7}) == 1);

  std::ifstream in(std::string(DPDA_DATA_DIR) + "/fig7_digraph.json");
  REQUIRE(in);
  const GraphSnapshot file = graph_from_json(nlohmann::json::parse(in));
  CHECK(file.edges == g.edges);
  CHECK(graph_from_json(to_json(g)).edges == g.edges);
}

TEST_CASE("laplacian and incidence") {
  const GraphSnapshot path = make_undirected(3, {{0, 1}, {1, 2}});
  Matrix expected(3, 3);
  expected << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  CHECK((laplacian(path) - expected).norm() == 0.0);
  const Matrix H = incidence(path);
  CHECK(H(0, 0) == 1.0);
  CHECK(H(0, 1) == -1.0);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const GraphSnapshot g = generate_small_world(8, 8 + seed % 20, seed);
    const Matrix L = laplacian(g);
    const Matrix I = incidence(g);
    CHECK((I.transpose() * I - L).norm() == 0.0);
    CHECK((L * Vector::Ones(8)).norm() == 0.0);
    Vector deg(8);
    for (int i = 0; i < 8; ++i) deg(i) = static_cast<double>(g.degrees[i]);
    CHECK(min_eigenvalue(Matrix(2.0 * deg.asDiagonal()) - L) >= -1e-12);
  }
  CHECK_THROWS(laplacian(fig7_fixture()));
  CHECK_THROWS(incidence(fig7_fixture()));
}

TEST_CASE("lambda2_weighted") {
  CHECK(lambda2_weighted(laplacian(make_undirected(3, {{0, 1}, {0, 2}, {1, 2}}))) == doctest::Approx(3.0));
  CHECK(lambda2_weighted(laplacian(make_undirected(2, {{0, 1}}))) == doctest::Approx(2.0));
  Matrix asym = Matrix::Zero(2, 2);
  asym(0, 1) = 1.0;
  CHECK_THROWS(lambda2_weighted(asym));

  // Power iteration on (c I - L) restricted to the complement of 1.
  const GraphSnapshot g = generate_small_world(12, 20, 8);
  const Matrix L = laplacian(g);
  const double c = 2.0 * static_cast<double>(g.max_degree()) + 1.0;
  const Matrix B = c * Matrix::Identity(12, 12) - L;
  Vector v = ref::vec({1, -2, 3, 0.5, -1, 2, 0.1, -0.7, 1.1, -0.2, 0.9, -0.4});
  double top = 0.0;
  for (int it = 0; it < 20000; ++it) {
    v -= Vector::Constant(12, v.mean());
    Vector w = B * v;
    top = v.dot(w) / v.dot(v);
    v = w / w.norm();
  }
  CHECK(std::abs(lambda2_weighted(L) - (c - top)) < 1e-8);
}
