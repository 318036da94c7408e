#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dpda/linalg.hpp"

namespace dpda {

using Edge = std::pair<std::size_t, std::size_t>;

// One communication graph. Undirected edges are stored with first < second;
// directed arcs (i, j) mean i sends to j.
struct GraphSnapshot {
  std::size_t num_nodes = 0;
  std::vector<Edge> edges;
  bool directed = false;
  // Undirected: neighbors. Directed: in/out lists, self excluded.
  std::vector<std::vector<std::size_t>> neighbors;
  std::vector<std::vector<std::size_t>> in_neighbors;
  std::vector<std::vector<std::size_t>> out_neighbors;
  // Undirected: |N_i|. Directed: out-degree counting the self-loop.
  std::vector<std::size_t> degrees;

  std::size_t max_degree() const;
};

// Throws std::invalid_argument on self-edges, duplicates or out-of-range ids.
GraphSnapshot make_undirected(std::size_t num_nodes, std::vector<Edge> edges);
GraphSnapshot make_directed(std::size_t num_nodes, std::vector<Edge> arcs);

// Hamiltonian cycle over a random permutation plus uniformly chosen chords.
GraphSnapshot generate_small_world(std::size_t num_nodes, std::size_t num_edges, std::uint64_t seed);

// The 12-node strongly connected digraph used for the directed experiments.
GraphSnapshot fig7_fixture();

enum class SequenceKind { Static, TimeVaryingUndirected, TimeVaryingDirected };

std::string to_string(SequenceKind kind);
SequenceKind sequence_kind_from_string(const std::string& name);

struct GraphSequence {
  GraphSnapshot base;
  std::size_t period = 1;   // M
  double keep_prob = 1.0;   // p
  std::uint64_t seed = 0;
  SequenceKind kind = SequenceKind::Static;
};

// Number of edges kept in each non-final snapshot of a block: ceil(p |E0|).
std::size_t sampled_edge_count(std::size_t base_edges, double keep_prob);

// Snapshot at time t. Within a block of M times, the first M-1 snapshots hold
// independent uniform samples of the base edges and the last holds the
// complement of their union. Pure function of (seed, t).
GraphSnapshot sample_sequence(const GraphSequence& seq, std::uint64_t t);

// Omega: degree on the diagonal, -1 per edge.
Matrix laplacian(const GraphSnapshot& g);
// |E| x N oriented incidence, +1 at the smaller endpoint.
Matrix incidence(const GraphSnapshot& g);
// Smallest eigenvalue above 1e-10 * ||W||.
double lambda2_weighted(const Matrix& W);

bool is_connected(const GraphSnapshot& g);
bool is_strongly_connected(const GraphSnapshot& g);

nlohmann::json to_json(const GraphSnapshot& g);
GraphSnapshot graph_from_json(const nlohmann::json& j);

}  // namespace dpda
