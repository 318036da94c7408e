#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dpda/graph_topology.hpp"
#include "dpda/linalg.hpp"

namespace dpda {

enum class MixingMode { Exact, MetropolisUndirected, PushSumDirected };

std::string to_string(MixingMode mode);
MixingMode mixing_mode_from_string(const std::string& name);

// Blockwise mean replicated to every block.
BlockVector exact_average(const BlockVector& x);

// Dense single-round matrices. Test oracles and diagnostics only; the session
// below works with per-node messages.
Matrix metropolis_matrix(const GraphSnapshot& g);
Matrix directed_matrix(const GraphSnapshot& g);

// Called once per message: (global round index, sender, receiver).
using MessageObserver = std::function<void(std::uint64_t, std::size_t, std::size_t)>;

struct PushSumState {
  BlockVector values;          // z, before division
  std::vector<double> weights; // w
};

class MixingSession {
 public:
  // Throws std::invalid_argument when mode and graph direction disagree.
  MixingSession(GraphSequence sequence, MixingMode mode, std::uint64_t start_clock = 0);

  // q rounds on the snapshots t_k+1 ... t_k+q (0-based: t_k ... t_k+q-1),
  // then the clock advances by q.
  BlockVector approx_average(const BlockVector& x, std::size_t q);
  // Push-sum numerators and weights after q rounds, without the division.
  PushSumState push_sum_raw(const BlockVector& x, std::size_t q);

  // Errors ||R(x; r) - P_C x|| for r = 1..q, computed in one pass.
  std::vector<double> error_profile(const BlockVector& x, std::size_t q);

  std::uint64_t clock() const { return clock_; }
  MixingMode mode() const { return mode_; }
  const GraphSequence& sequence() const { return seq_; }
  void set_observer(MessageObserver observer) { observer_ = std::move(observer); }

  // Snapshot used by round t (cached per block).
  const GraphSnapshot& snapshot(std::uint64_t t);

 private:
  // Rounds run in extended precision; results are rounded to double once.
  using WideVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  using WideBlocks = std::vector<WideVector>;

  void metropolis_round(std::uint64_t t, WideBlocks& x);
  void push_sum_round(std::uint64_t t, WideBlocks& z, std::vector<long double>& w);

  GraphSequence seq_;
  MixingMode mode_;
  std::uint64_t clock_;
  MessageObserver observer_;
  std::uint64_t cached_block_ = UINT64_MAX;
  std::vector<GraphSnapshot> block_cache_;
};

struct DecayEstimate {
  double Gamma = 0.0;
  double beta = 0.0;
  bool degenerate = false;      // errors reached machine zero before the fit window
  std::size_t num_nodes = 0;
  std::vector<double> errors;   // worst e(q) over trials, q = 1..rounds_max
};

// Fits log e(q) ~ log(N Gamma) + q log(beta) over the tail half of rounds.
DecayEstimate estimate_decay(const GraphSequence& sequence, MixingMode mode, std::size_t trials,
                             std::size_t rounds_max, std::uint64_t seed, Eigen::Index block_dim = 1);

// CSV with header q,error,fitted.
std::string decay_csv(const DecayEstimate& est);

}  // namespace dpda
