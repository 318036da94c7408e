#include "dpda/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace dpda {

std::string to_string(MixingMode mode) {
  switch (mode) {
    case MixingMode::Exact: return "exact";
    case MixingMode::MetropolisUndirected: return "metropolis";
    case MixingMode::PushSumDirected: return "push_sum";
  }
  throw std::invalid_argument("unknown mixing mode");
}

MixingMode mixing_mode_from_string(const std::string& name) {
  if (name == "exact") return MixingMode::Exact;
  if (name == "metropolis") return MixingMode::MetropolisUndirected;
  if (name == "push_sum") return MixingMode::PushSumDirected;
  throw std::invalid_argument("unknown mixing mode: " + name);
}

namespace {

using WideVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
using WideBlocks = std::vector<WideVector>;

WideBlocks widen(const BlockVector& x) {
  WideBlocks out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i].cast<long double>();
  return out;
}

BlockVector narrow(const WideBlocks& x) {
  BlockVector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i].cast<double>();
  return out;
}

}  // namespace

BlockVector exact_average(const BlockVector& x) {
  if (x.empty()) return {};
  WideVector mean = WideVector::Zero(x.front().size());
  for (const auto& b : x) {
    if (b.size() != mean.size()) throw std::invalid_argument("exact_average: ragged blocks");
    mean += b.cast<long double>();
  }
  mean /= static_cast<long double>(x.size());
  return BlockVector(x.size(), mean.cast<double>());
}

Matrix metropolis_matrix(const GraphSnapshot& g) {
  if (g.directed) throw std::invalid_argument("metropolis_matrix: directed graph");
  const auto n = static_cast<Eigen::Index>(g.num_nodes);
  Matrix V = Matrix::Zero(n, n);
  for (const auto& [a, b] : g.edges) {
    const double w = 1.0 / (static_cast<double>(std::max(g.degrees[a], g.degrees[b])) + 1.0);
    V(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = w;
    V(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = w;
  }
  for (Eigen::Index i = 0; i < n; ++i) V(i, i) = 1.0 - V.row(i).sum();
  return V;
}

Matrix directed_matrix(const GraphSnapshot& g) {
  if (!g.directed) throw std::invalid_argument("directed_matrix: undirected graph");
  const auto n = static_cast<Eigen::Index>(g.num_nodes);
  Matrix V = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double w = 1.0 / static_cast<double>(g.degrees[static_cast<std::size_t>(j)]);
    V(j, j) = w;
    for (std::size_t i : g.out_neighbors[static_cast<std::size_t>(j)]) V(static_cast<Eigen::Index>(i), j) = w;
  }
  return V;
}

MixingSession::MixingSession(GraphSequence sequence, MixingMode mode, std::uint64_t start_clock)
    : seq_(std::move(sequence)), mode_(mode), clock_(start_clock) {
  if (mode_ == MixingMode::MetropolisUndirected && seq_.base.directed)
    throw std::invalid_argument("mixing: Metropolis weights need an undirected sequence");
  if (mode_ == MixingMode::PushSumDirected && !seq_.base.directed)
    throw std::invalid_argument("mixing: push-sum needs a directed sequence");
}

const GraphSnapshot& MixingSession::snapshot(std::uint64_t t) {
  if (seq_.kind == SequenceKind::Static) return seq_.base;
  const std::uint64_t block = t / seq_.period;
  if (block != cached_block_) {
    block_cache_.clear();
    for (std::uint64_t p = 0; p < seq_.period; ++p)
      block_cache_.push_back(sample_sequence(seq_, block * seq_.period + p));
    cached_block_ = block;
  }
  return block_cache_[t % seq_.period];
}

void MixingSession::metropolis_round(std::uint64_t t, WideBlocks& x) {
  const GraphSnapshot& g = snapshot(t);
  // Each node receives (x_j, d_j) from its neighbors.
  WideBlocks next(x.size());
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    WideVector acc = WideVector::Zero(x[i].size());
    long double self = 1.0L;
    for (std::size_t j : g.neighbors[i]) {
      if (observer_) observer_(t, j, i);
      const long double w = 1.0L / (static_cast<long double>(std::max(g.degrees[i], g.degrees[j])) + 1.0L);
      acc += w * x[j];
      self -= w;
    }
    next[i] = acc + self * x[i];
  }
  x = std::move(next);
}

void MixingSession::push_sum_round(std::uint64_t t, WideBlocks& z, std::vector<long double>& w) {
  const GraphSnapshot& g = snapshot(t);
  WideBlocks next_z(z.size());
  std::vector<long double> next_w(w.size(), 0.0L);
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    const long double share = 1.0L / static_cast<long double>(g.degrees[i]);
    next_z[i] = share * z[i];
    next_w[i] = share * w[i];
  }
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    for (std::size_t j : g.in_neighbors[i]) {
      if (observer_) observer_(t, j, i);
      const long double share = 1.0L / static_cast<long double>(g.degrees[j]);
      next_z[i] += share * z[j];
      next_w[i] += share * w[j];
    }
  }
  z = std::move(next_z);
  w = std::move(next_w);
}

PushSumState MixingSession::push_sum_raw(const BlockVector& x, std::size_t q) {
  if (mode_ != MixingMode::PushSumDirected) throw std::invalid_argument("push_sum_raw: session is not push-sum");
  if (q < 1) throw std::invalid_argument("approx_average: q must be >= 1");
  if (x.size() != seq_.base.num_nodes) throw std::invalid_argument("approx_average: block count mismatch");
  WideBlocks z = widen(x);
  std::vector<long double> w(x.size(), 1.0L);
  for (std::size_t r = 0; r < q; ++r) push_sum_round(clock_ + r, z, w);
  clock_ += q;
  return {narrow(z), std::vector<double>(w.begin(), w.end())};
}

BlockVector MixingSession::approx_average(const BlockVector& x, std::size_t q) {
  if (q < 1) throw std::invalid_argument("approx_average: q must be >= 1");
  if (x.size() != seq_.base.num_nodes) throw std::invalid_argument("approx_average: block count mismatch");
  switch (mode_) {
    case MixingMode::Exact:
      clock_ += q;
      return exact_average(x);
    case MixingMode::MetropolisUndirected: {
      WideBlocks y = widen(x);
      for (std::size_t r = 0; r < q; ++r) metropolis_round(clock_ + r, y);
      clock_ += q;
      return narrow(y);
    }
    case MixingMode::PushSumDirected: {
      WideBlocks z = widen(x);
      std::vector<long double> w(x.size(), 1.0L);
      for (std::size_t r = 0; r < q; ++r) push_sum_round(clock_ + r, z, w);
      clock_ += q;
      for (std::size_t i = 0; i < z.size(); ++i) z[i] /= w[i];
      return narrow(z);
    }
  }
  throw std::invalid_argument("unknown mixing mode");
}

std::vector<double> MixingSession::error_profile(const BlockVector& x, std::size_t q) {
  const BlockVector target = exact_average(x);
  auto err = [&](const BlockVector& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - target[i]).squaredNorm();
    return std::sqrt(s);
  };
  std::vector<double> out;
  out.reserve(q);
  if (mode_ == MixingMode::Exact) {
    out.assign(q, 0.0);
    clock_ += q;
    return out;
  }
  WideBlocks z = widen(x);
  std::vector<long double> w(x.size(), 1.0L);
  for (std::size_t r = 0; r < q; ++r) {
    if (mode_ == MixingMode::MetropolisUndirected) {
      metropolis_round(clock_ + r, z);
      out.push_back(err(narrow(z)));
    } else {
      push_sum_round(clock_ + r, z, w);
      WideBlocks ratio(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) ratio[i] = z[i] / w[i];
      out.push_back(err(narrow(ratio)));
    }
  }
  clock_ += q;
  return out;
}

DecayEstimate estimate_decay(const GraphSequence& sequence, MixingMode mode, std::size_t trials,
                             std::size_t rounds_max, std::uint64_t seed, Eigen::Index block_dim) {
  if (trials < 1) throw std::invalid_argument("estimate_decay: trials must be >= 1");
  if (rounds_max < 2) throw std::invalid_argument("estimate_decay: rounds_max must be >= 2");
  const std::size_t N = sequence.base.num_nodes;
  DecayEstimate est;
  est.num_nodes = N;
  est.errors.assign(rounds_max, 0.0);

  std::mt19937_64 gen(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t tr = 0; tr < trials; ++tr) {
    BlockVector w(N, Vector(block_dim));
    for (auto& b : w)
      for (Eigen::Index k = 0; k < block_dim; ++k) b(k) = gauss(gen);
    const double nrm = norm(w);
    for (auto& b : w) b /= nrm;
    // Trials start at staggered times so several windows of the sequence are seen.
    MixingSession session(sequence, mode, tr * rounds_max);
    const auto e = session.error_profile(w, rounds_max);
    for (std::size_t q = 0; q < rounds_max; ++q) est.errors[q] = std::max(est.errors[q], e[q]);
  }

  constexpr double floor = 1e-13;
  std::size_t usable = rounds_max;
  for (std::size_t q = 0; q < rounds_max; ++q)
    if (est.errors[q] < floor) {
      usable = q;
      est.degenerate = true;
      break;
    }
  if (usable == 0) {
    est.beta = 0.0;
    est.Gamma = 0.0;
    return est;
  }
  // Least squares over the tail half of the usable prefix (q is 1-based).
  const std::size_t lo = usable / 2;
  const std::size_t count = usable - lo;
  if (count < 2) {
    // One usable point: take N Gamma = 1.
    est.beta = est.errors[0];
    est.Gamma = 1.0 / static_cast<double>(N);
    return est;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t q = lo; q < usable; ++q) {
    const double xq = static_cast<double>(q + 1);
    const double yq = std::log(est.errors[q]);
    sx += xq;
    sy += yq;
    sxx += xq * xq;
    sxy += xq * yq;
  }
  const double c = static_cast<double>(count);
  const double slope = (c * sxy - sx * sy) / (c * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / c;
  est.beta = std::exp(slope);
  est.Gamma = std::exp(intercept) / static_cast<double>(N);
  return est;
}

std::string decay_csv(const DecayEstimate& est) {
  std::ostringstream os;
  os.precision(17);
  os << "q,error,fitted\n";
  for (std::size_t q = 0; q < est.errors.size(); ++q) {
    const double fitted =
        static_cast<double>(est.num_nodes) * est.Gamma * std::pow(est.beta, static_cast<double>(q + 1));
    os << (q + 1) << ',' << est.errors[q] << ',' << fitted << '\n';
  }
  return os.str();
}

}  // namespace dpda
