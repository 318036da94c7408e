#include "dpda/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

namespace dpda {

const MetricEnvelope& AveragedTrace::metric(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return envelopes[i];
  throw std::out_of_range("averaged trace has no metric " + name);
}

ReplicationFailed::ReplicationFailed(std::size_t index_, const std::string& what)
    : std::runtime_error("replication " + std::to_string(index_) + " failed: " + what), index(index_) {}

double metric_value(const MetricRow& r, const std::string& name) {
  if (name == "t_k") return static_cast<double>(r.t_k);
  if (name == "suboptimality") return r.suboptimality;
  if (name == "infeasibility") return r.infeasibility;
  if (name == "consensus_violation") return r.consensus_violation;
  if (name == "relative_error_last") return r.relative_error_last;
  if (name == "relative_error_ergodic") return r.relative_error_ergodic;
  if (name == "theorem_bound") return r.theorem_bound;
  if (name == "N_K") return r.N_K;
  if (name == "bound_lhs") return r.bound_lhs;
  if (name == "iterate_error_sq") return r.iterate_error_sq;
  if (name == "iterate_bound") return r.iterate_bound;
  if (name == "lower_bound_value") return r.lower_bound_value;
  if (name == "accumulation") return r.accumulation;
  throw std::invalid_argument("unknown metric: " + name);
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& body) {
  if (count == 0) return;
  jobs = std::clamp<std::size_t>(jobs, 1, count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<MetricTrace> run_replications(std::size_t replications, std::size_t jobs,
                                          const std::function<MetricTrace(std::size_t)>& one) {
  if (replications < 1) throw std::invalid_argument("run_replications: need at least one replication");
  std::vector<MetricTrace> out(replications);
  parallel_for(replications, jobs, [&](std::size_t r) {
    try {
      out[r] = one(r);
    } catch (const std::exception& e) {
      throw ReplicationFailed(r, e.what());
    }
  });
  return out;
}

AveragedTrace average_traces(const std::vector<MetricTrace>& traces) {
  if (traces.empty()) throw std::invalid_argument("average_traces: no traces");
  AveragedTrace avg;
  avg.replications = traces.size();
  for (const auto& row : traces.front().rows) avg.k.push_back(row.k);
  for (const auto& t : traces) {
    if (t.rows.size() != avg.k.size()) throw std::invalid_argument("average_traces: logged k values differ");
    for (std::size_t i = 0; i < avg.k.size(); ++i)
      if (t.rows[i].k != avg.k[i]) throw std::invalid_argument("average_traces: logged k values differ");
  }
  const auto cols = trace_columns();
  avg.names.assign(cols.begin() + 1, cols.end());
  const double n = static_cast<double>(traces.size());
  for (const auto& name : avg.names) {
    MetricEnvelope env;
    for (std::size_t i = 0; i < avg.k.size(); ++i) {
      double sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const auto& t : traces) {
        const double v = metric_value(t.rows[i], name);
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (std::isnan(sum)) lo = hi = sum;
      env.mean.push_back(sum / n);
      env.min.push_back(lo);
      env.max.push_back(hi);
    }
    avg.envelopes.push_back(std::move(env));
  }
  return avg;
}

std::string averaged_csv(const AveragedTrace& avg) {
  std::ostringstream os;
  os.precision(17);
  os << 'k';
  for (const auto& name : avg.names) os << ',' << name << "_mean," << name << "_min," << name << "_max";
  os << '\n';
  for (std::size_t i = 0; i < avg.k.size(); ++i) {
    os << avg.k[i];
    for (const auto& env : avg.envelopes) os << ',' << env.mean[i] << ',' << env.min[i] << ',' << env.max[i];
    os << '\n';
  }
  return os.str();
}

}  // namespace dpda
