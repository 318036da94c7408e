#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpda/metrics.hpp"

namespace dpda {

// Pointwise statistics of one metric across replications.
struct MetricEnvelope {
  std::vector<double> mean;
  std::vector<double> min;
  std::vector<double> max;
};

struct AveragedTrace {
  std::size_t replications = 0;
  std::vector<std::size_t> k;
  std::vector<std::string> names;         // metric order, as in trace_columns() minus k
  std::vector<MetricEnvelope> envelopes;  // parallel to names

  const MetricEnvelope& metric(const std::string& name) const;
};

class ReplicationFailed : public std::runtime_error {
 public:
  ReplicationFailed(std::size_t index, const std::string& what);
  std::size_t index;
};

// Calls body(i) for i = 0..count-1 on up to `jobs` threads and rethrows the
// first failure by index.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& body);

// Runs `one(r)` for r = 0..replications-1 on up to `jobs` threads. Results
// are stored by index, so the output does not depend on scheduling.
std::vector<MetricTrace> run_replications(std::size_t replications, std::size_t jobs,
                                          const std::function<MetricTrace(std::size_t)>& one);

// All traces must share the same logged k values.
AveragedTrace average_traces(const std::vector<MetricTrace>& traces);

// Header: k, then <metric>_mean,<metric>_min,<metric>_max per metric.
std::string averaged_csv(const AveragedTrace& avg);

// Metric value by column name (t_k included).
double metric_value(const MetricRow& row, const std::string& name);

}  // namespace dpda
