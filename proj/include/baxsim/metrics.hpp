#pragma once

#include <optional>
#include <vector>

#include "baxsim/simnet.hpp"
#include "baxsim/workload.hpp"

namespace baxsim {

struct MetricsAggregate {
    uint64_t submitted = 0;
    uint64_t committed = 0; // responses within the client timeout
    uint64_t failed = 0;
    uint64_t inflight = 0; // unanswered at the horizon, under the timeout

    std::vector<uint32_t> committed_per_second;
    std::optional<double> median_ms;
    std::optional<double> p99_ms;

    std::vector<double> ingress_kbs; // per replica, includes client legs
    std::vector<double> egress_kbs;
    double bandwidth_stddev_kbs = 0; // population stddev of in+out rates

    double retries_per_commit = 0;
    double gini_commits = 0; // over per-replica counts of won slots

    double committed_rate(double from_s, double to_s) const;
    bool empty() const { return submitted == 0; }
};

// Nearest-rank percentile: sorted[ceil(q*N) - 1]. The test suite checks this
// against a full-sort oracle.
double percentile(std::vector<double> values, double q);

double population_stddev(const std::vector<double>& values);

// Gini coefficient of non-negative counts; 0 when all equal or empty.
double gini(const std::vector<uint64_t>& counts);

MetricsAggregate aggregate(const std::vector<RequestRecord>& records,
                           const NetCounters& counters,
                           const std::vector<std::vector<LogEntry>>& logs,
                           uint64_t total_retries, SimTime horizon);

} // namespace baxsim
