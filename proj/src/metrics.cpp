#include "baxsim/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace baxsim {

double percentile(std::vector<double> values, double q) {
    if (values.empty()) return 0;
    const size_t rank = static_cast<size_t>(
        std::ceil(q * static_cast<double>(values.size())));
    const size_t idx = rank == 0 ? 0 : rank - 1;
    std::nth_element(values.begin(), values.begin() + static_cast<long>(idx), values.end());
    return values[idx];
}

double population_stddev(const std::vector<double>& values) {
    if (values.empty()) return 0;
    double mean = 0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0;
    for (double v : values) var += (v - mean) * (v - mean);
    return std::sqrt(var / static_cast<double>(values.size()));
}

double gini(const std::vector<uint64_t>& counts) {
    if (counts.empty()) return 0;
    double total = 0;
    for (uint64_t c : counts) total += static_cast<double>(c);
    if (total == 0) return 0;
    double abs_diff = 0;
    for (uint64_t a : counts)
        for (uint64_t b : counts)
            abs_diff += std::abs(static_cast<double>(a) - static_cast<double>(b));
    const double n = static_cast<double>(counts.size());
    return abs_diff / (2.0 * n * total);
}

double MetricsAggregate::committed_rate(double from_s, double to_s) const {
    if (to_s <= from_s) return 0;
    double sum = 0;
    const size_t lo = static_cast<size_t>(std::max(0.0, from_s));
    const size_t hi = std::min(committed_per_second.size(),
                               static_cast<size_t>(std::max(0.0, to_s)));
    for (size_t s = lo; s < hi; ++s) sum += committed_per_second[s];
    return sum / (to_s - from_s);
}

MetricsAggregate aggregate(const std::vector<RequestRecord>& records,
                           const NetCounters& counters,
                           const std::vector<std::vector<LogEntry>>& logs,
                           uint64_t total_retries, SimTime horizon) {
    MetricsAggregate agg;
    agg.submitted = records.size();
    agg.committed_per_second.assign(
        static_cast<size_t>((horizon + seconds(1) - 1) / seconds(1)), 0);

    std::vector<double> latencies_ms;
    latencies_ms.reserve(records.size());
    for (const auto& rec : records) {
        if (rec.failed) {
            ++agg.failed;
            continue;
        }
        if (rec.committed < 0) {
            ++agg.inflight;
            continue;
        }
        ++agg.committed;
        latencies_ms.push_back(to_ms(rec.committed - rec.submitted));
        const size_t bucket = static_cast<size_t>(rec.committed / seconds(1));
        if (bucket < agg.committed_per_second.size()) ++agg.committed_per_second[bucket];
    }
    if (!latencies_ms.empty()) {
        agg.median_ms = percentile(latencies_ms, 0.5);
        agg.p99_ms = percentile(latencies_ms, 0.99);
    }

    const double dur_s = to_s(horizon);
    std::vector<double> totals;
    for (const auto& pr : counters.replica) {
        const double in_kbs =
            static_cast<double>(pr.ingress_bytes + pr.client_in_bytes) / 1000.0 / dur_s;
        const double out_kbs =
            static_cast<double>(pr.egress_bytes + pr.client_out_bytes) / 1000.0 / dur_s;
        agg.ingress_kbs.push_back(in_kbs);
        agg.egress_kbs.push_back(out_kbs);
        totals.push_back(in_kbs + out_kbs);
    }
    agg.bandwidth_stddev_kbs = population_stddev(totals);

    if (agg.committed > 0)
        agg.retries_per_commit =
            static_cast<double>(total_retries) / static_cast<double>(agg.committed);

    // Slot wins per replica, from the longest exported log.
    size_t longest = 0;
    for (size_t r = 1; r < logs.size(); ++r)
        if (logs[r].size() > logs[longest].size()) longest = r;
    if (!logs.empty() && !logs[longest].empty()) {
        std::vector<uint64_t> wins(counters.replica.size(), 0);
        for (const auto& e : logs[longest])
            if (!e.request_ids.empty() && e.origin < wins.size()) ++wins[e.origin];
        agg.gini_commits = gini(wins);
    }
    return agg;
}

} // namespace baxsim
