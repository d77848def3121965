#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "baxsim/metrics.hpp"
#include "baxsim/runner.hpp"
#include "baxsim/workload.hpp"

using namespace baxsim;

namespace {

// Arrival counter: run the generator against an idle baxos cluster and count
// submitted records.
RunResult arrivals_run(double rate, Micros horizon, uint64_t seed) {
    Scenario s;
    s.protocol = Protocol::baxos;
    s.cluster = ClusterConfig::for_n(3);
    s.matrix = LatencyMatrix::uniform(3, ms(5), 0.0);
    s.workload.clients = 1;
    s.workload.rate_per_client = rate;
    s.horizon = horizon;
    return run_scenario(s, seed);
}

} // namespace

TEST_CASE("poisson arrivals: count within 3 sigma of rate * horizon") {
    const RunResult r = arrivals_run(2500, seconds(60), 17);
    const double expected = 2500.0 * 60.0;
    const double sigma = std::sqrt(expected);
    CHECK(std::abs(static_cast<double>(r.metrics.submitted) - expected) < 3 * sigma);
}

TEST_CASE("five clients aggregate to ~12,500 requests per second") {
    Scenario s;
    s.protocol = Protocol::baxos;
    s.cluster = ClusterConfig::for_n(5);
    s.matrix = LatencyMatrix::uniform(5, ms(5), 0.0);
    s.workload.clients = 5;
    s.workload.rate_per_client = 2500;
    s.horizon = seconds(20);
    const RunResult r = run_scenario(s, 23);
    const double expected = 12500.0 * 20.0;
    CHECK(std::abs(static_cast<double>(r.metrics.submitted) - expected) <
          3 * std::sqrt(expected));
}

TEST_CASE("fixed seed reproduces the arrival sequence exactly") {
    const RunResult a = arrivals_run(500, seconds(5), 3);
    const RunResult b = arrivals_run(500, seconds(5), 3);
    REQUIRE(a.records.size() == b.records.size());
    for (size_t i = 0; i < a.records.size(); ++i)
        CHECK(a.records[i].submitted == b.records[i].submitted);
}

TEST_CASE("nearest-rank percentile matches a full-sort oracle") {
    Rng rng(99);
    for (int iter = 0; iter < 300; ++iter) {
        const size_t n = 1 + rng.below(400);
        std::vector<double> v;
        for (size_t i = 0; i < n; ++i) v.push_back(rng.uniform01() * 1000.0);
        for (double q : {0.5, 0.99}) {
            std::vector<double> sorted = v;
            std::sort(sorted.begin(), sorted.end());
            const size_t rank = static_cast<size_t>(std::ceil(q * n));
            const double oracle = sorted[rank == 0 ? 0 : rank - 1];
            CHECK(percentile(v, q) == oracle);
        }
    }
}

TEST_CASE("singleton request: median and p99 are that latency") {
    std::vector<RequestRecord> recs(1);
    recs[0].submitted = seconds(1);
    recs[0].committed = seconds(1) + ms(200);
    NetCounters counters;
    const MetricsAggregate agg = aggregate(recs, counters, {}, 0, seconds(2));
    REQUIRE(agg.median_ms.has_value());
    CHECK(*agg.median_ms == doctest::Approx(200.0));
    CHECK(*agg.p99_ms == doctest::Approx(200.0));
}

TEST_CASE("population stddev of the leader/follower byte-rate profile") {
    // 1560 against four 200s: mean 472, population stddev exactly 544.
    const double sd = population_stddev({1560, 200, 200, 200, 200});
    CHECK(sd == doctest::Approx(544.0).epsilon(0.001));
}

TEST_CASE("a request over the client timeout is failed and excluded") {
    std::vector<RequestRecord> recs(2);
    recs[0].submitted = 0;
    recs[0].committed = seconds(9); // past the 8 s timeout
    recs[0].failed = true;
    recs[1].submitted = 0;
    recs[1].committed = ms(300);
    NetCounters counters;
    const MetricsAggregate agg = aggregate(recs, counters, {}, 0, seconds(10));
    CHECK(agg.committed == 1);
    CHECK(agg.failed == 1);
    CHECK(*agg.median_ms == doctest::Approx(300.0));
}

TEST_CASE("throughput buckets add up to the committed count") {
    Scenario s;
    s.protocol = Protocol::baxos;
    s.cluster = ClusterConfig::for_n(3);
    s.matrix = LatencyMatrix::aws(3, 0.05);
    s.workload.clients = 3;
    s.workload.rate_per_client = 300;
    s.horizon = seconds(4);
    const RunResult r = run_scenario(s, 31);
    uint64_t bucketed = 0;
    for (uint32_t c : r.metrics.committed_per_second) bucketed += c;
    CHECK(bucketed == r.metrics.committed);
}

TEST_CASE("empty record set aggregates to an explicit empty result") {
    NetCounters counters;
    const MetricsAggregate agg = aggregate({}, counters, {}, 0, seconds(1));
    CHECK(agg.empty());
    CHECK_FALSE(agg.median_ms.has_value());
    CHECK_FALSE(agg.p99_ms.has_value());
}

TEST_CASE("zipfian skew: hottest key at least twice the tenth-hottest") {
    ZipfianGenerator zipf(1000, 0.99);
    Rng rng(7);
    std::vector<uint32_t> counts(1000, 0);
    for (int i = 0; i < 100000; ++i) ++counts[zipf.sample(rng)];
    CHECK(counts[0] >= 2 * counts[9]);
    CHECK(counts[0] > 0);
}

TEST_CASE("ycsb-a generator: roughly half reads, 1 kB on the heavy side") {
    Scenario s;
    s.protocol = Protocol::baxos;
    s.cluster = ClusterConfig::for_n(3);
    s.matrix = LatencyMatrix::uniform(3, ms(5), 0.0);
    s.workload.clients = 3;
    s.workload.rate_per_client = 500;
    s.workload.generator = Generator::ycsb_a;
    s.horizon = seconds(4);
    const RunResult r = run_scenario(s, 13);
    CHECK(r.metrics.committed > 0);
    // Read/write mix shows up as byte-rate volume well above the micro load.
    CHECK(r.counters.total_egress > 0);
}

TEST_CASE("gini coefficient basics") {
    CHECK(gini({5, 5, 5, 5}) == doctest::Approx(0.0));
    CHECK(gini({1, 0, 0, 0}) == doctest::Approx(0.75));
    CHECK(gini({}) == doctest::Approx(0.0));
}

TEST_CASE("rerouting after a crash targets a live replica") {
    Scenario s;
    s.protocol = Protocol::baxos;
    s.cluster = ClusterConfig::for_n(3);
    s.matrix = LatencyMatrix::aws(3, 0.05);
    s.workload.clients = 3;
    s.workload.rate_per_client = 200;
    s.horizon = seconds(6);
    AttackSpec a;
    a.type = AttackType::crash;
    a.targeting = AttackTargeting::fixed;
    a.fixed_victim = 1;
    a.start = seconds(2);
    a.stop = seconds(2);
    s.attack = a;
    const RunResult r = run_scenario(s, 41);
    bool saw_reroute = false;
    for (const auto& rec : r.records) {
        if (rec.client == 1 && rec.submitted > seconds(2) + ms(100)) {
            CHECK(rec.routed != 1);
            saw_reroute = true;
        }
    }
    CHECK(saw_reroute);
}
