#include "doctest.h"

#include "baxsim/runner.hpp"
#include "baxsim/verify.hpp"

using namespace baxsim;

namespace {

LogEntry entry(uint64_t choice, uint64_t digest, std::vector<RequestId> rids) {
    LogEntry e;
    e.choice = choice;
    e.digest = digest;
    e.origin = 0;
    e.request_ids = std::move(rids);
    return e;
}

// Two healthy replicas with identical 20-entry logs.
std::vector<ReplicaExport> healthy_pair(std::set<RequestId>& submitted) {
    std::vector<ReplicaExport> reps(2);
    for (uint32_t r = 0; r < 2; ++r) {
        reps[r].id = r;
        for (uint64_t c = 1; c <= 20; ++c) {
            reps[r].log.push_back(entry(c, 0x1000 + c, {{1, c}}));
        }
        reps[r].applied_count = 20;
    }
    for (uint64_t c = 1; c <= 20; ++c) submitted.insert({1, c});
    return reps;
}

} // namespace

TEST_CASE("clean logs pass every check") {
    std::set<RequestId> submitted;
    auto reps = healthy_pair(submitted);
    const VerifyReport rep = verify_logs(reps, submitted);
    CHECK(rep.ok());
    CHECK(rep.compared_choices == 20);
}

TEST_CASE("a forged digest is reported as an agreement violation at its choice") {
    std::set<RequestId> submitted;
    auto reps = healthy_pair(submitted);
    reps[1].log[13].digest = 0xdead; // choice 14
    const VerifyReport rep = verify_logs(reps, submitted);
    REQUIRE_FALSE(rep.ok());
    CHECK(rep.violations[0].check == "agreement");
    CHECK(rep.violations[0].choice == 14);
}

TEST_CASE("a gapped prefix is rejected") {
    std::set<RequestId> submitted;
    auto reps = healthy_pair(submitted);
    reps[0].log.erase(reps[0].log.begin() + 10); // hole at choice 11
    reps[0].applied_count = 19;
    const VerifyReport rep = verify_logs(reps, submitted);
    REQUIRE_FALSE(rep.ok());
    CHECK(rep.violations[0].check == "prefix");
}

TEST_CASE("an inflated apply counter fails the exactly-once check") {
    std::set<RequestId> submitted;
    auto reps = healthy_pair(submitted);
    reps[1].applied_count = 21; // claims a double apply
    const VerifyReport rep = verify_logs(reps, submitted);
    REQUIRE_FALSE(rep.ok());
    CHECK(rep.violations[0].check == "exactly-once");
}

TEST_CASE("a decided request nobody submitted fails validity") {
    std::set<RequestId> submitted;
    auto reps = healthy_pair(submitted);
    submitted.erase({1, 7});
    const VerifyReport rep = verify_logs(reps, submitted);
    REQUIRE_FALSE(rep.ok());
    CHECK(rep.violations[0].check == "validity");
    CHECK(rep.violations[0].choice == 7);
}

TEST_CASE("a crashed replica participates with its shorter prefix") {
    std::set<RequestId> submitted;
    auto reps = healthy_pair(submitted);
    reps[1].crashed = true;
    reps[1].log.resize(9);
    reps[1].applied_count = 9;
    const VerifyReport rep = verify_logs(reps, submitted);
    CHECK(rep.ok());
    CHECK(rep.compared_choices == 9);
}

TEST_CASE("end-to-end: a real run passes verification") {
    Scenario s;
    s.protocol = Protocol::baxos;
    s.cluster = ClusterConfig::for_n(5);
    s.matrix = LatencyMatrix::aws(5, 0.05);
    s.workload.clients = 5;
    s.workload.rate_per_client = 400;
    s.horizon = seconds(5);
    const RunResult r = run_scenario(s, 77);
    std::vector<ReplicaExport> reps;
    for (size_t i = 0; i < r.logs.size(); ++i) {
        ReplicaExport e;
        e.id = static_cast<ReplicaId>(i);
        e.crashed = r.crashed[i];
        e.log = r.logs[i];
        e.applied_count = r.applied_counts[i];
        reps.push_back(std::move(e));
    }
    std::set<RequestId> submitted;
    for (const auto& rec : r.records) submitted.insert({rec.client, rec.seq});
    const VerifyReport rep = verify_logs(reps, submitted);
    INFO(rep.first());
    CHECK(rep.ok());
}
