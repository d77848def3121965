#pragma once

#include "baxsim/metrics.hpp"
#include "baxsim/scenario.hpp"

namespace baxsim {

struct RunResult {
    uint64_t seed = 0;
    uint64_t scenario_digest = 0;
    Protocol protocol = Protocol::baxos;
    SimTime horizon = 0;

    MetricsAggregate metrics;
    std::vector<RequestRecord> records;
    std::vector<std::vector<LogEntry>> logs; // per replica decided prefix
    std::vector<uint64_t> applied_counts;
    std::vector<uint64_t> state_digests;
    std::vector<uint64_t> retries_per_replica;
    std::vector<bool> crashed;
    std::vector<SimTime> crash_times;         // -1 when never crashed
    std::vector<SimTime> elections;           // stable-leader times (proto=mp)
    uint64_t safety_conflicts = 0;
    uint64_t piggyback_commits = 0;

    NetCounters counters;
    uint64_t inflight_bytes = 0;
    uint64_t trace_digest = 0;
    std::vector<std::string> trace_lines; // only when requested
};

// Executes one deterministic simulation. (scenario, seed) fully determines the
// result; `seed` overrides the scenario's own.
RunResult run_scenario(const Scenario& scenario, uint64_t seed,
                       bool keep_trace_lines = false);

// Runs independent simulations, OpenMP-parallel when threads != 1. Results are
// positionally stable, so parallel and serial execution produce identical
// output.
std::vector<RunResult> run_many(const std::vector<std::pair<Scenario, uint64_t>>& runs,
                                int threads);

// Re-executes a run up to `until` and renders every replica's per-choice state
// and live session for inspection; the trailing line carries the state
// digests so a full replay can be checked against the original summary.
std::string replay_dump(const Scenario& scenario, uint64_t seed, SimTime until);

} // namespace baxsim
