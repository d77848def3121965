#pragma once

#include <set>
#include <string>

#include "baxsim/runner.hpp"
#include "baxsim/verify.hpp"

namespace baxsim {

// Writes the artifact set for one run into `out_dir`:
//   metrics.csv    one row per second: time_s, protocol, committed, median/p99
//   replicas.csv   per-replica byte rates and retries per commit
//   summary.json   totals, quantiles, bandwidth stats, digests
//   manifest.json  scenario digest + seed + file list (bit-reproduction recipe)
//   requests.jsonl one record per client request
//   logs/log_r<i>.jsonl   decided-log export per replica
//   trace.log      event trace (only when the run kept trace lines)
void write_run_outputs(const Scenario& scenario, const RunResult& result,
                       const std::string& out_dir);

std::string summary_json(const Scenario& scenario, const RunResult& result);

// Loaders for `verify`.
std::vector<ReplicaExport> load_exports(const std::string& out_dir);
std::set<RequestId> load_submitted(const std::string& out_dir);

// Replay input: scenario text and seed embedded in a trace file header.
struct TraceHeader {
    std::string scenario_json;
    uint64_t seed = 0;
    uint64_t scenario_digest = 0;
};
TraceHeader read_trace_header(const std::string& trace_path);

} // namespace baxsim
