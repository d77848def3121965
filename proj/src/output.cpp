#include "baxsim/output.hpp"

#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>

#include "json.hpp"

namespace baxsim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

void write_metrics_csv(const Scenario& scenario, const RunResult& res,
                       const std::string& path) {
    // Latencies bucketed by commit second for the per-second quantile columns.
    std::map<size_t, std::vector<double>> buckets;
    for (const auto& rec : res.records) {
        if (rec.failed || rec.committed < 0) continue;
        buckets[static_cast<size_t>(rec.committed / seconds(1))].push_back(
            to_ms(rec.committed - rec.submitted));
    }
    std::ofstream out(path);
    out << "time_s,protocol,committed,median_ms,p99_ms\n";
    for (size_t s = 0; s < res.metrics.committed_per_second.size(); ++s) {
        out << s << ',' << protocol_name(scenario.protocol) << ','
            << res.metrics.committed_per_second[s] << ',';
        auto it = buckets.find(s);
        if (it == buckets.end()) {
            out << ",\n";
        } else {
            out << fmt(percentile(it->second, 0.5)) << ','
                << fmt(percentile(it->second, 0.99)) << "\n";
        }
    }
}

void write_replicas_csv(const RunResult& res, const std::string& path) {
    std::vector<uint64_t> commits_routed(res.metrics.ingress_kbs.size(), 0);
    for (const auto& rec : res.records)
        if (!rec.failed && rec.committed >= 0 && rec.routed < commits_routed.size())
            ++commits_routed[rec.routed];
    std::ofstream out(path);
    out << "replica,ingress_kbs,egress_kbs,retries_per_commit\n";
    for (size_t r = 0; r < res.metrics.ingress_kbs.size(); ++r) {
        const double commits = commits_routed[r] ? static_cast<double>(commits_routed[r]) : 1.0;
        out << r << ',' << fmt(res.metrics.ingress_kbs[r]) << ','
            << fmt(res.metrics.egress_kbs[r]) << ','
            << fmt(static_cast<double>(res.retries_per_replica[r]) / commits) << "\n";
    }
}

} // namespace

std::string summary_json(const Scenario& scenario, const RunResult& res) {
    json j;
    j["scenario"] = scenario.name;
    j["scenario_digest"] = digest_hex(res.scenario_digest);
    j["protocol"] = protocol_name(scenario.protocol);
    j["seed"] = res.seed;
    j["horizon_s"] = to_s(res.horizon);
    j["submitted"] = res.metrics.submitted;
    j["committed"] = res.metrics.committed;
    j["failed"] = res.metrics.failed;
    j["inflight"] = res.metrics.inflight;
    j["throughput_per_s"] = res.metrics.committed_rate(0, to_s(res.horizon));
    if (res.metrics.median_ms) j["median_ms"] = *res.metrics.median_ms;
    if (res.metrics.p99_ms) j["p99_ms"] = *res.metrics.p99_ms;
    j["bandwidth_stddev_kbs"] = res.metrics.bandwidth_stddev_kbs;
    j["retries_per_commit"] = res.metrics.retries_per_commit;
    j["gini_commits"] = res.metrics.gini_commits;
    j["safety_conflicts"] = res.safety_conflicts;
    j["piggyback_commits"] = res.piggyback_commits;
    j["trace_digest"] = digest_hex(res.trace_digest);
    json elections = json::array();
    for (SimTime t : res.elections) elections.push_back(to_s(t));
    j["elections_s"] = std::move(elections);
    json crashes = json::array();
    for (size_t r = 0; r < res.crash_times.size(); ++r)
        if (res.crash_times[r] >= 0)
            crashes.push_back({{"replica", r}, {"at_s", to_s(res.crash_times[r])}});
    j["crashes"] = std::move(crashes);
    json per_replica = json::array();
    for (size_t r = 0; r < res.state_digests.size(); ++r) {
        per_replica.push_back({{"replica", r},
                               {"decided", res.logs[r].size()},
                               {"applied", res.applied_counts[r]},
                               {"state_digest", digest_hex(res.state_digests[r])},
                               {"retries", res.retries_per_replica[r]},
                               {"crashed", static_cast<bool>(res.crashed[r])}});
    }
    j["replicas"] = std::move(per_replica);
    return j.dump(2);
}

void write_run_outputs(const Scenario& scenario, const RunResult& res,
                       const std::string& out_dir) {
    fs::create_directories(fs::path(out_dir) / "logs");

    write_metrics_csv(scenario, res, (fs::path(out_dir) / "metrics.csv").string());
    write_replicas_csv(res, (fs::path(out_dir) / "replicas.csv").string());

    {
        std::ofstream out(fs::path(out_dir) / "summary.json");
        out << summary_json(scenario, res) << "\n";
    }
    {
        std::ofstream out(fs::path(out_dir) / "requests.jsonl");
        for (const auto& rec : res.records) {
            json j = {{"client", rec.client},       {"seq", rec.seq},
                      {"submitted_us", rec.submitted}, {"committed_us", rec.committed},
                      {"failed", rec.failed},       {"routed", rec.routed}};
            out << j.dump() << "\n";
        }
    }
    for (size_t r = 0; r < res.logs.size(); ++r) {
        std::ofstream out(fs::path(out_dir) / "logs" /
                          ("log_r" + std::to_string(r) + ".jsonl"));
        json head = {{"replica", r},
                     {"crashed", static_cast<bool>(res.crashed[r])},
                     {"applied_count", res.applied_counts[r]}};
        out << head.dump() << "\n";
        for (const auto& e : res.logs[r]) {
            json ids = json::array();
            for (const auto& rid : e.request_ids)
                ids.push_back({rid.first, rid.second});
            json j = {{"choice", e.choice},
                      {"digest", digest_hex(e.digest)},
                      {"origin", e.origin},
                      {"request_ids", std::move(ids)}};
            out << j.dump() << "\n";
        }
    }
    if (!res.trace_lines.empty()) {
        std::ofstream out(fs::path(out_dir) / "trace.log");
        out << "# scenario " << scenario.to_json() << "\n";
        out << "# seed " << res.seed << "\n";
        out << "# scenario_digest " << digest_hex(res.scenario_digest) << "\n";
        for (const auto& line : res.trace_lines) out << line << "\n";
    }
    {
        json m;
        m["scenario_digest"] = digest_hex(res.scenario_digest);
        m["scenario"] = json::parse(scenario.to_json());
        m["seed"] = res.seed;
        m["trace_digest"] = digest_hex(res.trace_digest);
        m["version"] = "baxsim 1.0";
        m["wall_clock"] = static_cast<int64_t>(std::time(nullptr)); // not reproducible
        json files = json::array({"metrics.csv", "replicas.csv", "summary.json",
                                  "requests.jsonl", "logs/"});
        if (!res.trace_lines.empty()) files.push_back("trace.log");
        m["files"] = std::move(files);
        std::ofstream out(fs::path(out_dir) / "manifest.json");
        out << m.dump(2) << "\n";
    }
}

std::vector<ReplicaExport> load_exports(const std::string& out_dir) {
    std::vector<ReplicaExport> exports;
    for (uint32_t r = 0;; ++r) {
        const fs::path path =
            fs::path(out_dir) / "logs" / ("log_r" + std::to_string(r) + ".jsonl");
        std::ifstream in(path);
        if (!in) break;
        ReplicaExport rep;
        rep.id = r;
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            if (first) {
                first = false;
                rep.crashed = j.value("crashed", false);
                rep.applied_count = j.value("applied_count", 0ull);
                continue;
            }
            LogEntry e;
            e.choice = j.at("choice").get<uint64_t>();
            e.digest = std::stoull(j.at("digest").get<std::string>(), nullptr, 16);
            e.origin = j.value("origin", 0u);
            for (const auto& rid : j.at("request_ids"))
                e.request_ids.emplace_back(rid.at(0).get<uint64_t>(),
                                           rid.at(1).get<uint64_t>());
            rep.log.push_back(std::move(e));
        }
        exports.push_back(std::move(rep));
    }
    if (exports.empty())
        throw std::runtime_error("no decided-log exports under " + out_dir + "/logs");
    return exports;
}

std::set<RequestId> load_submitted(const std::string& out_dir) {
    std::ifstream in(fs::path(out_dir) / "requests.jsonl");
    if (!in) throw std::runtime_error("missing requests.jsonl under " + out_dir);
    std::set<RequestId> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        ids.emplace(j.at("client").get<uint64_t>(), j.at("seq").get<uint64_t>());
    }
    return ids;
}

TraceHeader read_trace_header(const std::string& trace_path) {
    std::ifstream in(trace_path);
    if (!in) throw std::runtime_error("cannot open trace '" + trace_path + "'");
    TraceHeader h;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("# scenario_digest ", 0) == 0) {
            h.scenario_digest = std::stoull(line.substr(18), nullptr, 16);
        } else if (line.rfind("# scenario ", 0) == 0) {
            h.scenario_json = line.substr(11);
        } else if (line.rfind("# seed ", 0) == 0) {
            h.seed = std::stoull(line.substr(7));
        } else {
            break;
        }
    }
    if (h.scenario_json.empty())
        throw std::runtime_error("trace '" + trace_path + "' carries no scenario header");
    return h;
}

} // namespace baxsim
