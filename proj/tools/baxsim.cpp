#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include "CLI11.hpp"

#include "baxsim/output.hpp"
#include "baxsim/runner.hpp"
#include "baxsim/verify.hpp"

using namespace baxsim;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitUsage = 2;

struct Overrides {
    std::string protocol;
    int piggyback = -1; // -1 unset, 0 off, 1 on
    std::string scheme;
    double view_timeout_s = 0;
    double horizon_s = 0;
};

void apply_overrides(Scenario& s, const Overrides& o) {
    if (!o.protocol.empty()) s.protocol = parse_protocol(o.protocol);
    if (o.piggyback >= 0) s.baxos.piggyback = o.piggyback == 1;
    if (!o.scheme.empty()) s.baxos.scheme = parse_scheme(o.scheme);
    if (o.view_timeout_s > 0)
        s.multipaxos.view_timeout = static_cast<Micros>(o.view_timeout_s * 1e6);
    if (o.horizon_s > 0) s.horizon = static_cast<SimTime>(o.horizon_s * 1e6);
    s.validate();
}

std::string default_out_root() {
    if (const char* env = std::getenv("BAXSIM_OUT")) return env;
    return "out";
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0;
    const double m = mean_of(v);
    double var = 0;
    for (double x : v) var += (x - m) * (x - m);
    var /= static_cast<double>(v.size() - 1);
    return std::sqrt(var / static_cast<double>(v.size()));
}

int cmd_run(const std::string& scenario_path, uint64_t seed, std::string out_dir,
            const Overrides& overrides, bool trace) {
    Scenario scenario = Scenario::load(scenario_path);
    apply_overrides(scenario, overrides);
    if (out_dir.empty()) {
        out_dir = (fs::path(default_out_root()) /
                   (scenario.name + "-" + protocol_name(scenario.protocol) + "-s" +
                    std::to_string(seed)))
                      .string();
    }
    const RunResult result = run_scenario(scenario, seed, trace);
    write_run_outputs(scenario, result, out_dir);
    std::printf("%s seed=%llu: committed=%llu failed=%llu median=%.1fms p99=%.1fms"
                " -> %s\n",
                scenario.name.c_str(), static_cast<unsigned long long>(seed),
                static_cast<unsigned long long>(result.metrics.committed),
                static_cast<unsigned long long>(result.metrics.failed),
                result.metrics.median_ms.value_or(-1), result.metrics.p99_ms.value_or(-1),
                out_dir.c_str());
    return kExitOk;
}

int cmd_verify(const std::vector<std::string>& out_dirs) {
    std::vector<ReplicaExport> replicas;
    std::set<RequestId> submitted;
    for (const auto& dir : out_dirs) {
        auto exports = load_exports(dir);
        for (auto& e : exports) {
            e.id = static_cast<ReplicaId>(replicas.size());
            replicas.push_back(std::move(e));
        }
        auto ids = load_submitted(dir);
        submitted.insert(ids.begin(), ids.end());
    }
    const VerifyReport report = verify_logs(replicas, submitted);
    if (report.ok()) {
        std::printf("ok: %zu replicas, %llu common choices compared\n", replicas.size(),
                    static_cast<unsigned long long>(report.compared_choices));
        return kExitOk;
    }
    std::fprintf(stderr, "violation: %s\n", report.first().c_str());
    for (const auto& v : report.violations)
        std::fprintf(stderr, "  [%s] choice %llu: %s\n", v.check.c_str(),
                     static_cast<unsigned long long>(v.choice), v.detail.c_str());
    return kExitViolation;
}

int cmd_sweep(const std::string& template_path, const std::string& axis,
              const std::vector<std::string>& values, const std::vector<uint64_t>& seeds,
              const std::string& out_file, const Overrides& overrides, int jobs) {
    const Scenario base = [&] {
        Scenario s = Scenario::load(template_path);
        apply_overrides(s, overrides);
        return s;
    }();

    std::vector<Scenario> cells;
    for (const auto& value : values) {
        Scenario s = base;
        if (axis == "arrival-rate") {
            const double aggregate = std::stod(value);
            s.workload.rate_per_client = aggregate / s.workload.clients;
        } else if (axis == "replica-count") {
            const uint32_t n = static_cast<uint32_t>(std::stoul(value));
            s.cluster = ClusterConfig::for_n(n);
            s.matrix = LatencyMatrix::aws(n, s.matrix.jitter_frac);
            s.workload.clients = n;
        } else if (axis == "scheme") {
            s.baxos.scheme = parse_scheme(value);
        } else if (axis == "view-timeout") {
            s.multipaxos.view_timeout = static_cast<Micros>(std::stod(value) * 1e6);
        } else {
            throw ScenarioError(
                "axis: expected arrival-rate|replica-count|scheme|view-timeout");
        }
        s.validate();
        cells.push_back(std::move(s));
    }

    std::vector<std::pair<Scenario, uint64_t>> runs;
    for (const auto& cell : cells)
        for (uint64_t s : seeds) runs.push_back({cell, s});
    const std::vector<RunResult> results = run_many(runs, jobs);

    std::ofstream out(out_file);
    if (!out) throw std::runtime_error("cannot write sweep output '" + out_file + "'");
    out << "axis,value,protocol,seeds,throughput_mean,throughput_se,median_ms_mean,"
           "p99_ms_mean,failed_mean,retries_per_commit_mean,gini_mean\n";
    for (size_t c = 0; c < cells.size(); ++c) {
        std::vector<double> tput, med, p99, failed, retr, gini_v;
        for (size_t k = 0; k < seeds.size(); ++k) {
            const RunResult& r = results[c * seeds.size() + k];
            tput.push_back(r.metrics.committed_rate(0, to_s(r.horizon)));
            med.push_back(r.metrics.median_ms.value_or(0));
            p99.push_back(r.metrics.p99_ms.value_or(0));
            failed.push_back(static_cast<double>(r.metrics.failed));
            retr.push_back(r.metrics.retries_per_commit);
            gini_v.push_back(r.metrics.gini_commits);
        }
        char line[320];
        std::snprintf(line, sizeof line, "%s,%s,%s,%zu,%.3f,%.3f,%.3f,%.3f,%.1f,%.4f,%.4f\n",
                      axis.c_str(), values[c].c_str(), protocol_name(cells[c].protocol),
                      seeds.size(), mean_of(tput), stderr_of(tput), mean_of(med),
                      mean_of(p99), mean_of(failed), mean_of(retr), mean_of(gini_v));
        out << line;
        std::fputs(line, stdout);
    }
    std::printf("sweep written to %s\n", out_file.c_str());
    return kExitOk;
}

int cmd_replay(const std::string& trace_path, double until_s,
               const std::string& check_scenario) {
    const TraceHeader header = read_trace_header(trace_path);
    const Scenario scenario = Scenario::from_json(header.scenario_json);
    if (header.scenario_digest != 0 && scenario.digest() != header.scenario_digest) {
        std::fprintf(stderr, "trace header digest does not match its scenario body\n");
        return kExitUsage;
    }
    if (!check_scenario.empty()) {
        const Scenario external = Scenario::load(check_scenario);
        if (external.digest() != scenario.digest()) {
            std::fprintf(stderr,
                         "scenario digest mismatch: trace carries %s, file has %s\n",
                         digest_hex(scenario.digest()).c_str(),
                         digest_hex(external.digest()).c_str());
            return kExitUsage;
        }
    }
    const SimTime until =
        until_s < 0 ? scenario.horizon : static_cast<SimTime>(until_s * 1e6);
    std::fputs(replay_dump(scenario, header.seed, until).c_str(), stdout);
    return kExitOk;
}

int cmd_prob(uint32_t lmin, uint32_t lmax, const std::vector<uint32_t>& ps,
             uint32_t trials, uint64_t seed) {
    std::printf("l,p,eq,monte_carlo,abs_err\n");
    for (uint32_t l = lmin; l <= lmax; ++l) {
        for (uint32_t p : ps) {
            const double eq = termination_probability(l, p);
            const double mc = mc_single_winner_probability(l, p, trials, seed);
            std::printf("%u,%u,%.6f,%.6f,%.6f\n", l, p, eq, mc, std::abs(eq - mc));
        }
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"baxsim: leaderless consensus simulator and test harness"};
    app.require_subcommand(1);

    Overrides overrides;
    auto add_overrides = [&](CLI::App* cmd) {
        cmd->add_option("--protocol", overrides.protocol, "baxos|multipaxos");
        cmd->add_flag_function(
            "--piggyback,!--no-piggyback",
            [&](int64_t v) { overrides.piggyback = v > 0 ? 1 : 0; },
            "toggle the one-round-trip optimization");
        cmd->add_option("--scheme", overrides.scheme, "baxos|binary|modified-binary");
        cmd->add_option("--view-timeout", overrides.view_timeout_s,
                        "view timeout in seconds");
        cmd->add_option("--horizon", overrides.horizon_s, "horizon in seconds");
    };

    auto* run = app.add_subcommand("run", "execute one scenario");
    std::string scenario_path, out_dir;
    uint64_t seed = 1;
    bool trace = true;
    run->add_option("scenario", scenario_path, "scenario file")->required();
    run->add_option("--seed", seed, "rng seed");
    run->add_option("--out", out_dir, "output directory (default $BAXSIM_OUT/<name>)");
    run->add_flag("--trace,!--no-trace", trace, "write the event trace (default on)");
    add_overrides(run);

    auto* verify = app.add_subcommand("verify", "check decided-log exports");
    std::vector<std::string> out_dirs;
    verify->add_option("out_dirs", out_dirs, "run output directories")->required();

    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
    std::string template_path, axis, sweep_out = "sweep.csv";
    std::vector<std::string> values;
    std::vector<uint64_t> seeds{1, 2, 3};
    int jobs = 0;
    sweep->add_option("template", template_path, "scenario template")->required();
    sweep->add_option("--axis", axis, "arrival-rate|replica-count|scheme|view-timeout")
        ->required();
    sweep->add_option("--values", values, "axis values")->required();
    sweep->add_option("--seeds", seeds, "seeds per cell");
    sweep->add_option("--out", sweep_out, "output csv");
    sweep->add_option("--jobs", jobs, "parallel workers (0 = all cores, 1 = serial)");
    add_overrides(sweep);

    auto* replay = app.add_subcommand("replay", "re-run a trace and dump states");
    std::string trace_path, check_scenario;
    double until_s = -1;
    replay->add_option("trace", trace_path, "trace file from a previous run")->required();
    replay->add_option("--until", until_s, "cut point in seconds (default: full trace)");
    replay->add_option("--scenario", check_scenario, "cross-check scenario digest");

    auto* prob = app.add_subcommand("prob", "termination probability table");
    uint32_t lmin = 1, lmax = 6, trials = 100000;
    std::vector<uint32_t> ps{2, 3, 5};
    uint64_t prob_seed = 1;
    prob->add_option("--lmin", lmin, "smallest retry count");
    prob->add_option("--lmax", lmax, "largest retry count");
    prob->add_option("--p", ps, "contender counts");
    prob->add_option("--trials", trials, "monte carlo trials per cell");
    prob->add_option("--seed", prob_seed, "rng seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(scenario_path, seed, out_dir, overrides, trace);
        if (verify->parsed()) return cmd_verify(out_dirs);
        if (sweep->parsed())
            return cmd_sweep(template_path, axis, values, seeds, sweep_out, overrides, jobs);
        if (replay->parsed()) return cmd_replay(trace_path, until_s, check_scenario);
        if (prob->parsed()) return cmd_prob(lmin, lmax, ps, trials, prob_seed);
    } catch (const ScenarioError& e) {
        std::fprintf(stderr, "scenario error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
    return kExitUsage;
}
