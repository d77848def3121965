#include "baxsim/runner.hpp"

#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace baxsim {

RunResult run_scenario(const Scenario& scenario, uint64_t seed, bool keep_trace_lines) {
    scenario.validate();

    SimConfig cfg;
    cfg.matrix = scenario.matrix;
    cfg.synchrony = scenario.synchrony;
    if (scenario.attack) cfg.attacks.push_back(*scenario.attack);
    for (const auto& a : scenario.extra_attacks) cfg.attacks.push_back(a);
    cfg.horizon = scenario.horizon;
    cfg.seed = seed;
    cfg.trace_lines = keep_trace_lines;

    std::vector<std::unique_ptr<Node>> owned;
    std::vector<Node*> nodes;
    const Micros rtt_prior = scenario.matrix.diameter_rtt();
    for (ReplicaId r = 0; r < scenario.cluster.n; ++r) {
        if (scenario.protocol == Protocol::baxos) {
            owned.push_back(std::make_unique<BaxosReplica>(r, scenario.cluster,
                                                           scenario.baxos, rtt_prior, seed));
        } else {
            owned.push_back(std::make_unique<MultiPaxosReplica>(r, scenario.cluster,
                                                                scenario.multipaxos, seed));
        }
        nodes.push_back(owned.back().get());
    }

    Clients clients(scenario.workload, seed);
    Sim sim(cfg, nodes, &clients);
    sim.run();

    RunResult res;
    res.seed = seed;
    res.scenario_digest = scenario.digest();
    res.protocol = scenario.protocol;
    res.horizon = scenario.horizon;
    res.records = clients.finish(scenario.horizon);
    uint64_t retries = 0;
    for (ReplicaId r = 0; r < scenario.cluster.n; ++r) {
        res.logs.push_back(nodes[r]->decided_log());
        res.applied_counts.push_back(nodes[r]->applied_count());
        res.state_digests.push_back(nodes[r]->state_machine_digest());
        res.retries_per_replica.push_back(nodes[r]->retry_count());
        res.crashed.push_back(sim.crashed(r));
        res.safety_conflicts += nodes[r]->safety_conflicts();
        retries += nodes[r]->retry_count();
        if (scenario.protocol == Protocol::multipaxos) {
            const auto* mp = static_cast<const MultiPaxosReplica*>(nodes[r]);
            for (SimTime t : mp->elections_won()) res.elections.push_back(t);
        } else {
            const auto* bx = static_cast<const BaxosReplica*>(nodes[r]);
            res.piggyback_commits += bx->piggyback_commits();
        }
    }
    std::sort(res.elections.begin(), res.elections.end());
    res.crash_times = sim.crash_times();
    res.counters = sim.counters();
    res.inflight_bytes = sim.inflight_bytes();
    res.trace_digest = sim.trace_digest();
    if (keep_trace_lines) res.trace_lines = sim.trace_lines();
    res.metrics = aggregate(res.records, res.counters, res.logs, retries, scenario.horizon);
    return res;
}

std::string replay_dump(const Scenario& scenario, uint64_t seed, SimTime until) {
    scenario.validate();
    SimConfig cfg;
    cfg.matrix = scenario.matrix;
    cfg.synchrony = scenario.synchrony;
    if (scenario.attack) cfg.attacks.push_back(*scenario.attack);
    for (const auto& a : scenario.extra_attacks) cfg.attacks.push_back(a);
    cfg.horizon = scenario.horizon;
    cfg.seed = seed;

    std::vector<std::unique_ptr<Node>> owned;
    std::vector<Node*> nodes;
    const Micros rtt_prior = scenario.matrix.diameter_rtt();
    for (ReplicaId rep = 0; rep < scenario.cluster.n; ++rep) {
        if (scenario.protocol == Protocol::baxos) {
            owned.push_back(std::make_unique<BaxosReplica>(rep, scenario.cluster,
                                                           scenario.baxos, rtt_prior, seed));
        } else {
            owned.push_back(std::make_unique<MultiPaxosReplica>(rep, scenario.cluster,
                                                                scenario.multipaxos, seed));
        }
        nodes.push_back(owned.back().get());
    }
    Clients clients(scenario.workload, seed);
    Sim sim(cfg, nodes, &clients);
    sim.run_until(std::min(until, scenario.horizon));

    std::ostringstream out;
    out << "replay of '" << scenario.name << "' seed " << seed << " until t="
        << to_s(sim.now()) << "s\n";
    for (Node* node : nodes) node->debug_dump(out);
    out << "state_digests:";
    for (ReplicaId rep = 0; rep < scenario.cluster.n; ++rep)
        out << " " << digest_hex(nodes[rep]->state_machine_digest());
    out << "\n";
    return out.str();
}

std::vector<RunResult> run_many(const std::vector<std::pair<Scenario, uint64_t>>& runs,
                                int threads) {
    std::vector<RunResult> results(runs.size());
#ifdef _OPENMP
    if (threads != 1) {
        const int requested = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(requested)
        for (int64_t i = 0; i < static_cast<int64_t>(runs.size()); ++i)
            results[static_cast<size_t>(i)] =
                run_scenario(runs[static_cast<size_t>(i)].first,
                             runs[static_cast<size_t>(i)].second);
        return results;
    }
#endif
    (void)threads;
    for (size_t i = 0; i < runs.size(); ++i)
        results[i] = run_scenario(runs[i].first, runs[i].second);
    return results;
}

} // namespace baxsim
