#include "baxsim/workload.hpp"

#include <cmath>
#include <stdexcept>

namespace baxsim {

Generator parse_generator(const std::string& s) {
    if (s == "micro") return Generator::micro;
    if (s == "ycsb-a") return Generator::ycsb_a;
    throw std::invalid_argument("workload.generator: expected micro|ycsb-a, got '" + s + "'");
}

const char* generator_name(Generator g) {
    return g == Generator::micro ? "micro" : "ycsb-a";
}

void WorkloadSpec::validate(uint32_t n) const {
    if (clients == 0 || clients > n)
        throw std::invalid_argument("workload.clients: must be in 1..n (one per region)");
    if (rate_per_client <= 0)
        throw std::invalid_argument("workload.rate_per_client: must be positive");
    if (key_space == 0) throw std::invalid_argument("workload.key_space: must be positive");
    if (client_timeout <= 0)
        throw std::invalid_argument("workload.client_timeout: must be positive");
}

ZipfianGenerator::ZipfianGenerator(uint32_t n, double theta) : cdf_(n) {
    double zeta = 0;
    for (uint32_t i = 0; i < n; ++i) zeta += 1.0 / std::pow(static_cast<double>(i + 1), theta);
    double acc = 0;
    for (uint32_t i = 0; i < n; ++i) {
        acc += 1.0 / std::pow(static_cast<double>(i + 1), theta) / zeta;
        cdf_[i] = acc;
    }
    cdf_.back() = 1.0;
}

uint32_t ZipfianGenerator::sample(Rng& rng) const {
    const double u = rng.uniform01();
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<uint32_t>(it - cdf_.begin());
}

Clients::Clients(WorkloadSpec spec, uint64_t seed)
    : spec_(spec), zipf_(spec.key_space, spec.zipf_theta) {
    for (uint32_t c = 0; c < spec_.clients; ++c) {
        rngs_.emplace_back(Rng::derive(seed, 0xc11e47 + c));
        next_seq_.push_back(1);
    }
}

void Clients::start(Sim& sim) {
    for (uint32_t c = 0; c < spec_.clients; ++c) {
        const double gap_s = rngs_[c].exponential(spec_.rate_per_client);
        sim.schedule_arrival(c, static_cast<Micros>(gap_s * 1e6));
    }
}

Command Clients::make_command(Rng& rng, uint32_t client, uint64_t seq) const {
    Command cmd;
    cmd.client = client;
    cmd.seq = seq;
    if (spec_.generator == Generator::micro) {
        cmd.kind = CommandKind::write;
        cmd.key = static_cast<uint32_t>(rng.below(spec_.key_space));
        cmd.request_bytes = spec_.request_bytes;
        cmd.response_bytes = spec_.response_bytes;
    } else {
        // YCSB-A: 50/50 reads and writes over Zipfian keys, 1 kB records.
        const bool write = rng.uniform01() < 0.5;
        cmd.kind = write ? CommandKind::write : CommandKind::read;
        cmd.key = zipf_.sample(rng);
        cmd.request_bytes = write ? 1000 : 8;
        cmd.response_bytes = write ? 8 : 1000;
    }
    return cmd;
}

ReplicaId Clients::route(Sim& sim, uint32_t client) {
    const ReplicaId home = client; // co-located, one client per region
    if (!sim.crashed(home)) return home;
    std::vector<ReplicaId> live;
    for (ReplicaId r = 0; r < sim.n(); ++r)
        if (!sim.crashed(r) && r != home) live.push_back(r);
    if (live.empty()) return home; // all replicas down; fails at once
    return live[rngs_[client].below(live.size())];
}

void Clients::handle_arrival(Sim& sim, uint32_t client) {
    Rng& rng = rngs_[client];
    const uint64_t seq = next_seq_[client]++;
    Command cmd = make_command(rng, client, seq);
    cmd.deadline = sim.now() + spec_.client_timeout;

    RequestRecord rec;
    rec.client = client;
    rec.seq = seq;
    rec.submitted = sim.now();
    rec.routed = route(sim, client);
    if (sim.crashed(rec.routed)) {
        rec.failed = true;
        records_.push_back(rec);
    } else {
        open_[request_id(cmd)] = records_.size();
        records_.push_back(rec);
        sim.client_request(client, client, cmd, rec.routed);
    }

    const double gap_s = rng.exponential(spec_.rate_per_client);
    sim.schedule_arrival(client, static_cast<Micros>(gap_s * 1e6));
}

void Clients::handle_response(Sim& sim, uint32_t, RequestId rid) {
    auto it = open_.find(rid);
    if (it == open_.end()) return; // duplicate response; first one counted
    RequestRecord& rec = records_[it->second];
    rec.committed = sim.now();
    rec.failed = (rec.committed - rec.submitted) > spec_.client_timeout;
    open_.erase(it);
}

std::vector<RequestRecord> Clients::finish(SimTime horizon) {
    for (const auto& [rid, idx] : open_) {
        RequestRecord& rec = records_[idx];
        if (horizon - rec.submitted > spec_.client_timeout) rec.failed = true;
        // Otherwise still in flight at the horizon: neither committed nor failed.
    }
    open_.clear();
    return std::move(records_);
}

} // namespace baxsim
