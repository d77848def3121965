#pragma once

#include <map>
#include <string>
#include <vector>

#include "baxsim/protocol.hpp"
#include "baxsim/simnet.hpp"
#include "baxsim/types.hpp"

namespace baxsim::test {

// Deterministic client driver for behavioral tests: submits exactly the given
// commands at the given instants and records response latencies.
class ScriptedClients : public ClientDriver {
public:
    struct Item {
        SimTime at = 0;
        uint32_t client = 0;
        Command cmd;
    };

    explicit ScriptedClients(std::vector<Item> items) : items_(std::move(items)) {}

    void start(Sim& sim) override {
        for (const auto& item : items_) sim.schedule_arrival(item.client, item.at);
        std::map<uint32_t, std::vector<Item>> per_client;
        for (const auto& item : items_) per_client[item.client].push_back(item);
        queues_ = std::move(per_client);
    }

    void handle_arrival(Sim& sim, uint32_t client) override {
        auto& q = queues_[client];
        const Item item = q.front();
        q.erase(q.begin());
        submitted[request_id(item.cmd)] = sim.now();
        ReplicaId dst = item.client;
        if (sim.crashed(dst)) {
            for (ReplicaId r = 0; r < sim.n(); ++r)
                if (!sim.crashed(r)) {
                    dst = r;
                    break;
                }
        }
        sim.client_request(client, item.client, item.cmd, dst);
    }

    void handle_response(Sim& sim, uint32_t, RequestId rid) override {
        if (!latency_us.count(rid)) latency_us[rid] = sim.now() - submitted.at(rid);
    }

    std::map<RequestId, SimTime> submitted;
    std::map<RequestId, Micros> latency_us;

private:
    std::vector<Item> items_;
    std::map<uint32_t, std::vector<Item>> queues_;
};

inline Command cmd_of(uint64_t client, uint64_t seq) {
    Command c;
    c.client = client;
    c.seq = seq;
    c.kind = CommandKind::write;
    c.key = static_cast<uint32_t>(seq % 97);
    c.request_bytes = 8;
    c.response_bytes = 8;
    return c;
}

// Distinct opaque values for protocol-level tests; tag picks the content.
inline Value val(uint64_t tag, ReplicaId origin = 0) {
    Command c;
    c.client = tag;
    c.seq = tag;
    c.kind = CommandKind::write;
    c.key = static_cast<uint32_t>(tag);
    c.request_bytes = 8;
    c.response_bytes = 8;
    return Value::make({c}, origin, tag, 0);
}

inline TryNumber tn(uint64_t round, ReplicaId proposer) { return TryNumber{round, proposer}; }

} // namespace baxsim::test
