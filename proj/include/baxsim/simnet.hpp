#pragma once

#include <cstdio>
#include <memory>
#include <optional>
#include <ostream>
#include <queue>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "baxsim/messages.hpp"
#include "baxsim/rng.hpp"
#include "baxsim/types.hpp"

namespace baxsim {

// One-way base latencies in microseconds, n x n, zero diagonal. The "aws"
// profile carries measured ping/2 values for up to nine regions; profiles for
// smaller n take the leading submatrix.
struct LatencyMatrix {
    uint32_t n = 0;
    std::vector<Micros> oneway_us; // row-major
    double jitter_frac = 0.05;

    Micros oneway(ReplicaId a, ReplicaId b) const { return oneway_us[a * n + b]; }
    Micros base_rtt(ReplicaId a, ReplicaId b) const { return oneway(a, b) + oneway(b, a); }
    Micros diameter_rtt() const;
    Micros max_oneway() const;
    void validate() const;

    static LatencyMatrix aws(uint32_t n, double jitter_frac);
    static LatencyMatrix uniform(uint32_t n, Micros oneway, double jitter_frac);
};

struct SynchronySpec {
    SimTime gst = 0;
    Micros delta = 0; // post-GST one-way bound
};

enum class AttackType { delay, packet_loss, crash };
enum class AttackTargeting { follow_leader, fixed, random_rotating };

struct AttackSpec {
    AttackType type = AttackType::delay;
    AttackTargeting targeting = AttackTargeting::follow_leader;
    ReplicaId fixed_victim = 0;
    SimTime start = 0;
    SimTime stop = 0;
    Micros delay_us = 0;    // delay attack: added egress latency
    double drop_frac = 0.0; // loss attack: egress drop probability
    Micros burst = 0;       // 0 = continuous over [start, stop)
    Micros cooldown = 0;
};

struct NetCounters {
    struct PerReplica {
        uint64_t egress_bytes = 0;       // replica -> replica transmissions
        uint64_t ingress_bytes = 0;      // replica -> replica deliveries
        uint64_t client_in_bytes = 0;    // requests received from clients
        uint64_t client_out_bytes = 0;   // responses sent to clients
        uint64_t messages_sent = 0;
        uint64_t messages_received = 0;
    };
    std::vector<PerReplica> replica;
    uint64_t dropped_loss_bytes = 0;  // loss-attack drops (per attempt)
    uint64_t dropped_crash_bytes = 0; // deliveries to crashed replicas
    uint64_t total_egress = 0;        // replica->replica, per attempt
    uint64_t total_ingress = 0;
};

class Sim;

// Protocol replica interface; implementations are pure event-driven state
// machines, the event loop provides all ordering.
class Node {
public:
    virtual ~Node() = default;
    virtual void start(Sim&) {}
    virtual void handle_message(Sim&, ReplicaId src, const ProtocolMessage&) = 0;
    virtual void handle_timer(Sim&, uint64_t timer_id) = 0;
    virtual void handle_command(Sim&, const Command&) = 0;

    // Leadership belief (view, leader) when stably established; the adaptive
    // attacker follows the highest view across live replicas. Leaderless
    // protocols return nullopt.
    virtual std::optional<std::pair<uint64_t, ReplicaId>> leadership() const {
        return std::nullopt;
    }

    virtual const std::vector<LogEntry>& decided_log() const = 0;
    virtual uint64_t applied_count() const = 0;
    virtual uint64_t state_machine_digest() const = 0;
    virtual uint64_t safety_conflicts() const { return 0; }
    virtual uint64_t retry_count() const { return 0; }
    virtual void debug_dump(std::ostream&) const = 0;
};

// Client-side driver (arrival generation, routing, latency records); lives in
// the workload module.
class ClientDriver {
public:
    virtual ~ClientDriver() = default;
    virtual void start(Sim&) = 0;
    virtual void handle_arrival(Sim&, uint32_t client) = 0;
    virtual void handle_response(Sim&, uint32_t client, RequestId rid) = 0;
};

struct SimConfig {
    LatencyMatrix matrix;
    std::optional<SynchronySpec> synchrony;
    std::vector<AttackSpec> attacks;
    SimTime horizon = 0;
    uint64_t seed = 0;
    bool trace_lines = false; // keep textual trace in memory (digest always on)
};

class Sim {
public:
    Sim(SimConfig cfg, std::vector<Node*> nodes, ClientDriver* clients);

    void run();
    void run_until(SimTime cut); // replay support

    SimTime now() const { return now_; }
    uint32_t n() const { return cfg_.matrix.n; }
    const LatencyMatrix& matrix() const { return cfg_.matrix; }
    bool crashed(ReplicaId r) const { return crashed_[r]; }
    uint32_t live_count() const;

    // Transport. Self-sends are delivered at the same instant (zero latency)
    // and are not charged to the byte counters.
    void send(ReplicaId src, ReplicaId dst, ProtocolMessage msg);
    void broadcast(ReplicaId src, const ProtocolMessage& msg);

    uint64_t set_timer(ReplicaId owner, Micros delay);
    void cancel_timer(uint64_t id);

    // Client legs; latency uses the matrix row of the client's home region.
    void schedule_arrival(uint32_t client, Micros delay);
    void client_request(uint32_t client, ReplicaId client_region, const Command& cmd,
                        ReplicaId dst);
    void client_response(ReplicaId replica, uint32_t client, ReplicaId client_region,
                         RequestId rid, uint32_t payload_bytes);

    Rng& node_rng(ReplicaId r) { return node_rngs_[r]; }

    void trace(ReplicaId r, const char* kind, const std::string& detail);

    const NetCounters& counters() const { return counters_; }
    uint64_t inflight_bytes() const; // replica->replica bytes still queued
    uint64_t trace_digest() const { return trace_hash_.digest(); }
    const std::vector<std::string>& trace_lines() const { return trace_text_; }
    std::optional<ReplicaId> attack_victim() const {
        return attacks_.empty() ? std::nullopt : attacks_.front().victim;
    }
    const std::vector<SimTime>& crash_times() const { return crash_times_; }

private:
    struct EvMessage {
        ReplicaId src, dst;
        ProtocolMessage msg;
        uint32_t bytes;
    };
    struct EvStubbornRetry {
        ReplicaId src, dst;
        ProtocolMessage msg;
        uint32_t bytes;
        Micros period;
    };
    struct EvTimer {
        ReplicaId owner;
        uint64_t id;
    };
    struct EvClientArrival {
        uint32_t client;
    };
    struct EvRequestDelivery {
        uint32_t client;
        ReplicaId dst;
        Command cmd;
    };
    struct EvResponseDelivery {
        uint32_t client;
        RequestId rid;
    };
    struct EvAttackPhase {
        uint32_t attack;
    };
    struct EvCrash {
        uint32_t attack;
    };
    using Payload = std::variant<EvMessage, EvStubbornRetry, EvTimer, EvClientArrival,
                                 EvRequestDelivery, EvResponseDelivery, EvAttackPhase,
                                 EvCrash>;
    struct Event {
        SimTime at;
        uint64_t seq;
        Payload payload;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.at != b.at) return a.at > b.at;
            return a.seq > b.seq;
        }
    };

    struct AttackRuntime {
        AttackSpec spec;
        std::optional<ReplicaId> victim;
        bool in_burst = false;
        bool started = false;
    };

    void push(SimTime at, Payload payload);
    void dispatch(const Event& ev);
    void transmit(ReplicaId src, ReplicaId dst, ProtocolMessage msg, uint32_t bytes,
                  bool is_retry, Micros period);
    Micros flight_time(ReplicaId src, ReplicaId dst);
    Micros egress_attack_delay(ReplicaId src) const;
    bool loss_roll(ReplicaId src);
    void attack_phase(uint32_t idx);
    void resolve_victim(AttackRuntime& a);
    std::optional<ReplicaId> leader_now() const;

    SimConfig cfg_;
    std::vector<Node*> nodes_;
    ClientDriver* clients_;
    SimTime now_ = 0;
    uint64_t next_seq_ = 0;
    uint64_t next_timer_ = 1;
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    std::unordered_set<uint64_t> cancelled_;
    std::vector<bool> crashed_;
    std::vector<SimTime> crash_times_;
    Rng net_rng_;
    Rng attack_rng_;
    std::vector<Rng> node_rngs_;
    NetCounters counters_;
    std::vector<AttackRuntime> attacks_;
    Fnv1a trace_hash_;
    std::vector<std::string> trace_text_;
};

} // namespace baxsim
