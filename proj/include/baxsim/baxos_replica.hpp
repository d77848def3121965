#pragma once

#include <deque>
#include <map>

#include "baxsim/backoff.hpp"
#include "baxsim/protocol.hpp"
#include "baxsim/simnet.hpp"
#include "baxsim/smr.hpp"

namespace baxsim {

struct BaxosOptions {
    bool piggyback = true;
    RebScheme scheme = RebScheme::baxos;
    Micros phase_timer_floor = ms(10);
    Micros batch_window = ms(5);
    uint32_t batch_cap = 10000;
    // Concurrent proposer sessions per replica. The default serializes
    // proposals the way the pseudocode's single command variable does; under
    // saturated contention larger windows only multiply per-slot collisions.
    uint32_t pipeline = 1;
};

// One Baxos replica: acceptor/learner for every choice plus a bounded set of
// in-flight proposer sessions fed by a FIFO of pending client commands.
class BaxosReplica : public Node {
public:
    BaxosReplica(ReplicaId id, ClusterConfig cluster, BaxosOptions opt,
                 Micros rtt_prior, uint64_t seed);

    void start(Sim&) override;
    void handle_message(Sim&, ReplicaId src, const ProtocolMessage&) override;
    void handle_timer(Sim&, uint64_t timer_id) override;
    void handle_command(Sim&, const Command&) override;

    const std::vector<LogEntry>& decided_log() const override { return smr_.log(); }
    uint64_t applied_count() const override { return smr_.applied_count(); }
    uint64_t state_machine_digest() const override { return smr_.kv().digest(); }
    uint64_t safety_conflicts() const override { return safety_conflicts_; }
    uint64_t retry_count() const override { return retries_total_; }
    void debug_dump(std::ostream&) const override;

    uint64_t last_decided() const { return smr_.last_applied; }
    const KvStateMachine& kv() const { return smr_.kv(); }
    uint32_t backoff_retries() const { return backoff_.retries(); }
    uint64_t piggyback_commits() const { return piggyback_commits_; }

private:
    struct ArmedQuorum {
        uint64_t choice = 0;
        TryNumber try_;
        std::map<ReplicaId, Promise> promises;
    };
    struct SentTimes {
        SimTime prepare_at = -1;
        SimTime propose_at = -1;
    };
    enum class TimerKind { batch, phase, backoff, repair };
    struct TimerRef {
        TimerKind kind;
        uint64_t choice; // phase/backoff timers belong to a session
    };

    void on_prepare_msg(Sim&, ReplicaId src, const Prepare&);
    void on_promise_msg(Sim&, ReplicaId src, const Promise&);
    void on_propose_msg(Sim&, ReplicaId src, const Propose&);
    void on_accept_msg(Sim&, ReplicaId src, const Accept&);
    void on_learn_msg(Sim&, ReplicaId src, const Learn&);

    // Opens sessions for pending batches while the pipeline has room (Rule 1).
    void try_submit(Sim&);
    void start_session(Sim&, Value command);
    void start_session_at(Sim&, uint64_t target, Value command);
    void arm_repair_timer(Sim&);
    void begin_prepare(Sim&, ProposerSession&);
    void begin_propose(Sim&, ProposerSession&);
    void finish_session(Sim&, uint64_t choice, bool own_command_decided);
    void apply_decided(Sim&);
    void arm_phase_timer(Sim&, ProposerSession&);
    void record_rtt(Sim&, ReplicaId peer, uint64_t choice, TryNumber try_, bool phase2);
    void resubmit(Sim&, Value command);

    std::vector<Command> live_commands(std::vector<Command> cmds, SimTime now) const;
    ChoiceState& choice(uint64_t c);
    TryNumber next_try(uint64_t c) const;
    uint64_t next_target() const;
    Micros phase_timeout() const;
    bool foreign_traffic_recent(Sim&) const;
    void cancel_session_timer(Sim&, ProposerSession&);

    ReplicaId id_;
    ClusterConfig cluster_;
    BaxosOptions opt_;

    std::map<uint64_t, ChoiceState> choices_;
    SmrState smr_;

    std::deque<Command> pending_;
    std::map<uint64_t, ProposerSession> sessions_; // keyed by target choice
    std::optional<ArmedQuorum> armed_;
    std::map<std::pair<uint64_t, TryNumber>, SentTimes> sent_times_;
    std::deque<std::pair<uint64_t, TryNumber>> sent_order_;

    BackoffState backoff_;
    RttEstimate rtt_;

    std::map<uint64_t, TimerRef> timers_;          // live timer id -> meaning
    std::map<uint64_t, uint64_t> session_timer_;   // choice -> live timer id
    uint64_t batch_timer_ = 0;

    SimTime last_foreign_proposal_ = -1;
    uint64_t own_top_ = 0; // highest choice this replica has ever targeted
    uint64_t batch_seq_ = 0;
    uint64_t noop_seq_ = 0;
    uint64_t retries_total_ = 0;
    uint64_t safety_conflicts_ = 0;
    uint64_t piggyback_commits_ = 0;
};

} // namespace baxsim
