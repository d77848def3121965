#pragma once

#include <deque>
#include <map>
#include <set>

#include "baxsim/protocol.hpp"
#include "baxsim/simnet.hpp"
#include "baxsim/smr.hpp"

namespace baxsim {

enum class ViewTimeoutMode { fixed, exponential };

struct MultiPaxosOptions {
    Micros view_timeout = seconds(5);
    ViewTimeoutMode timeout_mode = ViewTimeoutMode::fixed;
    Micros batch_window = ms(5);
    uint32_t batch_cap = 10000;
};

// Leader-based comparator. Replica 0 boots as the stable leader of view 0;
// leader of view v is v mod n. The election runs Prepare-Promise once over
// the open instance suffix; committed instances are announced through a
// commit watermark piggybacked on Proposes and heartbeats instead of
// dedicated Learn messages.
class MultiPaxosReplica : public Node {
public:
    MultiPaxosReplica(ReplicaId id, ClusterConfig cluster, MultiPaxosOptions opt,
                      uint64_t seed);

    // Candidate re-election timeout. Fixed mode is the constant base; the
    // exponential mode doubles per consecutive failed election plus additive
    // jitter so two candidates rarely collide forever.
    static Micros election_timeout(const MultiPaxosOptions& opt, uint32_t consecutive,
                                   Rng& rng);

    void start(Sim&) override;
    void handle_message(Sim&, ReplicaId src, const ProtocolMessage&) override;
    void handle_timer(Sim&, uint64_t timer_id) override;
    void handle_command(Sim&, const Command&) override;

    std::optional<std::pair<uint64_t, ReplicaId>> leadership() const override;

    const std::vector<LogEntry>& decided_log() const override { return smr_.log(); }
    uint64_t applied_count() const override { return smr_.applied_count(); }
    uint64_t state_machine_digest() const override { return smr_.kv().digest(); }
    void debug_dump(std::ostream&) const override;

    bool is_leader() const { return role_ == Role::leader; }
    uint64_t view() const { return view_; }
    const std::vector<SimTime>& elections_won() const { return elections_won_; }
    uint64_t last_decided() const { return smr_.last_applied; }
    const KvStateMachine& kv() const { return smr_.kv(); }

private:
    enum class Role { follower, candidate, leader };

    struct Outstanding {
        Value value;
        std::set<ReplicaId> accepts;
    };

    ReplicaId leader_of(uint64_t view) const { return view % cluster_.n; }

    void on_propose_msg(Sim&, ReplicaId src, const Propose&);
    void on_accept_msg(Sim&, ReplicaId src, const Accept&);
    void on_elect_prepare(Sim&, ReplicaId src, const ElectPrepare&);
    void on_elect_promise(Sim&, ReplicaId src, const ElectPromise&);
    void on_heartbeat(Sim&, ReplicaId src, const Heartbeat&);
    void on_forward(Sim&, ReplicaId src, const Forward&);

    void adopt_view(Sim&, uint64_t view, bool leader_heard);
    void become_leader(Sim&);
    void step_down(Sim&);
    void start_election(Sim&);
    void propose_batch(Sim&);
    void advance_commit(Sim&, uint64_t commit_index, uint64_t view_round);
    void leader_update_commit(Sim&);
    void reset_view_timer(Sim&);
    void arm_batch_timer(Sim&);
    void arm_forward_timer(Sim&);
    Micros view_timeout_now();

    ReplicaId id_;
    ClusterConfig cluster_;
    MultiPaxosOptions opt_;
    Rng rng_;

    uint64_t view_ = 0;
    Role role_ = Role::follower;
    bool leader_heard_ = false; // heard from the current view's leader
    MaybeTry suffix_promised_;  // highest election prepare granted

    std::map<uint64_t, ChoiceState> instances_;
    SmrState smr_;

    // Leader state.
    std::deque<Command> pending_;
    std::map<uint64_t, Outstanding> outstanding_;
    std::set<uint64_t> decided_ahead_; // decided beyond the contiguous prefix
    uint64_t next_instance_ = 1;
    uint64_t commit_index_ = 0;

    // Candidate state.
    std::map<ReplicaId, ElectPromise> elect_promises_;
    uint32_t consecutive_elections_ = 0;

    // Follower state.
    std::deque<Command> forward_pending_;

    uint64_t view_timer_ = 0;
    uint64_t heartbeat_timer_ = 0;
    uint64_t batch_timer_ = 0;
    uint64_t forward_timer_ = 0;

    std::vector<SimTime> elections_won_;
};

} // namespace baxsim
