#include "baxsim/multipaxos.hpp"

#include <algorithm>

namespace baxsim {

MultiPaxosReplica::MultiPaxosReplica(ReplicaId id, ClusterConfig cluster,
                                     MultiPaxosOptions opt, uint64_t seed)
    : id_(id), cluster_(cluster), opt_(opt), rng_(Rng::derive(seed, 0x3d0 + id)) {}

void MultiPaxosReplica::start(Sim& sim) {
    // View 0 boots with replica 0 as the stable leader; no startup election.
    view_ = 0;
    if (id_ == leader_of(0)) {
        role_ = Role::leader;
        leader_heard_ = true;
        heartbeat_timer_ = sim.set_timer(id_, opt_.view_timeout / 4);
    } else {
        role_ = Role::follower;
        leader_heard_ = true;
        reset_view_timer(sim);
    }
}

std::optional<std::pair<uint64_t, ReplicaId>> MultiPaxosReplica::leadership() const {
    if (role_ == Role::leader) return std::make_pair(view_, id_);
    if (role_ == Role::follower && leader_heard_)
        return std::make_pair(view_, leader_of(view_));
    return std::nullopt;
}

Micros MultiPaxosReplica::election_timeout(const MultiPaxosOptions& opt,
                                           uint32_t consecutive, Rng& rng) {
    if (opt.timeout_mode == ViewTimeoutMode::fixed) return opt.view_timeout;
    const uint32_t shift = std::min<uint32_t>(consecutive, 16);
    const Micros base = opt.view_timeout << shift;
    return base +
           static_cast<Micros>(rng.uniform01() * static_cast<double>(opt.view_timeout / 4));
}

Micros MultiPaxosReplica::view_timeout_now() {
    return election_timeout(opt_, consecutive_elections_, rng_);
}

void MultiPaxosReplica::reset_view_timer(Sim& sim) {
    sim.cancel_timer(view_timer_);
    view_timer_ = sim.set_timer(id_, view_timeout_now());
}

void MultiPaxosReplica::arm_batch_timer(Sim& sim) {
    if (batch_timer_ == 0 && !pending_.empty())
        batch_timer_ = sim.set_timer(id_, opt_.batch_window);
}

void MultiPaxosReplica::arm_forward_timer(Sim& sim) {
    if (forward_timer_ == 0 && !forward_pending_.empty())
        forward_timer_ = sim.set_timer(id_, opt_.batch_window);
}

void MultiPaxosReplica::handle_command(Sim& sim, const Command& cmd) {
    if (role_ == Role::leader) {
        smr_.note_client_command(cmd);
        pending_.push_back(cmd);
        arm_batch_timer(sim);
    } else {
        forward_pending_.push_back(cmd);
        arm_forward_timer(sim);
    }
}

void MultiPaxosReplica::on_forward(Sim& sim, ReplicaId, const Forward& msg) {
    if (role_ != Role::leader) {
        // Not the leader any more; relay once a leader is known again.
        for (const auto& c : msg.commands) forward_pending_.push_back(c);
        arm_forward_timer(sim);
        return;
    }
    for (const auto& c : msg.commands) {
        smr_.note_client_command(c);
        pending_.push_back(c);
    }
    arm_batch_timer(sim);
}

void MultiPaxosReplica::propose_batch(Sim& sim) {
    if (role_ != Role::leader || pending_.empty()) return;
    std::vector<Command> cmds;
    while (!pending_.empty() && cmds.size() < opt_.batch_cap) {
        const Command& front = pending_.front();
        const bool dead = smr_.already_applied(request_id(front)) ||
                          (front.deadline > 0 && sim.now() > front.deadline);
        if (dead) {
            pending_.pop_front();
            continue;
        }
        cmds.push_back(front);
        pending_.pop_front();
    }
    if (cmds.empty()) return;
    const uint64_t inst = next_instance_++;
    Value value = Value::make(std::move(cmds), id_, inst, sim.now());
    outstanding_[inst] = Outstanding{value, {}};
    Propose p;
    p.choice = inst;
    p.try_ = TryNumber{view_, id_};
    p.value = std::move(value);
    p.commit_index = commit_index_;
    sim.trace(id_, "mp_propose", "inst=" + std::to_string(inst));
    sim.broadcast(id_, std::move(p));
}

void MultiPaxosReplica::handle_message(Sim& sim, ReplicaId src, const ProtocolMessage& msg) {
    if (const auto* m = std::get_if<Propose>(&msg)) {
        on_propose_msg(sim, src, *m);
    } else if (const auto* m = std::get_if<Accept>(&msg)) {
        on_accept_msg(sim, src, *m);
    } else if (const auto* m = std::get_if<ElectPrepare>(&msg)) {
        on_elect_prepare(sim, src, *m);
    } else if (const auto* m = std::get_if<ElectPromise>(&msg)) {
        on_elect_promise(sim, src, *m);
    } else if (const auto* m = std::get_if<Heartbeat>(&msg)) {
        on_heartbeat(sim, src, *m);
    } else if (const auto* m = std::get_if<Forward>(&msg)) {
        on_forward(sim, src, *m);
    }
}

void MultiPaxosReplica::adopt_view(Sim& sim, uint64_t view, bool leader_heard) {
    if (view < view_) return;
    const bool higher = view > view_;
    if (higher) {
        view_ = view;
        if (role_ != Role::follower) step_down(sim);
        elect_promises_.clear();
        leader_heard_ = leader_heard;
    } else if (leader_heard) {
        leader_heard_ = true;
    }
    if (role_ != Role::leader) reset_view_timer(sim);
}

void MultiPaxosReplica::step_down(Sim& sim) {
    role_ = Role::follower;
    sim.cancel_timer(heartbeat_timer_);
    heartbeat_timer_ = 0;
    sim.cancel_timer(batch_timer_);
    batch_timer_ = 0;
    // Unresolved batches chase the new leader.
    for (auto& [inst, out] : outstanding_) {
        for (const Command& c : out.value.batch().commands)
            if (!smr_.already_applied(request_id(c))) forward_pending_.push_back(c);
    }
    outstanding_.clear();
    for (const Command& c : pending_)
        forward_pending_.push_back(c);
    pending_.clear();
    arm_forward_timer(sim);
}

void MultiPaxosReplica::on_propose_msg(Sim& sim, ReplicaId src, const Propose& msg) {
    if (msg.try_.round > view_) adopt_view(sim, msg.try_.round, true);
    if (msg.try_.round == view_) {
        leader_heard_ = true;
        if (role_ != Role::leader) reset_view_timer(sim);
    }
    if (suffix_promised_ && *suffix_promised_ > msg.try_) return;
    ChoiceState& cs = instances_[msg.choice];
    cs.id = msg.choice;
    if (!cs.accepted_try || !(*cs.accepted_try > msg.try_)) {
        cs.accepted_try = msg.try_;
        cs.accepted_value = msg.value;
        Accept a;
        a.choice = msg.choice;
        a.accepted_try = msg.try_;
        a.accepted_value = msg.value;
        sim.send(id_, src, std::move(a));
    }
    if (msg.commit_index) advance_commit(sim, *msg.commit_index, msg.try_.round);
}

void MultiPaxosReplica::advance_commit(Sim& sim, uint64_t commit_index, uint64_t view_round) {
    while (smr_.last_applied < commit_index) {
        auto it = instances_.find(smr_.last_applied + 1);
        if (it == instances_.end() || !it->second.accepted_try) return;
        if (it->second.accepted_try->round != view_round) return; // stale acceptance
        if (!it->second.decided) {
            it->second.decided = true;
            it->second.decision = it->second.accepted_value;
        }
        smr_.apply_value(sim, id_, it->first, *it->second.decision);
    }
}

void MultiPaxosReplica::on_accept_msg(Sim& sim, ReplicaId src, const Accept& msg) {
    if (role_ != Role::leader || msg.accepted_try.round != view_) return;
    auto it = outstanding_.find(msg.choice);
    if (it == outstanding_.end()) return;
    it->second.accepts.insert(src);
    if (it->second.accepts.size() < cluster_.quorum()) return;
    ChoiceState& cs = instances_[msg.choice];
    cs.id = msg.choice;
    if (!cs.decided) {
        cs.decided = true;
        cs.decision = it->second.value;
        cs.accepted_try = msg.accepted_try;
        cs.accepted_value = it->second.value;
    }
    decided_ahead_.insert(msg.choice);
    outstanding_.erase(it);
    leader_update_commit(sim);
}

void MultiPaxosReplica::leader_update_commit(Sim& sim) {
    while (decided_ahead_.count(commit_index_ + 1)) {
        decided_ahead_.erase(commit_index_ + 1);
        ++commit_index_;
        auto& cs = instances_.at(commit_index_);
        smr_.apply_value(sim, id_, commit_index_, *cs.decision);
    }
    // Quiet periods still propagate the watermark through heartbeats.
}

void MultiPaxosReplica::on_heartbeat(Sim& sim, ReplicaId src, const Heartbeat& msg) {
    if (msg.view > view_) adopt_view(sim, msg.view, true);
    if (msg.view == view_ && src == leader_of(view_)) {
        leader_heard_ = true;
        if (role_ != Role::leader) reset_view_timer(sim);
        advance_commit(sim, msg.commit_index, msg.view);
    }
    if (role_ != Role::leader && !forward_pending_.empty()) arm_forward_timer(sim);
}

void MultiPaxosReplica::start_election(Sim& sim) {
    ++consecutive_elections_;
    uint64_t v = view_ + 1;
    while (leader_of(v) != id_) ++v;
    view_ = v;
    role_ = Role::candidate;
    leader_heard_ = false;
    elect_promises_.clear();
    sim.trace(id_, "election_start", "view=" + std::to_string(v));
    sim.broadcast(id_, ElectPrepare{v, smr_.last_applied + 1});
    reset_view_timer(sim); // candidacy itself times out and retries higher
}

void MultiPaxosReplica::on_elect_prepare(Sim& sim, ReplicaId src, const ElectPrepare& msg) {
    const TryNumber tn{msg.view, leader_of(msg.view)};
    if (suffix_promised_ && *suffix_promised_ >= tn) return;
    suffix_promised_ = tn;
    if (msg.view > view_) adopt_view(sim, msg.view, false);
    ElectPromise reply;
    reply.view = msg.view;
    reply.from_choice = msg.from_choice;
    for (const auto& [inst, cs] : instances_) {
        if (inst < msg.from_choice || !cs.accepted_try) continue;
        reply.accepted.push_back(AcceptedEntry{inst, *cs.accepted_try, *cs.accepted_value});
    }
    sim.send(id_, src, std::move(reply));
}

void MultiPaxosReplica::on_elect_promise(Sim& sim, ReplicaId src, const ElectPromise& msg) {
    if (role_ != Role::candidate || msg.view != view_) return;
    elect_promises_.emplace(src, msg);
    if (elect_promises_.size() < cluster_.quorum()) return;
    become_leader(sim);
}

void MultiPaxosReplica::become_leader(Sim& sim) {
    role_ = Role::leader;
    leader_heard_ = true;
    consecutive_elections_ = 0;
    elections_won_.push_back(sim.now());
    sim.trace(id_, "leader_elected", "view=" + std::to_string(view_));
    sim.cancel_timer(view_timer_);
    view_timer_ = 0;

    // Adopt the highest-try accepted value per instance from the promise set
    // and re-propose the whole undecided suffix under this view.
    std::map<uint64_t, AcceptedEntry> adopted;
    for (const auto& [from, promise] : elect_promises_) {
        for (const auto& e : promise.accepted) {
            auto it = adopted.find(e.choice);
            if (it == adopted.end() || e.try_ > it->second.try_) adopted[e.choice] = e;
        }
    }
    elect_promises_.clear();
    commit_index_ = smr_.last_applied;
    decided_ahead_.clear();
    outstanding_.clear();
    next_instance_ = smr_.last_applied + 1;
    for (const auto& [inst, e] : adopted) next_instance_ = std::max(next_instance_, inst + 1);

    // Re-propose the undecided suffix under this view; holes with no accepted
    // value anywhere get a no-op so the commit watermark can pass them.
    for (uint64_t inst = commit_index_ + 1; inst < next_instance_; ++inst) {
        Value value;
        auto it = adopted.find(inst);
        if (it != adopted.end()) {
            value = it->second.value;
        } else {
            value = Value::make({Command{UINT64_MAX, inst, CommandKind::noop, 0, 0, 0}},
                                id_, inst, sim.now());
        }
        outstanding_[inst] = Outstanding{value, {}};
        Propose p;
        p.choice = inst;
        p.try_ = TryNumber{view_, id_};
        p.value = std::move(value);
        p.commit_index = commit_index_;
        sim.broadcast(id_, std::move(p));
    }

    sim.broadcast(id_, Heartbeat{view_, commit_index_});
    heartbeat_timer_ = sim.set_timer(id_, opt_.view_timeout / 4);

    // Local commands queued while out of power go through the normal path.
    for (const Command& c : forward_pending_) {
        smr_.note_client_command(c);
        pending_.push_back(c);
    }
    forward_pending_.clear();
    arm_batch_timer(sim);
}

void MultiPaxosReplica::handle_timer(Sim& sim, uint64_t timer_id) {
    if (timer_id == heartbeat_timer_) {
        heartbeat_timer_ = 0;
        if (role_ != Role::leader) return;
        sim.broadcast(id_, Heartbeat{view_, commit_index_});
        heartbeat_timer_ = sim.set_timer(id_, opt_.view_timeout / 4);
        return;
    }
    if (timer_id == batch_timer_) {
        batch_timer_ = 0;
        propose_batch(sim);
        arm_batch_timer(sim);
        return;
    }
    if (timer_id == forward_timer_) {
        forward_timer_ = 0;
        if (role_ == Role::leader) {
            for (const Command& c : forward_pending_) {
                smr_.note_client_command(c);
                pending_.push_back(c);
            }
            forward_pending_.clear();
            arm_batch_timer(sim);
            return;
        }
        if (forward_pending_.empty()) return;
        if (leader_heard_ && leader_of(view_) != id_ && !sim.crashed(leader_of(view_))) {
            Forward f;
            f.commands.assign(forward_pending_.begin(), forward_pending_.end());
            forward_pending_.clear();
            sim.send(id_, leader_of(view_), std::move(f));
        } else {
            // No reachable leader yet; hold and retry.
            forward_timer_ = sim.set_timer(id_, opt_.batch_window * 4);
        }
        return;
    }
    if (timer_id == view_timer_) {
        view_timer_ = 0;
        if (role_ == Role::leader) return;
        start_election(sim);
        return;
    }
}

void MultiPaxosReplica::debug_dump(std::ostream& os) const {
    os << "replica " << id_ << " view=" << view_ << " role="
       << (role_ == Role::leader ? "leader"
                                 : (role_ == Role::candidate ? "candidate" : "follower"))
       << " applied=" << smr_.last_applied << " commit=" << commit_index_ << "\n";
    for (const auto& [inst, cs] : instances_) {
        os << "  instance " << inst << ": accepted_view="
           << (cs.accepted_try ? std::to_string(cs.accepted_try->round) : "-")
           << " decided=" << (cs.decided ? digest_hex(cs.decision->digest()) : "no") << "\n";
    }
}

} // namespace baxsim
