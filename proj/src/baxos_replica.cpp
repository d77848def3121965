#include "baxsim/baxos_replica.hpp"

#include <algorithm>

namespace baxsim {

namespace {
std::vector<ReplicaId> peers_of(ReplicaId id, uint32_t n) {
    std::vector<ReplicaId> peers;
    for (ReplicaId r = 0; r < n; ++r)
        if (r != id) peers.push_back(r);
    return peers;
}
} // namespace

BaxosReplica::BaxosReplica(ReplicaId id, ClusterConfig cluster, BaxosOptions opt,
                           Micros rtt_prior, uint64_t seed)
    : id_(id),
      cluster_(cluster),
      opt_(opt),
      backoff_(opt.scheme, Rng::derive(seed, 0xb0 + id)),
      rtt_(rtt_prior, peers_of(id, cluster.n)) {}

void BaxosReplica::start(Sim& sim) { arm_repair_timer(sim); }

void BaxosReplica::arm_repair_timer(Sim& sim) {
    const uint64_t id = sim.set_timer(id_, 2 * rtt_.current());
    timers_[id] = TimerRef{TimerKind::repair, 0};
}

ChoiceState& BaxosReplica::choice(uint64_t c) {
    auto [it, inserted] = choices_.try_emplace(c);
    if (inserted) it->second.id = c;
    return it->second;
}

TryNumber BaxosReplica::next_try(uint64_t c) const {
    uint64_t round = 0;
    auto it = choices_.find(c);
    if (it != choices_.end()) {
        if (it->second.promised_try) round = it->second.promised_try->round;
        round = std::max(round, it->second.proposed_try.round);
    }
    return TryNumber{round + 1, id_};
}

uint64_t BaxosReplica::next_target() const {
    // Rule 1 under pipelining: monotone per-replica targets starting from the
    // applied frontier, skipping slots already decided or already claimed by a
    // live session. Staggered arrival means most slots see a single proposer;
    // holes left behind by timeouts are the repair probe's job.
    uint64_t c = std::max(smr_.last_applied, own_top_) + 1;
    while (true) {
        if (sessions_.count(c)) {
            ++c;
            continue;
        }
        auto it = choices_.find(c);
        if (it != choices_.end() && it->second.decided) {
            ++c;
            continue;
        }
        return c;
    }
}

Micros BaxosReplica::phase_timeout() const {
    return std::max(opt_.phase_timer_floor, 2 * rtt_.current());
}

bool BaxosReplica::foreign_traffic_recent(Sim& sim) const {
    return last_foreign_proposal_ >= 0 &&
           sim.now() - last_foreign_proposal_ <= 2 * rtt_.current();
}

void BaxosReplica::handle_command(Sim& sim, const Command& cmd) {
    smr_.note_client_command(cmd);
    pending_.push_back(cmd);
    if (batch_timer_ == 0 && sessions_.size() < opt_.pipeline) {
        batch_timer_ = sim.set_timer(id_, opt_.batch_window);
        timers_[batch_timer_] = TimerRef{TimerKind::batch, 0};
    }
}

std::vector<Command> BaxosReplica::live_commands(std::vector<Command> cmds,
                                                 SimTime now) const {
    std::erase_if(cmds, [&](const Command& c) {
        if (c.kind == CommandKind::noop) return false;
        if (smr_.already_applied(request_id(c))) return true;
        // The client has given up on it; proposing it only clogs the queue.
        return c.deadline > 0 && now > c.deadline;
    });
    return cmds;
}

void BaxosReplica::try_submit(Sim& sim) {
    while (sessions_.size() < opt_.pipeline && !pending_.empty()) {
        std::vector<Command> cmds;
        while (!pending_.empty() && cmds.size() < opt_.batch_cap) {
            cmds.push_back(pending_.front());
            pending_.pop_front();
        }
        cmds = live_commands(std::move(cmds), sim.now());
        if (!cmds.empty())
            start_session(sim, Value::make(std::move(cmds), id_, ++batch_seq_, sim.now()));
    }
}

void BaxosReplica::resubmit(Sim& sim, Value command) {
    auto live = live_commands(command.batch().commands, sim.now());
    if (live.empty()) {
        try_submit(sim);
        return;
    }
    start_session(sim, Value::make(std::move(live), id_, ++batch_seq_, sim.now()));
}

void BaxosReplica::start_session(Sim& sim, Value command) {
    start_session_at(sim, next_target(), std::move(command));
}

void BaxosReplica::start_session_at(Sim& sim, uint64_t c, Value command) {
    own_top_ = std::max(own_top_, c);
    ProposerSession& s = sessions_[c];
    s.choice = c;
    s.command = std::move(command);
    s.phase = ProposerSession::Phase::idle;

    // One-round-trip fast path: a full embedded-Promise quorum for exactly
    // this choice, not superseded locally and with no contending proposer
    // traffic within the last couple of round trips.
    if (opt_.piggyback && armed_ && armed_->choice == c &&
        armed_->promises.size() >= cluster_.quorum() && !foreign_traffic_recent(sim)) {
        ChoiceState& cs = choice(c);
        const bool superseded = cs.promised_try && *cs.promised_try > armed_->try_;
        if (!superseded && !cs.decided) {
            s.try_ = armed_->try_;
            s.promises = armed_->promises;
            s.used_piggyback = true;
            cs.proposed_try = armed_->try_;
            armed_.reset();
            begin_propose(sim, s);
            return;
        }
    }
    if (armed_ && armed_->choice <= c) armed_.reset();
    begin_prepare(sim, s);
}

void BaxosReplica::begin_prepare(Sim& sim, ProposerSession& s) {
    const uint64_t c = s.choice;
    ChoiceState& cs = choice(c);
    const TryNumber tn = next_try(c);
    cs.proposed_try = tn;
    s.try_ = tn;
    s.phase = ProposerSession::Phase::preparing;
    s.clear_responses();
    s.phase_started = sim.now();

    sent_times_[{c, tn}] = SentTimes{sim.now(), -1};
    sent_order_.push_back({c, tn});
    while (sent_order_.size() > 512) {
        sent_times_.erase(sent_order_.front());
        sent_order_.pop_front();
    }

    sim.trace(id_, "prepare_bcast",
              "choice=" + std::to_string(c) + " round=" + std::to_string(tn.round));
    sim.broadcast(id_, Prepare{c, tn});
    arm_phase_timer(sim, s);
}

void BaxosReplica::begin_propose(Sim& sim, ProposerSession& s) {
    const uint64_t c = s.choice;
    s.proposed_value = select_value(s);
    s.phase = ProposerSession::Phase::proposing;
    s.accepts.clear();
    s.phase_started = sim.now();

    Propose p;
    p.choice = c;
    p.try_ = s.try_;
    p.value = *s.proposed_value;
    if (opt_.piggyback) {
        const TryNumber next = next_try(c + 1);
        p.piggyback = Prepare{c + 1, next};
        armed_.emplace();
        armed_->choice = c + 1;
        armed_->try_ = next;
    }

    auto it = sent_times_.find({c, s.try_});
    if (it == sent_times_.end()) {
        sent_times_[{c, s.try_}] = SentTimes{-1, sim.now()};
        sent_order_.push_back({c, s.try_});
    } else {
        it->second.propose_at = sim.now();
    }

    sim.trace(id_, "propose_bcast",
              "choice=" + std::to_string(c) + " round=" + std::to_string(p.try_.round));
    sim.broadcast(id_, std::move(p));
    arm_phase_timer(sim, s);
}

void BaxosReplica::cancel_session_timer(Sim& sim, ProposerSession& s) {
    auto it = session_timer_.find(s.choice);
    if (it == session_timer_.end()) return;
    sim.cancel_timer(it->second);
    timers_.erase(it->second);
    session_timer_.erase(it);
}

void BaxosReplica::arm_phase_timer(Sim& sim, ProposerSession& s) {
    cancel_session_timer(sim, s);
    const uint64_t id = sim.set_timer(id_, phase_timeout());
    timers_[id] = TimerRef{TimerKind::phase, s.choice};
    session_timer_[s.choice] = id;
}

void BaxosReplica::record_rtt(Sim& sim, ReplicaId peer, uint64_t c, TryNumber tn,
                              bool phase2) {
    if (peer == id_) return;
    auto it = sent_times_.find({c, tn});
    if (it == sent_times_.end()) return;
    const SimTime sent = phase2 ? it->second.propose_at : it->second.prepare_at;
    if (sent >= 0) rtt_.observe(peer, sim.now() - sent);
}

void BaxosReplica::handle_message(Sim& sim, ReplicaId src, const ProtocolMessage& msg) {
    if (const auto* m = std::get_if<Prepare>(&msg)) {
        on_prepare_msg(sim, src, *m);
    } else if (const auto* m = std::get_if<Promise>(&msg)) {
        on_promise_msg(sim, src, *m);
    } else if (const auto* m = std::get_if<Propose>(&msg)) {
        on_propose_msg(sim, src, *m);
    } else if (const auto* m = std::get_if<Accept>(&msg)) {
        on_accept_msg(sim, src, *m);
    } else if (const auto* m = std::get_if<Learn>(&msg)) {
        on_learn_msg(sim, src, *m);
    }
}

void BaxosReplica::on_prepare_msg(Sim& sim, ReplicaId src, const Prepare& msg) {
    if (src != id_) last_foreign_proposal_ = sim.now();
    if (auto promise = on_prepare(choice(msg.choice), msg)) {
        sim.send(id_, src, std::move(*promise));
    }
}

void BaxosReplica::on_promise_msg(Sim& sim, ReplicaId src, const Promise& msg) {
    record_rtt(sim, src, msg.choice, msg.try_, false);
    auto it = sessions_.find(msg.choice);
    if (it == sessions_.end()) return;
    ProposerSession& s = it->second;
    if (s.phase != ProposerSession::Phase::preparing || !(msg.try_ == s.try_)) return;
    s.promises.emplace(src, msg);
    if (s.promises.size() >= cluster_.quorum()) begin_propose(sim, s);
}

void BaxosReplica::on_propose_msg(Sim& sim, ReplicaId src, const Propose& msg) {
    if (src != id_) last_foreign_proposal_ = sim.now();
    auto accept = on_propose(choice(msg.choice), msg);
    if (!accept) return;
    if (msg.piggyback) {
        if (auto promise = on_prepare(choice(msg.piggyback->choice), *msg.piggyback))
            accept->piggyback = std::move(*promise);
    }
    sim.send(id_, src, std::move(*accept));
}

void BaxosReplica::on_accept_msg(Sim& sim, ReplicaId src, const Accept& msg) {
    record_rtt(sim, src, msg.choice, msg.accepted_try, true);
    if (msg.piggyback && armed_ && armed_->choice == msg.piggyback->choice &&
        msg.piggyback->try_ == armed_->try_) {
        armed_->promises.emplace(src, *msg.piggyback);
    }
    auto it = sessions_.find(msg.choice);
    if (it == sessions_.end()) return;
    ProposerSession& s = it->second;
    if (s.phase != ProposerSession::Phase::proposing || !(msg.accepted_try == s.try_))
        return;
    s.accepts.insert(src);
    if (s.accepts.size() < cluster_.quorum()) return;

    cancel_session_timer(sim, s);
    ChoiceState& cs = choice(s.choice);
    const DecisionOutcome outcome = decide_locally(cs, s);
    if (outcome.decided_now) {
        backoff_.on_success();
        if (s.used_piggyback) ++piggyback_commits_;
        sim.trace(id_, "decide",
                  "choice=" + std::to_string(s.choice) +
                      " own=" + (outcome.own_command ? "1" : "0"));
    }
    sim.broadcast(id_, Learn{s.choice, *s.proposed_value});
    apply_decided(sim);
    finish_session(sim, s.choice, outcome.own_command);
}

void BaxosReplica::finish_session(Sim& sim, uint64_t choice_idx, bool own) {
    auto it = sessions_.find(choice_idx);
    if (it == sessions_.end()) return;
    Value cmd = it->second.command;
    cancel_session_timer(sim, it->second);
    sessions_.erase(it);
    if (own) {
        try_submit(sim);
    } else {
        // Rule 3: a foreign value took the slot; re-propose the client batch
        // at the fresh frontier. Lost races do not feed the backoff counter.
        resubmit(sim, std::move(cmd));
    }
}

void BaxosReplica::on_learn_msg(Sim& sim, ReplicaId, const Learn& msg) {
    ChoiceState& cs = choice(msg.choice);
    const LearnResult result = on_learn(cs, msg);
    if (result == LearnResult::conflict) {
        ++safety_conflicts_;
        return;
    }
    if (result == LearnResult::decided_now) {
        apply_decided(sim);
        // Rule 1 re-read plus Rule 3: sessions racing for slots that just got
        // decided skip ahead to the fresh frontier.
        std::vector<uint64_t> decided_under_session;
        for (const auto& [c, s] : sessions_) {
            auto it = choices_.find(c);
            if (it != choices_.end() && it->second.decided)
                decided_under_session.push_back(c);
        }
        for (uint64_t c : decided_under_session) {
            const ChoiceState& cs = choices_.at(c);
            const bool own = cs.decision && *cs.decision == sessions_.at(c).command;
            finish_session(sim, c, own);
        }
        // An idle replica behind a decided gap probes the missing choice so
        // its log can advance (promises surface the accepted value).
        if (sessions_.empty() && pending_.empty() &&
            msg.choice > smr_.last_applied + 1 &&
            !choice(smr_.last_applied + 1).decided) {
            std::vector<Command> noop{
                Command{UINT64_MAX, ++noop_seq_, CommandKind::noop, 0, 0, 0}};
            start_session(sim, Value::make(std::move(noop), id_, ++batch_seq_, sim.now()));
        }
    }
}

void BaxosReplica::apply_decided(Sim& sim) {
    while (true) {
        auto it = choices_.find(smr_.last_applied + 1);
        if (it == choices_.end() || !it->second.decided) break;
        smr_.apply_value(sim, id_, it->first, *it->second.decision);
    }
}

void BaxosReplica::handle_timer(Sim& sim, uint64_t timer_id) {
    auto tit = timers_.find(timer_id);
    if (tit == timers_.end()) return;
    const TimerRef ref = tit->second;
    timers_.erase(tit);

    if (ref.kind == TimerKind::batch) {
        batch_timer_ = 0;
        try_submit(sim);
        return;
    }
    if (ref.kind == TimerKind::repair) {
        // Catch-up: if the slot after the applied prefix sits undecided with
        // no session of ours on it, run Prepare there to surface whatever was
        // accepted (or close it with a no-op).
        arm_repair_timer(sim);
        const uint64_t hole = smr_.last_applied + 1;
        if (!choice(hole).decided && !sessions_.count(hole)) {
            const bool frontier_idle = sessions_.empty();
            if (!frontier_idle || !pending_.empty() || own_top_ >= hole) {
                std::vector<Command> noop{
                    Command{UINT64_MAX, ++noop_seq_, CommandKind::noop, 0, 0, 0}};
                start_session_at(sim, hole,
                                 Value::make(std::move(noop), id_, ++batch_seq_, sim.now()));
            }
        }
        return;
    }

    auto sit = sessions_.find(ref.choice);
    if (sit == sessions_.end()) return;
    ProposerSession& s = sit->second;
    session_timer_.erase(ref.choice);

    if (ref.kind == TimerKind::phase) {
        if (s.phase != ProposerSession::Phase::preparing &&
            s.phase != ProposerSession::Phase::proposing)
            return;
        s.clear_responses();
        s.phase = ProposerSession::Phase::backing_off;
        backoff_.on_retry();
        ++retries_total_;
        const Micros wait = backoff_.draw(rtt_);
        const uint64_t id = sim.set_timer(id_, wait);
        timers_[id] = TimerRef{TimerKind::backoff, ref.choice};
        session_timer_[ref.choice] = id;
        sim.trace(id_, "backoff",
                  "l=" + std::to_string(backoff_.retries()) +
                      " wait_us=" + std::to_string(wait));
        return;
    }

    // Backoff expiry: re-read the frontier and re-propose what is still live.
    Value cmd = s.command;
    sessions_.erase(sit);
    resubmit(sim, std::move(cmd));
}

void BaxosReplica::debug_dump(std::ostream& os) const {
    os << "replica " << id_ << " last_decided=" << smr_.last_applied
       << " retries_l=" << backoff_.retries() << " pending=" << pending_.size()
       << " sessions=" << sessions_.size() << "\n";
    for (const auto& [c, s] : sessions_) {
        os << "  session choice=" << c << " round=" << s.try_.round
           << " phase=" << static_cast<int>(s.phase) << "\n";
    }
    for (const auto& [c, cs] : choices_) {
        os << "  choice " << c << ": promised="
           << (cs.promised_try ? std::to_string(cs.promised_try->round) : "-")
           << " accepted=" << (cs.accepted_try ? std::to_string(cs.accepted_try->round) : "-")
           << " decided=" << (cs.decided ? digest_hex(cs.decision->digest()) : "no")
           << "\n";
    }
}

} // namespace baxsim
