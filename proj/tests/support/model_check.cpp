#include "support/model_check.hpp"

#include <array>
#include <unordered_set>
#include <vector>

#include "baxsim/protocol.hpp"
#include "support/util.hpp"

namespace baxsim::test {

namespace {

constexpr uint32_t kReplicas = 3;
constexpr uint32_t kProposers = 2;
constexpr uint32_t kQuorum = 2; // f+1 for n=3
constexpr uint64_t kChoice = 1;

struct MMsg {
    ReplicaId src = 0;
    ReplicaId dst = 0;
    ProtocolMessage msg;
};

struct Proposer {
    ProposerSession session;
    uint32_t timeouts_used = 0;
    bool done = false;
};

struct ModelState {
    std::array<ChoiceState, kReplicas> acceptors;
    std::array<Proposer, kProposers> proposers;
    std::vector<MMsg> in_flight;
};

class Checker {
public:
    explicit Checker(uint32_t timeout_budget)
        : budget_(timeout_budget), command_{val(101, 0), val(202, 1)} {}

    ModelCheckResult run() {
        ModelState init;
        for (uint32_t p = 0; p < kProposers; ++p) start_prepare(init, p);
        explore(init);
        return result_;
    }

private:
    void fail(const std::string& why) {
        ++result_.violations;
        if (result_.first_violation.empty()) result_.first_violation = why;
    }

    void check_invariants(const ModelState& s) {
        MaybeValue decided;
        bool any = false;
        for (const auto& acc : s.acceptors) {
            if (!acc.decided) continue;
            any = true;
            // Validity: a decision is one of the two submitted commands.
            if (!(*acc.decision == command_[0] || *acc.decision == command_[1]))
                fail("validity: decided value was never proposed");
            // Agreement: all decided replicas agree.
            if (!decided) {
                decided = acc.decision;
            } else if (!(*decided == *acc.decision)) {
                fail("agreement: two replicas decided differently");
            }
        }
        if (any) ++result_.decided_states;
    }

    void start_prepare(ModelState& s, uint32_t p) {
        ChoiceState& own = s.acceptors[p];
        uint64_t round = own.proposed_try.round;
        if (own.promised_try) round = std::max(round, own.promised_try->round);
        const TryNumber tn{round + 1, static_cast<ReplicaId>(p)};
        own.proposed_try = tn;
        auto& session = s.proposers[p].session;
        session.choice = kChoice;
        session.try_ = tn;
        session.command = command_[p];
        session.phase = ProposerSession::Phase::preparing;
        session.clear_responses();
        for (ReplicaId dst = 0; dst < kReplicas; ++dst)
            s.in_flight.push_back({static_cast<ReplicaId>(p), dst, Prepare{kChoice, tn}});
    }

    void deliver(ModelState& s, const MMsg& m) {
        if (const auto* prep = std::get_if<Prepare>(&m.msg)) {
            if (auto promise = on_prepare(s.acceptors[m.dst], *prep))
                s.in_flight.push_back({m.dst, m.src, std::move(*promise)});
            return;
        }
        if (const auto* prom = std::get_if<Promise>(&m.msg)) {
            if (m.dst >= kProposers) return;
            Proposer& p = s.proposers[m.dst];
            auto& ses = p.session;
            if (p.done || ses.phase != ProposerSession::Phase::preparing) return;
            if (prom->choice != ses.choice || !(prom->try_ == ses.try_)) return;
            ses.promises.emplace(m.src, *prom);
            if (ses.promises.size() < kQuorum) return;
            ses.proposed_value = select_value(ses);
            ses.phase = ProposerSession::Phase::proposing;
            ses.accepts.clear();
            for (ReplicaId dst = 0; dst < kReplicas; ++dst)
                s.in_flight.push_back(
                    {m.dst, dst,
                     Propose{kChoice, ses.try_, *ses.proposed_value, std::nullopt,
                             std::nullopt}});
            return;
        }
        if (const auto* prop = std::get_if<Propose>(&m.msg)) {
            if (auto accept = on_propose(s.acceptors[m.dst], *prop))
                s.in_flight.push_back({m.dst, m.src, std::move(*accept)});
            return;
        }
        if (const auto* acc = std::get_if<Accept>(&m.msg)) {
            if (m.dst >= kProposers) return;
            Proposer& p = s.proposers[m.dst];
            auto& ses = p.session;
            if (p.done || ses.phase != ProposerSession::Phase::proposing) return;
            if (acc->choice != ses.choice || !(acc->accepted_try == ses.try_)) return;
            ses.accepts.insert(m.src);
            if (ses.accepts.size() < kQuorum) return;
            decide_locally(s.acceptors[m.dst], ses);
            p.done = true;
            for (ReplicaId dst = 0; dst < kReplicas; ++dst)
                s.in_flight.push_back({m.dst, dst, Learn{kChoice, *ses.proposed_value}});
            return;
        }
        if (const auto* learn = std::get_if<Learn>(&m.msg)) {
            if (on_learn(s.acceptors[m.dst], *learn) == LearnResult::conflict)
                fail("integrity: learn tried to overwrite a decision");
            return;
        }
    }

    void timeout(ModelState& s, uint32_t p) {
        Proposer& prop = s.proposers[p];
        prop.session.clear_responses();
        ++prop.timeouts_used;
        start_prepare(s, p);
    }

    // Removes in-flight messages whose delivery is a no-op in `s` and will
    // stay one (tries only grow, decisions are final). Sound state-space
    // reduction: delivering an inert message never changes any replica.
    void drop_inert(ModelState& s) const {
        std::erase_if(s.in_flight, [&](const MMsg& m) {
            if (const auto* x = std::get_if<Prepare>(&m.msg)) {
                const auto& acc = s.acceptors[m.dst];
                return acc.promised_try && *acc.promised_try >= x->try_;
            }
            if (const auto* x = std::get_if<Propose>(&m.msg)) {
                const auto& acc = s.acceptors[m.dst];
                return acc.promised_try && *acc.promised_try > x->try_;
            }
            if (const auto* x = std::get_if<Promise>(&m.msg)) {
                if (m.dst >= kProposers) return true;
                const Proposer& p = s.proposers[m.dst];
                if (p.done || x->try_ < p.session.try_) return true;
                // Same try but phase 1 already over: tries never repeat.
                return x->try_ == p.session.try_ &&
                       p.session.phase != ProposerSession::Phase::preparing;
            }
            if (const auto* x = std::get_if<Accept>(&m.msg)) {
                if (m.dst >= kProposers) return true;
                const Proposer& p = s.proposers[m.dst];
                return p.done || x->accepted_try < p.session.try_;
            }
            if (const auto* x = std::get_if<Learn>(&m.msg)) {
                const auto& acc = s.acceptors[m.dst];
                return acc.decided && *acc.decision == x->value;
            }
            return false;
        });
    }

    uint64_t encode(const ModelState& s) const {
        Fnv1a h;
        auto add_try = [&](const MaybeTry& t) {
            h.add_u64(t ? (t->round << 8 | t->proposer) + 1 : 0);
        };
        for (const auto& acc : s.acceptors) {
            add_try(acc.promised_try);
            add_try(acc.accepted_try);
            h.add_u64(acc.accepted_value ? acc.accepted_value->digest() : 0);
            h.add_u64(acc.decided ? acc.decision->digest() : 0);
            h.add_u64(acc.proposed_try.round << 8 | acc.proposed_try.proposer);
        }
        for (const auto& p : s.proposers) {
            h.add_u64(static_cast<uint64_t>(p.session.phase) << 32 |
                      p.timeouts_used << 1 | (p.done ? 1 : 0));
            h.add_u64(p.session.try_.round << 8 | p.session.try_.proposer);
            for (const auto& [src, prom] : p.session.promises) {
                h.add_u64(0x9000 + src);
                add_try(prom.accepted_try);
                h.add_u64(prom.accepted_value ? prom.accepted_value->digest() : 0);
            }
            for (ReplicaId src : p.session.accepts) h.add_u64(0xa000 + src);
        }
        // In-flight multiset, order-insensitive: combine per-message hashes.
        uint64_t bag = 0;
        for (const auto& m : s.in_flight) {
            Fnv1a mh;
            mh.add_u64(m.src);
            mh.add_u64(m.dst);
            mh.add_u64(m.msg.index());
            if (const auto* x = std::get_if<Prepare>(&m.msg)) {
                mh.add_u64(x->try_.round << 8 | x->try_.proposer);
            } else if (const auto* x = std::get_if<Promise>(&m.msg)) {
                mh.add_u64(x->try_.round << 8 | x->try_.proposer);
                mh.add_u64(x->accepted_value ? x->accepted_value->digest() : 0);
                mh.add_u64(x->accepted_try ? (x->accepted_try->round << 8 |
                                              x->accepted_try->proposer) + 1 : 0);
            } else if (const auto* x = std::get_if<Propose>(&m.msg)) {
                mh.add_u64(x->try_.round << 8 | x->try_.proposer);
                mh.add_u64(x->value.digest());
            } else if (const auto* x = std::get_if<Accept>(&m.msg)) {
                mh.add_u64(x->accepted_try.round << 8 | x->accepted_try.proposer);
                mh.add_u64(x->accepted_value.digest());
            } else if (const auto* x = std::get_if<Learn>(&m.msg)) {
                mh.add_u64(x->value.digest());
            }
            bag += mh.digest() * 0x9e3779b97f4a7c15ull;
        }
        h.add_u64(bag);
        return h.digest();
    }

    void explore(ModelState s) {
        drop_inert(s);
        if (!visited_.insert(encode(s)).second) return;
        ++result_.states;
        check_invariants(s);

        bool any_action = false;
        for (size_t i = 0; i < s.in_flight.size(); ++i) {
            any_action = true;
            ++result_.transitions;
            ModelState next = s;
            MMsg m = next.in_flight[i];
            next.in_flight.erase(next.in_flight.begin() + static_cast<long>(i));
            deliver(next, m);
            explore(std::move(next));
        }
        for (uint32_t p = 0; p < kProposers; ++p) {
            const auto& prop = s.proposers[p];
            const bool active = !prop.done &&
                                (prop.session.phase == ProposerSession::Phase::preparing ||
                                 prop.session.phase == ProposerSession::Phase::proposing);
            if (!active || prop.timeouts_used >= budget_) continue;
            any_action = true;
            ++result_.transitions;
            ModelState next = s;
            timeout(next, p);
            explore(std::move(next));
        }
        if (!any_action) ++result_.terminal;
    }

    uint32_t budget_;
    Value command_[2];
    std::unordered_set<uint64_t> visited_;
    ModelCheckResult result_;
};

} // namespace

ModelCheckResult model_check_single_choice(uint32_t timeout_budget) {
    return Checker(timeout_budget).run();
}

} // namespace baxsim::test
