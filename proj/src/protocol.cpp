#include "baxsim/protocol.hpp"

namespace baxsim {

std::optional<Promise> on_prepare(ChoiceState& state, const Prepare& msg) {
    if (state.promised_try && *state.promised_try >= msg.try_) return std::nullopt;
    state.promised_try = msg.try_;
    Promise p;
    p.choice = msg.choice;
    p.accepted_try = state.accepted_try;
    p.accepted_value = state.accepted_value;
    p.try_ = msg.try_;
    return p;
}

std::optional<Accept> on_propose(ChoiceState& state, const Propose& msg) {
    if (state.promised_try && *state.promised_try > msg.try_) return std::nullopt;
    state.accepted_try = msg.try_;
    state.accepted_value = msg.value;
    state.promised_try = msg.try_; // never lowers: guard above
    Accept a;
    a.choice = msg.choice;
    a.accepted_try = msg.try_;
    a.accepted_value = msg.value;
    return a;
}

LearnResult on_learn(ChoiceState& state, const Learn& msg) {
    if (state.decided) {
        return (*state.decision == msg.value) ? LearnResult::already_decided
                                              : LearnResult::conflict;
    }
    state.decided = true;
    state.decision = msg.value;
    return LearnResult::decided_now;
}

Value select_value(const ProposerSession& session) {
    MaybeTry best;
    MaybeValue best_value;
    for (const auto& [responder, promise] : session.promises) {
        if (promise.accepted_try && promise.accepted_try > best) {
            best = promise.accepted_try;
            best_value = promise.accepted_value;
        }
    }
    return best_value ? *best_value : session.command;
}

DecisionOutcome decide_locally(ChoiceState& state, const ProposerSession& session) {
    DecisionOutcome out;
    if (!state.decided) {
        state.decided = true;
        state.decision = session.proposed_value;
        out.decided_now = true;
    }
    out.own_command = (*state.decision == session.command);
    return out;
}

} // namespace baxsim
