#pragma once

#include <map>
#include <set>

#include "baxsim/messages.hpp"
#include "baxsim/types.hpp"

namespace baxsim {

// Acceptor/learner record for one consensus choice. Invariants maintained by
// the transition functions below:
//   - accepted_try <= promised_try at all times
//   - decided flips false -> true at most once; decision is never overwritten
//   - accepted_value is absent iff accepted_try is absent
struct ChoiceState {
    uint64_t id = 0;
    TryNumber proposed_try;   // last try this replica proposed for the choice
    MaybeTry promised_try;    // absent = never promised
    MaybeTry accepted_try;    // absent = never accepted
    MaybeValue accepted_value;
    bool decided = false;
    MaybeValue decision;
};

// Proposer side of one in-flight choice. At most one live session per replica;
// response sets are deduplicated per responder.
struct ProposerSession {
    enum class Phase { idle, preparing, proposing, backing_off };

    uint64_t choice = 0;
    TryNumber try_;
    Value command;                 // the client batch this session fights for
    MaybeValue proposed_value;     // chosen in phase 2 (command or adopted)
    Phase phase = Phase::idle;
    std::map<ReplicaId, Promise> promises;
    std::set<ReplicaId> accepts;
    SimTime phase_started = 0;
    bool used_piggyback = false;

    void clear_responses() {
        promises.clear();
        accepts.clear();
    }
};

// Acceptor handlers. Deterministic: identical (state, message) inputs yield
// identical outputs. Sub-threshold messages are silently ignored.

// Promise iff msg.try > promised_try; promised_try then rises to msg.try.
std::optional<Promise> on_prepare(ChoiceState& state, const Prepare& msg);

// Accept iff msg.try >= promised_try; accepted_try/value follow msg and
// promised_try is raised to msg.try so the acceptor invariant holds.
std::optional<Accept> on_propose(ChoiceState& state, const Propose& msg);

enum class LearnResult { decided_now, already_decided, conflict };

// Idempotent decide. A Learn that disagrees with an existing decision leaves
// the state untouched and reports the conflict for the harness to count; a
// correct run never produces one.
LearnResult on_learn(ChoiceState& state, const Learn& msg);

// Phase-1 value selection: if every promise carries the sentinel, the session
// proposes its own command, otherwise the value paired with the highest
// accepted try across the promise set.
Value select_value(const ProposerSession& session);

struct DecisionOutcome {
    bool decided_now = false;  // false when a Learn got there first
    bool own_command = false;  // decision == session.command; drives Rule 3
};

// Applies an accept-quorum decision to the local record. The caller broadcasts
// the Learn and, when own_command is false, re-proposes its command.
DecisionOutcome decide_locally(ChoiceState& state, const ProposerSession& session);

} // namespace baxsim
