#pragma once

#include <cstdint>
#include <string>

namespace baxsim::test {

struct ModelCheckResult {
    uint64_t states = 0;       // unique reachable states
    uint64_t transitions = 0;  // scheduler choices explored
    uint64_t terminal = 0;     // states with no enabled action
    uint64_t decided_states = 0;
    uint64_t violations = 0;
    std::string first_violation;
};

// Exhaustive safety check of single-choice Baxos: n = 3 acceptors, two
// proposers with distinct commands, every interleaving of message deliveries
// (full reordering, self-deliveries included) plus up to `timeout_budget`
// spurious phase timeouts per proposer. Agreement, validity and integrity are
// asserted in every reachable state. Drives the protocol transition functions
// directly; no simulator involved.
ModelCheckResult model_check_single_choice(uint32_t timeout_budget);

} // namespace baxsim::test
