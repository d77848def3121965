#include "doctest.h"

#include "support/model_check.hpp"

using namespace baxsim::test;

// The full check (one spurious timeout per proposer) runs in the acceptance
// suite; this keeps the unit run quick while still covering every reordering
// of the timeout-free schedules.
TEST_CASE("single-choice model check: no violation in any reordering") {
    const ModelCheckResult r = model_check_single_choice(0);
    INFO("first violation: ", r.first_violation);
    CHECK(r.violations == 0);
    CHECK(r.states > 1000);
    CHECK(r.decided_states > 0);
    CHECK(r.terminal > 0);
    MESSAGE("states=", r.states, " transitions=", r.transitions,
            " terminal=", r.terminal);
}
