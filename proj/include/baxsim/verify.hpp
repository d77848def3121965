#pragma once

#include <set>
#include <string>
#include <vector>

#include "baxsim/types.hpp"

namespace baxsim {

struct ReplicaExport {
    ReplicaId id = 0;
    bool crashed = false;
    std::vector<LogEntry> log;
    uint64_t applied_count = 0;
};

struct Violation {
    std::string check; // agreement | integrity | validity | exactly-once | prefix
    uint64_t choice = 0;
    std::string detail;
};

struct VerifyReport {
    std::vector<Violation> violations;
    uint64_t compared_choices = 0;
    bool ok() const { return violations.empty(); }
    std::string first() const;
};

// Cross-replica safety checks over decided-log exports:
//   prefix       each export covers choices 1..K with no holes or duplicates
//   agreement    common prefixes carry identical digests pairwise
//   validity     every decided request id was submitted by some client
//   exactly-once reported apply counter matches first-occurrence replay
// Crashed replicas participate with their (shorter) prefixes.
VerifyReport verify_logs(const std::vector<ReplicaExport>& replicas,
                         const std::set<RequestId>& submitted);

} // namespace baxsim
