#include "baxsim/verify.hpp"

#include <algorithm>

namespace baxsim {

std::string VerifyReport::first() const {
    if (violations.empty()) return "ok";
    const Violation& v = violations.front();
    return v.check + " at choice " + std::to_string(v.choice) + ": " + v.detail;
}

VerifyReport verify_logs(const std::vector<ReplicaExport>& replicas,
                         const std::set<RequestId>& submitted) {
    VerifyReport report;
    auto flag = [&](std::string check, uint64_t choice, std::string detail) {
        report.violations.push_back({std::move(check), choice, std::move(detail)});
    };

    for (const auto& rep : replicas) {
        uint64_t expect = 1;
        std::set<RequestId> seen;
        uint64_t first_occurrences = 0;
        for (const auto& entry : rep.log) {
            if (entry.choice != expect) {
                flag("prefix", entry.choice,
                     "replica " + std::to_string(rep.id) + " expected choice " +
                         std::to_string(expect) + ", found " +
                         std::to_string(entry.choice));
                break;
            }
            ++expect;
            for (const auto& rid : entry.request_ids) {
                if (!submitted.count(rid)) {
                    flag("validity", entry.choice,
                         "replica " + std::to_string(rep.id) + " decided request (" +
                             std::to_string(rid.first) + "," + std::to_string(rid.second) +
                             ") that no client submitted");
                }
                if (seen.insert(rid).second) ++first_occurrences;
            }
        }
        if (first_occurrences != rep.applied_count) {
            flag("exactly-once", rep.log.size(),
                 "replica " + std::to_string(rep.id) + " reports " +
                     std::to_string(rep.applied_count) + " applied commands; log replay gives " +
                     std::to_string(first_occurrences));
        }
    }

    // Pairwise agreement on common decided prefixes; the first divergent
    // choice is the counterexample.
    for (size_t a = 0; a < replicas.size(); ++a) {
        for (size_t b = a + 1; b < replicas.size(); ++b) {
            const auto& la = replicas[a].log;
            const auto& lb = replicas[b].log;
            const size_t common = std::min(la.size(), lb.size());
            report.compared_choices += common;
            for (size_t i = 0; i < common; ++i) {
                if (la[i].choice != lb[i].choice) continue; // prefix check flags this
                if (la[i].digest != lb[i].digest) {
                    flag("agreement", la[i].choice,
                         "replicas " + std::to_string(replicas[a].id) + " and " +
                             std::to_string(replicas[b].id) + " decided " +
                             digest_hex(la[i].digest) + " vs " + digest_hex(lb[i].digest));
                    break;
                }
            }
        }
    }
    return report;
}

} // namespace baxsim
