#pragma once

#include <optional>
#include <string>

#include "baxsim/backoff.hpp"
#include "baxsim/baxos_replica.hpp"
#include "baxsim/multipaxos.hpp"
#include "baxsim/simnet.hpp"
#include "baxsim/workload.hpp"

namespace baxsim {

enum class Protocol { baxos, multipaxos };

Protocol parse_protocol(const std::string& s);
const char* protocol_name(Protocol p);

// Scenario validation failures carry the offending field name; the CLI maps
// them to exit code 2.
class ScenarioError : public std::runtime_error {
public:
    explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

struct Scenario {
    std::string name = "unnamed";
    Protocol protocol = Protocol::baxos;
    ClusterConfig cluster;
    LatencyMatrix matrix;
    std::optional<SynchronySpec> synchrony;
    std::optional<AttackSpec> attack;   // the scenario file format carries one
    std::vector<AttackSpec> extra_attacks; // harness-injected (not serialized)
    WorkloadSpec workload;
    BaxosOptions baxos;
    MultiPaxosOptions multipaxos;
    SimTime horizon = seconds(60);
    uint64_t seed = 1;

    void validate() const;
    std::string to_json() const;  // canonical (sorted keys, fixed spacing)
    uint64_t digest() const;

    static Scenario from_json(const std::string& text);
    static Scenario load(const std::string& path);
};

} // namespace baxsim
