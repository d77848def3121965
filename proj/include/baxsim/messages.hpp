#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "baxsim/types.hpp"

namespace baxsim {

// Wire accounting: every message is charged a fixed 64-byte header plus its
// payload bytes, so bandwidth comparisons stay internally consistent.
constexpr uint32_t kMessageHeaderBytes = 64;
constexpr uint32_t kTryWireBytes = 12;

struct Prepare {
    uint64_t choice = 0;
    TryNumber try_;
};

struct Promise {
    uint64_t choice = 0;
    MaybeTry accepted_try;
    MaybeValue accepted_value;
    TryNumber try_; // echoes the Prepare it answers
};

struct Propose {
    uint64_t choice = 0;
    TryNumber try_;
    Value value;
    // Baxos one-round-trip optimization: Prepare for choice+1 rides along.
    std::optional<Prepare> piggyback;
    // Multi-Paxos: decided-prefix watermark piggybacked in place of Learns.
    std::optional<uint64_t> commit_index;
};

struct Accept {
    uint64_t choice = 0;
    TryNumber accepted_try;
    Value accepted_value;
    // Answer to a piggybacked Prepare, when the acceptor granted it.
    std::optional<Promise> piggyback;
};

struct Learn {
    uint64_t choice = 0;
    Value value;
};

// Multi-Paxos leader election: Prepare-Promise over the open instance suffix.
struct ElectPrepare {
    uint64_t view = 0;
    uint64_t from_choice = 0;
};

struct AcceptedEntry {
    uint64_t choice = 0;
    TryNumber try_;
    Value value;
};

struct ElectPromise {
    uint64_t view = 0;
    uint64_t from_choice = 0;
    std::vector<AcceptedEntry> accepted;
};

struct Heartbeat {
    uint64_t view = 0;
    uint64_t commit_index = 0;
};

// Follower-to-leader relay of client commands (Multi-Paxos only).
struct Forward {
    std::vector<Command> commands;
};

using ProtocolMessage = std::variant<Prepare, Promise, Propose, Accept, Learn,
                                     ElectPrepare, ElectPromise, Heartbeat, Forward>;

uint32_t wire_bytes(const ProtocolMessage& msg);
const char* message_name(const ProtocolMessage& msg);

} // namespace baxsim
