#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "baxsim/rng.hpp"

namespace baxsim {

// Simulated time and durations, in microseconds.
using SimTime = int64_t;
using Micros = int64_t;

constexpr Micros ms(int64_t v) { return v * 1000; }
constexpr Micros seconds(int64_t v) { return v * 1000000; }
inline double to_ms(Micros v) { return static_cast<double>(v) / 1000.0; }
inline double to_s(Micros v) { return static_cast<double>(v) / 1e6; }

using ReplicaId = uint32_t;

struct ClusterConfig {
    uint32_t n = 0;
    uint32_t f = 0;

    // Majority quorum; any two quorums intersect because n = 2f+1.
    uint32_t quorum() const { return f + 1; }

    void validate() const {
        if (n < 3 || n % 2 == 0)
            throw std::invalid_argument("cluster.n: must be odd and >= 3");
        if (n != 2 * f + 1)
            throw std::invalid_argument("cluster.f: n must equal 2f+1");
    }
    static ClusterConfig for_n(uint32_t n) { return ClusterConfig{n, (n - 1) / 2}; }
};

// Ballot identifier. Total order: round first, then proposer id as the
// tie-breaker so two proposers can never emit the same try.
struct TryNumber {
    uint64_t round = 0;
    ReplicaId proposer = 0;

    friend auto operator<=>(const TryNumber&, const TryNumber&) = default;
};

// The "no try yet" sentinel is represented as an absent optional; optional's
// ordering already puts it strictly below every real try.
using MaybeTry = std::optional<TryNumber>;

enum class CommandKind : uint8_t { write, read, noop };

// One client command. request id = (client, seq), unique per logical request
// and reused on re-submission.
struct Command {
    uint64_t client = 0;
    uint64_t seq = 0;
    CommandKind kind = CommandKind::write;
    uint32_t key = 0;
    uint32_t request_bytes = 0;
    uint32_t response_bytes = 0;
    SimTime deadline = 0; // client gives up past this instant; 0 = none

    // Serialized size: 16B id + 8B key/kind/len + payload.
    uint32_t wire_bytes() const { return 24 + request_bytes; }
};

using RequestId = std::pair<uint64_t, uint64_t>;
inline RequestId request_id(const Command& c) { return {c.client, c.seq}; }

struct Batch {
    std::vector<Command> commands;
    ReplicaId origin = 0;
    uint64_t seqno = 0; // per-origin batch counter, part of the digest
    SimTime created = 0;
};

// Immutable batch payload proposed as a consensus value. Cheap to copy;
// equality is by content digest.
class Value {
public:
    Value() = default;
    explicit Value(std::shared_ptr<const Batch> b) : batch_(std::move(b)) {
        Fnv1a h;
        h.add_u64(batch_->origin);
        h.add_u64(batch_->seqno);
        uint32_t bytes = 16;
        for (const auto& c : batch_->commands) {
            h.add_u64(c.client);
            h.add_u64(c.seq);
            h.add_u64((static_cast<uint64_t>(c.kind) << 32) | c.key);
            h.add_u64(c.request_bytes);
            bytes += c.wire_bytes();
        }
        digest_ = h.digest();
        wire_bytes_ = bytes;
    }

    static Value make(std::vector<Command> cmds, ReplicaId origin, uint64_t seqno,
                      SimTime created) {
        auto b = std::make_shared<Batch>();
        b->commands = std::move(cmds);
        b->origin = origin;
        b->seqno = seqno;
        b->created = created;
        return Value(std::move(b));
    }

    const Batch& batch() const { return *batch_; }
    bool empty() const { return !batch_; }
    uint64_t digest() const { return digest_; }
    uint32_t wire_bytes() const { return wire_bytes_; }
    ReplicaId origin() const { return batch_->origin; }

    friend bool operator==(const Value& a, const Value& b) {
        return a.digest_ == b.digest_;
    }

private:
    std::shared_ptr<const Batch> batch_;
    uint64_t digest_ = 0;
    uint32_t wire_bytes_ = 0;
};

using MaybeValue = std::optional<Value>;

// One decided slot as exported for the safety verifier.
struct LogEntry {
    uint64_t choice = 0;
    uint64_t digest = 0;
    ReplicaId origin = 0;
    std::vector<RequestId> request_ids;
};

inline std::string digest_hex(uint64_t d) {
    static const char* hexd = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = hexd[d & 0xf];
        d >>= 4;
    }
    return s;
}

} // namespace baxsim
