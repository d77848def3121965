#pragma once

#include <map>
#include <set>

#include "baxsim/simnet.hpp"
#include "baxsim/types.hpp"

namespace baxsim {

// Synthetic key-value backend. State is a pure function of the applied log
// prefix; the digest folds the sorted map so replicas can be compared.
class KvStateMachine {
public:
    void apply(const Command& c) {
        if (c.kind == CommandKind::write) data_[c.key] = write_token(c);
        ++ops_;
    }
    static uint64_t write_token(const Command& c) {
        return (c.client << 32) ^ c.seq;
    }
    uint64_t lookup(uint32_t key) const {
        auto it = data_.find(key);
        return it == data_.end() ? 0 : it->second;
    }
    uint64_t ops() const { return ops_; }
    uint64_t digest() const {
        Fnv1a h;
        for (const auto& [k, v] : data_) {
            h.add_u64(k);
            h.add_u64(v);
        }
        h.add_u64(ops_);
        return h.digest();
    }

private:
    std::map<uint32_t, uint64_t> data_;
    uint64_t ops_ = 0;
};

// Replicated-log application shared by both protocols: contiguous prefix
// only, exactly-once per request id, one response per command from the
// replica that owns the client's pending entry.
class SmrState {
public:
    uint64_t last_applied = 0; // choices are 1-based; 0 = nothing applied

    void note_client_command(const Command& c) {
        if (c.kind == CommandKind::noop) return;
        pending_responses_.emplace(request_id(c), c);
    }

    bool already_applied(const RequestId& rid) const { return applied_.count(rid) > 0; }

    // Applies one decided value at choice index last_applied + 1.
    void apply_value(Sim& sim, ReplicaId self, uint64_t choice, const Value& v) {
        LogEntry entry;
        entry.choice = choice;
        entry.digest = v.digest();
        entry.origin = v.origin();
        for (const Command& c : v.batch().commands) {
            if (c.kind == CommandKind::noop) continue;
            const RequestId rid = request_id(c);
            entry.request_ids.push_back(rid);
            if (!applied_.insert(rid).second) continue; // duplicate: skip
            kv_.apply(c);
            auto it = pending_responses_.find(rid);
            if (it != pending_responses_.end()) {
                sim.client_response(self, static_cast<uint32_t>(c.client),
                                    static_cast<ReplicaId>(c.client), rid,
                                    c.response_bytes);
                pending_responses_.erase(it);
            }
        }
        log_.push_back(std::move(entry));
        last_applied = choice;
    }

    const std::vector<LogEntry>& log() const { return log_; }
    uint64_t applied_count() const { return applied_.size(); }
    const KvStateMachine& kv() const { return kv_; }

private:
    std::set<RequestId> applied_;
    std::map<RequestId, Command> pending_responses_;
    KvStateMachine kv_;
    std::vector<LogEntry> log_;
};

} // namespace baxsim
