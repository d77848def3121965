#include "baxsim/messages.hpp"

namespace baxsim {
namespace {

uint32_t value_bytes(const MaybeValue& v) { return v ? v->wire_bytes() : 0; }

struct SizeVisitor {
    uint32_t operator()(const Prepare&) const { return kTryWireBytes + 8; }
    uint32_t operator()(const Promise& m) const {
        return kTryWireBytes * 2 + 8 + value_bytes(m.accepted_value);
    }
    uint32_t operator()(const Propose& m) const {
        uint32_t b = kTryWireBytes + 8 + m.value.wire_bytes();
        if (m.piggyback) b += kTryWireBytes + 8;
        if (m.commit_index) b += 8;
        return b;
    }
    uint32_t operator()(const Accept& m) const {
        uint32_t b = kTryWireBytes + 8 + m.accepted_value.wire_bytes();
        if (m.piggyback) b += (*this)(*m.piggyback);
        return b;
    }
    uint32_t operator()(const Learn& m) const { return 8 + m.value.wire_bytes(); }
    uint32_t operator()(const ElectPrepare&) const { return 16; }
    uint32_t operator()(const ElectPromise& m) const {
        uint32_t b = 16;
        for (const auto& e : m.accepted) b += kTryWireBytes + 8 + e.value.wire_bytes();
        return b;
    }
    uint32_t operator()(const Heartbeat&) const { return 16; }
    uint32_t operator()(const Forward& m) const {
        uint32_t b = 0;
        for (const auto& c : m.commands) b += c.wire_bytes();
        return b;
    }
};

struct NameVisitor {
    const char* operator()(const Prepare&) const { return "prepare"; }
    const char* operator()(const Promise&) const { return "promise"; }
    const char* operator()(const Propose&) const { return "propose"; }
    const char* operator()(const Accept&) const { return "accept"; }
    const char* operator()(const Learn&) const { return "learn"; }
    const char* operator()(const ElectPrepare&) const { return "elect_prepare"; }
    const char* operator()(const ElectPromise&) const { return "elect_promise"; }
    const char* operator()(const Heartbeat&) const { return "heartbeat"; }
    const char* operator()(const Forward&) const { return "forward"; }
};

} // namespace

uint32_t wire_bytes(const ProtocolMessage& msg) {
    return kMessageHeaderBytes + std::visit(SizeVisitor{}, msg);
}

const char* message_name(const ProtocolMessage& msg) {
    return std::visit(NameVisitor{}, msg);
}

} // namespace baxsim
