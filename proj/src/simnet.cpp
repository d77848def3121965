#include "baxsim/simnet.hpp"

#include <algorithm>
#include <stdexcept>

namespace baxsim {

namespace {

// Measured inter-region pings (ms), nine AWS regions. The first five rows are
// the N. Virginia / Ireland / N. California / Tokyo / Hong Kong matrix; the
// rest extend it for the scaling profiles. One-way latency = ping / 2.
constexpr int kAwsRegions = 9;
constexpr double kAwsPingMs[kAwsRegions][kAwsRegions] = {
    //        NV    Ire   NCal  Tok   HK    Ore   Mum   Seo   CT
    /*NV */ {0,    66,   62,   145,  191,  70,   182,  175,  225},
    /*Ire*/ {66,   0,    136,  201,  249,  120,  122,  230,  165},
    /*NCa*/ {62,   136,  0,    107,  154,  22,   230,  135,  290},
    /*Tok*/ {145,  201,  107,  0,    51,   97,   120,  35,   345},
    /*HK */ {191,  249,  154,  51,   0,    145,  95,   65,   320},
    /*Ore*/ {70,   120,  22,   97,   145,  0,    220,  125,  280},
    /*Mum*/ {182,  122,  230,  120,  95,   220,  0,    150,  260},
    /*Seo*/ {175,  230,  135,  35,   65,   125,  150,  0,    370},
    /*CT */ {225,  165,  290,  345,  320,  280,  260,  370,  0},
};

} // namespace

Micros LatencyMatrix::diameter_rtt() const {
    Micros best = 0;
    for (ReplicaId a = 0; a < n; ++a)
        for (ReplicaId b = 0; b < n; ++b)
            if (a != b) best = std::max(best, base_rtt(a, b));
    return best;
}

Micros LatencyMatrix::max_oneway() const {
    Micros best = 0;
    for (Micros v : oneway_us) best = std::max(best, v);
    return best;
}

void LatencyMatrix::validate() const {
    if (oneway_us.size() != static_cast<size_t>(n) * n)
        throw std::invalid_argument("latency matrix: shape must be n x n (" +
                                    std::to_string(n) + "x" + std::to_string(n) + ")");
    for (ReplicaId i = 0; i < n; ++i) {
        if (oneway(i, i) != 0)
            throw std::invalid_argument("latency matrix: diagonal must be zero");
        for (ReplicaId j = 0; j < n; ++j)
            if (i != j && oneway(i, j) <= 0)
                throw std::invalid_argument("latency matrix: off-diagonal must be positive");
    }
    if (jitter_frac < 0 || jitter_frac >= 1)
        throw std::invalid_argument("latency matrix: jitter fraction must be in [0,1)");
}

LatencyMatrix LatencyMatrix::aws(uint32_t n, double jitter_frac) {
    if (n < 2 || n > kAwsRegions)
        throw std::invalid_argument("aws latency profile supports 2..9 replicas");
    LatencyMatrix m;
    m.n = n;
    m.jitter_frac = jitter_frac;
    m.oneway_us.resize(static_cast<size_t>(n) * n);
    for (ReplicaId i = 0; i < n; ++i)
        for (ReplicaId j = 0; j < n; ++j)
            m.oneway_us[i * n + j] =
                static_cast<Micros>(kAwsPingMs[i][j] * 1000.0 / 2.0);
    return m;
}

LatencyMatrix LatencyMatrix::uniform(uint32_t n, Micros oneway, double jitter_frac) {
    LatencyMatrix m;
    m.n = n;
    m.jitter_frac = jitter_frac;
    m.oneway_us.assign(static_cast<size_t>(n) * n, oneway);
    for (ReplicaId i = 0; i < n; ++i) m.oneway_us[i * n + i] = 0;
    return m;
}

Sim::Sim(SimConfig cfg, std::vector<Node*> nodes, ClientDriver* clients)
    : cfg_(std::move(cfg)),
      nodes_(std::move(nodes)),
      clients_(clients),
      crashed_(cfg_.matrix.n, false),
      net_rng_(Rng::derive(cfg_.seed, 0xae1)),
      attack_rng_(Rng::derive(cfg_.seed, 0xa77)) {
    node_rngs_.reserve(n());
    for (ReplicaId r = 0; r < n(); ++r) node_rngs_.emplace_back(Rng::derive(cfg_.seed, 0x100 + r));
    counters_.replica.resize(n());
    crash_times_.assign(n(), -1);
    for (uint32_t i = 0; i < cfg_.attacks.size(); ++i) {
        attacks_.push_back(AttackRuntime{cfg_.attacks[i], std::nullopt, false, false});
        if (cfg_.attacks[i].type == AttackType::crash) {
            push(cfg_.attacks[i].start, EvCrash{i}); // victim resolved at fire time
        } else {
            push(cfg_.attacks[i].start, EvAttackPhase{i});
        }
    }
}

uint32_t Sim::live_count() const {
    uint32_t live = 0;
    for (bool c : crashed_)
        if (!c) ++live;
    return live;
}

void Sim::push(SimTime at, Payload payload) {
    queue_.push(Event{at, next_seq_++, std::move(payload)});
}

void Sim::run() { run_until(cfg_.horizon); }

void Sim::run_until(SimTime cut) {
    for (Node* node : nodes_) node->start(*this);
    if (clients_) clients_->start(*this);
    while (!queue_.empty() && queue_.top().at <= cut) {
        Event ev = queue_.top();
        queue_.pop();
        now_ = ev.at;
        dispatch(ev);
    }
    now_ = cut;
}

Micros Sim::egress_attack_delay(ReplicaId src) const {
    Micros extra = 0;
    for (const auto& a : attacks_) {
        if (a.spec.type != AttackType::delay || !a.started || !a.in_burst) continue;
        if (now_ < a.spec.start || now_ >= a.spec.stop) continue;
        if (a.victim && *a.victim == src) extra += a.spec.delay_us;
    }
    return extra;
}

bool Sim::loss_roll(ReplicaId src) {
    for (auto& a : attacks_) {
        if (a.spec.type != AttackType::packet_loss || !a.started || !a.in_burst) continue;
        if (now_ < a.spec.start || now_ >= a.spec.stop) continue;
        if (a.victim && *a.victim == src && net_rng_.uniform01() < a.spec.drop_frac)
            return true;
    }
    return false;
}

Micros Sim::flight_time(ReplicaId src, ReplicaId dst) {
    Micros base = cfg_.matrix.oneway(src, dst);
    if (cfg_.matrix.jitter_frac > 0)
        base = static_cast<Micros>(static_cast<double>(base) *
                                   (1.0 + cfg_.matrix.jitter_frac * net_rng_.uniform_pm1()));
    Micros total = std::max<Micros>(1, base + egress_attack_delay(src));
    if (cfg_.synchrony && now_ >= cfg_.synchrony->gst && total > cfg_.synchrony->delta)
        throw std::logic_error("post-GST delivery would exceed delta; scenario invalid");
    return total;
}

void Sim::send(ReplicaId src, ReplicaId dst, ProtocolMessage msg) {
    if (crashed_[src]) return;
    const uint32_t bytes = wire_bytes(msg);
    if (src == dst) {
        // Zero-latency self delivery; not a NIC transmission.
        push(now_, EvMessage{src, dst, std::move(msg), 0});
        return;
    }
    transmit(src, dst, std::move(msg), bytes, false, 0);
}

void Sim::broadcast(ReplicaId src, const ProtocolMessage& msg) {
    for (ReplicaId dst = 0; dst < n(); ++dst) send(src, dst, msg);
}

void Sim::transmit(ReplicaId src, ReplicaId dst, ProtocolMessage msg, uint32_t bytes,
                   bool is_retry, Micros period) {
    counters_.replica[src].egress_bytes += bytes;
    counters_.replica[src].messages_sent += 1;
    counters_.total_egress += bytes;
    if (loss_roll(src)) {
        counters_.dropped_loss_bytes += bytes;
        // Stubborn link: keep re-offering on a fixed tick until delivered.
        const Micros p = period > 0 ? period : 2 * cfg_.matrix.base_rtt(src, dst);
        push(now_ + p, EvStubbornRetry{src, dst, std::move(msg), bytes, p});
        return;
    }
    push(now_ + flight_time(src, dst), EvMessage{src, dst, std::move(msg), bytes});
    (void)is_retry;
}

uint64_t Sim::set_timer(ReplicaId owner, Micros delay) {
    const uint64_t id = next_timer_++;
    push(now_ + std::max<Micros>(0, delay), EvTimer{owner, id});
    return id;
}

void Sim::cancel_timer(uint64_t id) {
    if (id != 0) cancelled_.insert(id);
}

void Sim::schedule_arrival(uint32_t client, Micros delay) {
    push(now_ + delay, EvClientArrival{client});
}

void Sim::client_request(uint32_t client, ReplicaId client_region, const Command& cmd,
                         ReplicaId dst) {
    const uint32_t bytes = kMessageHeaderBytes + cmd.wire_bytes();
    counters_.replica[dst].client_in_bytes += bytes;
    Micros flight = client_region == dst ? 1 : flight_time(client_region, dst);
    push(now_ + flight, EvRequestDelivery{client, dst, cmd});
}

void Sim::client_response(ReplicaId replica, uint32_t client, ReplicaId client_region,
                          RequestId rid, uint32_t payload_bytes) {
    if (crashed_[replica]) return;
    const uint32_t bytes = kMessageHeaderBytes + payload_bytes;
    counters_.replica[replica].client_out_bytes += bytes;
    Micros flight = client_region == replica ? 1 : flight_time(replica, client_region);
    push(now_ + flight, EvResponseDelivery{client, rid});
}

std::optional<ReplicaId> Sim::leader_now() const {
    uint64_t best_view = 0;
    std::optional<ReplicaId> leader;
    for (ReplicaId r = 0; r < n(); ++r) {
        if (crashed_[r]) continue;
        if (auto l = nodes_[r]->leadership()) {
            if (!leader || l->first > best_view) {
                best_view = l->first;
                leader = l->second;
            }
        }
    }
    return leader;
}

void Sim::resolve_victim(AttackRuntime& rt) {
    const AttackSpec& a = rt.spec;
    switch (a.targeting) {
    case AttackTargeting::fixed:
        rt.victim = a.fixed_victim;
        break;
    case AttackTargeting::follow_leader:
        if (auto l = leader_now()) {
            rt.victim = *l;
            break;
        }
        [[fallthrough]]; // leaderless protocol: degrade to random-rotating
    case AttackTargeting::random_rotating: {
        std::vector<ReplicaId> live;
        for (ReplicaId r = 0; r < n(); ++r)
            if (!crashed_[r]) live.push_back(r);
        rt.victim = live.empty() ? std::optional<ReplicaId>{}
                                 : live[attack_rng_.below(live.size())];
        break;
    }
    }
}

void Sim::attack_phase(uint32_t idx) {
    AttackRuntime& rt = attacks_[idx];
    const AttackSpec& a = rt.spec;
    if (now_ >= a.stop) {
        rt.in_burst = false;
        return;
    }
    rt.started = true;
    if (!rt.in_burst) {
        // Burst begins; the victim is re-resolved at every burst boundary.
        rt.in_burst = true;
        resolve_victim(rt);
        trace(rt.victim.value_or(0), "attack_burst", "victim");
        const Micros burst = a.burst > 0 ? a.burst : (a.stop - now_);
        push(std::min(now_ + burst, a.stop), EvAttackPhase{idx});
    } else {
        rt.in_burst = false;
        if (a.cooldown > 0) {
            push(std::min(now_ + a.cooldown, a.stop), EvAttackPhase{idx});
        } else {
            attack_phase(idx); // back-to-back bursts, fresh victim each time
        }
    }
}

void Sim::trace(ReplicaId r, const char* kind, const std::string& detail) {
    trace_hash_.add_u64(static_cast<uint64_t>(now_));
    trace_hash_.add_u64(r);
    trace_hash_.add(kind, std::char_traits<char>::length(kind));
    trace_hash_.add(detail.data(), detail.size());
    if (cfg_.trace_lines) {
        char head[64];
        std::snprintf(head, sizeof head, "%lld\t%u\t", static_cast<long long>(now_), r);
        trace_text_.push_back(std::string(head) + kind + "\t" + detail);
    }
}

void Sim::dispatch(const Event& ev) {
    if (const auto* m = std::get_if<EvMessage>(&ev.payload)) {
        if (m->src != m->dst) {
            if (crashed_[m->dst]) {
                counters_.dropped_crash_bytes += m->bytes;
                return;
            }
            counters_.replica[m->dst].ingress_bytes += m->bytes;
            counters_.replica[m->dst].messages_received += 1;
            counters_.total_ingress += m->bytes;
        } else if (crashed_[m->dst]) {
            return;
        }
        trace(m->dst, message_name(m->msg), "from=" + std::to_string(m->src));
        nodes_[m->dst]->handle_message(*this, m->src, m->msg);
    } else if (const auto* r = std::get_if<EvStubbornRetry>(&ev.payload)) {
        if (crashed_[r->dst]) return; // stop re-offering to a dead replica
        if (crashed_[r->src]) return;
        transmit(r->src, r->dst, r->msg, r->bytes, true, r->period);
    } else if (const auto* t = std::get_if<EvTimer>(&ev.payload)) {
        if (cancelled_.erase(t->id) > 0) return;
        if (crashed_[t->owner]) return;
        nodes_[t->owner]->handle_timer(*this, t->id);
    } else if (const auto* c = std::get_if<EvClientArrival>(&ev.payload)) {
        if (clients_) clients_->handle_arrival(*this, c->client);
    } else if (const auto* q = std::get_if<EvRequestDelivery>(&ev.payload)) {
        if (crashed_[q->dst]) return; // lost; the client times out
        trace(q->dst, "request", "client=" + std::to_string(q->client));
        nodes_[q->dst]->handle_command(*this, q->cmd);
    } else if (const auto* p = std::get_if<EvResponseDelivery>(&ev.payload)) {
        if (clients_) clients_->handle_response(*this, p->client, p->rid);
    } else if (const auto* ap = std::get_if<EvAttackPhase>(&ev.payload)) {
        attack_phase(ap->attack);
    } else if (const auto* k = std::get_if<EvCrash>(&ev.payload)) {
        AttackRuntime& rt = attacks_[k->attack];
        resolve_victim(rt);
        const ReplicaId victim = rt.victim.value_or(0);
        crashed_[victim] = true;
        crash_times_[victim] = now_;
        trace(victim, "crash", "");
    }
}

uint64_t Sim::inflight_bytes() const {
    // Walk the remaining queue; priority_queue has no iterator, so copy.
    auto copy = queue_;
    uint64_t bytes = 0;
    while (!copy.empty()) {
        if (const auto* m = std::get_if<EvMessage>(&copy.top().payload))
            if (m->src != m->dst) bytes += m->bytes;
        copy.pop();
    }
    return bytes;
}

} // namespace baxsim
