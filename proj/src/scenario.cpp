#include "baxsim/scenario.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace baxsim {

using nlohmann::json;

Protocol parse_protocol(const std::string& s) {
    if (s == "baxos") return Protocol::baxos;
    if (s == "multipaxos") return Protocol::multipaxos;
    throw ScenarioError("protocol: expected baxos|multipaxos, got '" + s + "'");
}

const char* protocol_name(Protocol p) {
    return p == Protocol::baxos ? "baxos" : "multipaxos";
}

void Scenario::validate() const {
    try {
        cluster.validate();
    } catch (const std::exception& e) {
        throw ScenarioError(e.what());
    }
    if (matrix.n != cluster.n)
        throw ScenarioError("latency_matrix: shape must be n x n (n=" +
                            std::to_string(cluster.n) + ", got " +
                            std::to_string(matrix.n) + ")");
    try {
        matrix.validate();
        workload.validate(cluster.n);
    } catch (const ScenarioError&) {
        throw;
    } catch (const std::exception& e) {
        throw ScenarioError(e.what());
    }
    if (horizon <= 0) throw ScenarioError("horizon: must be positive");
    if (attack) {
        if (attack->start >= attack->stop && attack->type != AttackType::crash)
            throw ScenarioError("attack.start: must precede attack.stop");
        if (attack->start < 0 || attack->start >= horizon)
            throw ScenarioError("attack.start: must lie within the horizon");
        if (attack->type == AttackType::delay && attack->delay_us <= 0)
            throw ScenarioError("attack.magnitude_ms: delay attack needs a positive magnitude");
        if (attack->type == AttackType::packet_loss &&
            (attack->drop_frac <= 0 || attack->drop_frac > 1))
            throw ScenarioError("attack.drop_frac: must be in (0,1]");
        if (attack->burst > 0 && attack->burst > multipaxos.view_timeout)
            throw ScenarioError("attack.burst_s: duty-cycled burst must not exceed the view timeout");
        if (attack->targeting == AttackTargeting::fixed &&
            attack->fixed_victim >= cluster.n)
            throw ScenarioError("attack.victim: unknown replica id");
    }
    if (synchrony) {
        if (synchrony->delta <= 0) throw ScenarioError("synchrony.delta_ms: must be positive");
        const double worst =
            static_cast<double>(matrix.max_oneway()) * (1.0 + matrix.jitter_frac);
        if (worst > static_cast<double>(synchrony->delta))
            throw ScenarioError("synchrony.delta_ms: smaller than worst-case link latency");
        if (attack && attack->stop > synchrony->gst &&
            attack->type != AttackType::crash)
            throw ScenarioError("synchrony.gst_s: attacks must end before GST");
    }
    if (baxos.batch_cap == 0 || multipaxos.batch_cap == 0)
        throw ScenarioError("batching.max_commands: must be positive");
}

namespace {

json matrix_to_json(const LatencyMatrix& m) {
    json rows = json::array();
    for (ReplicaId i = 0; i < m.n; ++i) {
        json row = json::array();
        for (ReplicaId j = 0; j < m.n; ++j)
            row.push_back(to_ms(m.oneway(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

LatencyMatrix matrix_from_json(const json& j, uint32_t n, double jitter) {
    if (j.is_string()) {
        const std::string profile = j.get<std::string>();
        if (profile == "aws") return LatencyMatrix::aws(n, jitter);
        throw ScenarioError("cluster.latency_profile: unknown profile '" + profile + "'");
    }
    LatencyMatrix m;
    m.jitter_frac = jitter;
    m.n = static_cast<uint32_t>(j.size());
    for (const auto& row : j) {
        if (row.size() != j.size())
            throw ScenarioError("cluster.latency_matrix_ms: shape must be n x n (" +
                                std::to_string(j.size()) + "x" +
                                std::to_string(row.size()) + ")");
        for (const auto& cell : row)
            m.oneway_us.push_back(static_cast<Micros>(cell.get<double>() * 1000.0));
    }
    return m;
}

} // namespace

std::string Scenario::to_json() const {
    json j;
    j["name"] = name;
    j["protocol"] = protocol_name(protocol);
    j["seed"] = seed;
    j["horizon_s"] = to_s(horizon);
    j["cluster"]["n"] = cluster.n;
    j["cluster"]["f"] = cluster.f;
    j["cluster"]["jitter_frac"] = matrix.jitter_frac;
    j["cluster"]["latency_matrix_ms"] = matrix_to_json(matrix);
    if (synchrony) {
        j["synchrony"]["gst_s"] = to_s(synchrony->gst);
        j["synchrony"]["delta_ms"] = to_ms(synchrony->delta);
    }
    if (attack) {
        j["attack"]["type"] = attack->type == AttackType::delay        ? "delay"
                              : attack->type == AttackType::packet_loss ? "packet-loss"
                                                                         : "crash";
        j["attack"]["targeting"] =
            attack->targeting == AttackTargeting::follow_leader   ? "follow-leader"
            : attack->targeting == AttackTargeting::fixed          ? "fixed"
                                                                   : "random-rotating";
        j["attack"]["victim"] = attack->fixed_victim;
        j["attack"]["start_s"] = to_s(attack->start);
        j["attack"]["stop_s"] = to_s(attack->stop);
        j["attack"]["magnitude_ms"] = to_ms(attack->delay_us);
        j["attack"]["drop_frac"] = attack->drop_frac;
        j["attack"]["burst_s"] = to_s(attack->burst);
        j["attack"]["cooldown_s"] = to_s(attack->cooldown);
    }
    j["workload"]["clients"] = workload.clients;
    j["workload"]["rate_per_client"] = workload.rate_per_client;
    j["workload"]["generator"] = generator_name(workload.generator);
    j["workload"]["request_bytes"] = workload.request_bytes;
    j["workload"]["response_bytes"] = workload.response_bytes;
    j["workload"]["key_space"] = workload.key_space;
    j["workload"]["zipf_theta"] = workload.zipf_theta;
    j["workload"]["timeout_s"] = to_s(workload.client_timeout);
    j["batching"]["window_ms"] = to_ms(baxos.batch_window);
    j["batching"]["max_commands"] = baxos.batch_cap;
    j["baxos"]["piggyback"] = baxos.piggyback;
    j["baxos"]["scheme"] = scheme_name(baxos.scheme);
    j["baxos"]["phase_timer_floor_ms"] = to_ms(baxos.phase_timer_floor);
    j["multipaxos"]["view_timeout_s"] = to_s(multipaxos.view_timeout);
    j["multipaxos"]["view_timeout_mode"] =
        multipaxos.timeout_mode == ViewTimeoutMode::fixed ? "fixed" : "exponential";
    return j.dump();
}

uint64_t Scenario::digest() const {
    const std::string text = to_json();
    Fnv1a h;
    h.add(text.data(), text.size());
    return h.digest();
}

Scenario Scenario::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ScenarioError(std::string("scenario: invalid JSON: ") + e.what());
    }
    Scenario s;
    try {
        s.name = j.value("name", "unnamed");
        if (j.contains("protocol")) s.protocol = parse_protocol(j["protocol"]);
        s.seed = j.value("seed", 1ull);
        s.horizon = static_cast<SimTime>(j.value("horizon_s", 60.0) * 1e6);

        const auto& jc = j.at("cluster");
        s.cluster.n = jc.at("n").get<uint32_t>();
        s.cluster.f = jc.value("f", (s.cluster.n - 1) / 2);
        const double jitter = jc.value("jitter_frac", 0.05);
        if (jc.contains("latency_matrix_ms"))
            s.matrix = matrix_from_json(jc["latency_matrix_ms"], s.cluster.n, jitter);
        else
            s.matrix = matrix_from_json(json(jc.value("latency_profile", "aws")),
                                        s.cluster.n, jitter);

        if (j.contains("synchrony")) {
            SynchronySpec sy;
            sy.gst = static_cast<SimTime>(j["synchrony"].value("gst_s", 0.0) * 1e6);
            sy.delta = static_cast<Micros>(j["synchrony"].value("delta_ms", 0.0) * 1000.0);
            s.synchrony = sy;
        }
        if (j.contains("attack")) {
            AttackSpec a;
            const std::string type = j["attack"].value("type", "delay");
            if (type == "delay") a.type = AttackType::delay;
            else if (type == "packet-loss") a.type = AttackType::packet_loss;
            else if (type == "crash") a.type = AttackType::crash;
            else throw ScenarioError("attack.type: expected delay|packet-loss|crash, got '" + type + "'");
            const std::string tgt = j["attack"].value("targeting", "follow-leader");
            if (tgt == "follow-leader") a.targeting = AttackTargeting::follow_leader;
            else if (tgt == "fixed") a.targeting = AttackTargeting::fixed;
            else if (tgt == "random-rotating") a.targeting = AttackTargeting::random_rotating;
            else throw ScenarioError("attack.targeting: unknown mode '" + tgt + "'");
            a.fixed_victim = j["attack"].value("victim", 0u);
            a.start = static_cast<SimTime>(j["attack"].value("start_s", 0.0) * 1e6);
            a.stop = static_cast<SimTime>(j["attack"].value("stop_s", 0.0) * 1e6);
            a.delay_us = static_cast<Micros>(j["attack"].value("magnitude_ms", 0.0) * 1000.0);
            a.drop_frac = j["attack"].value("drop_frac", 0.0);
            a.burst = static_cast<Micros>(j["attack"].value("burst_s", 0.0) * 1e6);
            a.cooldown = static_cast<Micros>(j["attack"].value("cooldown_s", 0.0) * 1e6);
            s.attack = a;
        }
        if (j.contains("workload")) {
            const auto& jw = j["workload"];
            s.workload.clients = jw.value("clients", s.cluster.n);
            s.workload.rate_per_client = jw.value("rate_per_client", 2500.0);
            if (jw.contains("generator"))
                s.workload.generator = parse_generator(jw["generator"]);
            s.workload.request_bytes = jw.value("request_bytes", 8u);
            s.workload.response_bytes = jw.value("response_bytes", 8u);
            s.workload.key_space = jw.value("key_space", 1000u);
            s.workload.zipf_theta = jw.value("zipf_theta", 0.99);
            s.workload.client_timeout =
                static_cast<Micros>(jw.value("timeout_s", 8.0) * 1e6);
        } else {
            s.workload.clients = s.cluster.n;
        }
        if (j.contains("batching")) {
            const Micros window =
                static_cast<Micros>(j["batching"].value("window_ms", 5.0) * 1000.0);
            const uint32_t cap = j["batching"].value("max_commands", 10000u);
            s.baxos.batch_window = window;
            s.baxos.batch_cap = cap;
            s.multipaxos.batch_window = window;
            s.multipaxos.batch_cap = cap;
        }
        if (j.contains("baxos")) {
            s.baxos.piggyback = j["baxos"].value("piggyback", true);
            if (j["baxos"].contains("scheme"))
                s.baxos.scheme = parse_scheme(j["baxos"]["scheme"]);
            s.baxos.phase_timer_floor = static_cast<Micros>(
                j["baxos"].value("phase_timer_floor_ms", 10.0) * 1000.0);
            s.baxos.pipeline = j["baxos"].value("pipeline", 1u);
        }
        if (j.contains("multipaxos")) {
            s.multipaxos.view_timeout =
                static_cast<Micros>(j["multipaxos"].value("view_timeout_s", 5.0) * 1e6);
            const std::string mode = j["multipaxos"].value("view_timeout_mode", "fixed");
            if (mode == "fixed") s.multipaxos.timeout_mode = ViewTimeoutMode::fixed;
            else if (mode == "exponential") s.multipaxos.timeout_mode = ViewTimeoutMode::exponential;
            else throw ScenarioError("multipaxos.view_timeout_mode: expected fixed|exponential");
        }
    } catch (const ScenarioError&) {
        throw;
    } catch (const json::exception& e) {
        throw ScenarioError(std::string("scenario: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(e.what());
    }
    s.validate();
    return s;
}

Scenario Scenario::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("scenario: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

} // namespace baxsim
