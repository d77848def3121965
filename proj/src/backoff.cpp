#include "baxsim/backoff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace baxsim {

RebScheme parse_scheme(const std::string& s) {
    if (s == "baxos") return RebScheme::baxos;
    if (s == "binary") return RebScheme::binary;
    if (s == "modified-binary") return RebScheme::modified_binary;
    throw std::invalid_argument("scheme: expected baxos|binary|modified-binary, got '" + s + "'");
}

const char* scheme_name(RebScheme s) {
    switch (s) {
    case RebScheme::baxos: return "baxos";
    case RebScheme::binary: return "binary";
    case RebScheme::modified_binary: return "modified-binary";
    }
    return "?";
}

RttEstimate::RttEstimate(Micros prior, std::vector<ReplicaId> peers)
    : prior_(prior), peers_(std::move(peers)) {}

void RttEstimate::observe(ReplicaId peer, Micros sample) {
    if (sample <= 0) return;
    auto it = estimate_us_.find(peer);
    if (it == estimate_us_.end()) {
        // TCP-style: the first measurement seeds the per-peer estimate.
        estimate_us_[peer] = static_cast<double>(sample);
    } else {
        it->second = 0.875 * it->second + 0.125 * static_cast<double>(sample);
    }
}

Micros RttEstimate::current() const {
    // The configured prior stands in for every peer that has not reported.
    const bool all_reported = !peers_.empty() && estimate_us_.size() >= peers_.size();
    double best = all_reported ? 0 : static_cast<double>(prior_);
    for (const auto& [peer, est] : estimate_us_) best = std::max(best, est);
    return std::max<Micros>(1, static_cast<Micros>(best));
}

Micros BackoffState::baxos_backoff(double k, uint32_t retries, Micros rtt) {
    double window = std::ldexp(2.0 * static_cast<double>(rtt), static_cast<int>(retries));
    return std::max<Micros>(1, static_cast<Micros>(k * window));
}

Micros BackoffState::draw(const RttEstimate& rtt) {
    const Micros current = rtt.current();
    if (current <= 0) throw std::invalid_argument("backoff draw: non-positive RTT");
    if (scheme_ == RebScheme::baxos) {
        return baxos_backoff(rng_.uniform_open01(), retries_, current);
    }
    // Slotted schemes: slot = one two-phase round trip, window {0 .. 2^l - 1}.
    const uint64_t slots = uint64_t{1} << std::min<uint32_t>(retries_, 62);
    const uint64_t k = rng_.below(slots);
    return static_cast<Micros>(k) * 2 * current;
}

void BackoffState::on_retry() { ++retries_; }

void BackoffState::on_success() {
    if (scheme_ == RebScheme::binary) {
        retries_ = 0;
    } else if (retries_ > 0) {
        --retries_;
    }
}

double termination_probability(uint32_t l, uint32_t p) {
    if (l == 0) throw std::invalid_argument("termination_probability: l must be >= 1");
    if (p == 0) throw std::invalid_argument("termination_probability: p must be >= 1");
    const double base = 1.0 - std::ldexp(1.0, -static_cast<int>(l - 1));
    const double prob = std::pow(base, static_cast<double>(p - 1));
    return std::clamp(prob, 0.0, 1.0);
}

double mc_single_winner_probability(uint32_t l, uint32_t p, uint32_t trials,
                                    uint64_t seed) {
    if (p == 0 || trials == 0) throw std::invalid_argument("mc: p and trials must be >= 1");
    // Window normalized to length 1; delta = 1 / 2^(l+2) in those units, so
    // the +-4*delta conflict zone has half-width 2^-l.
    const double half_width = std::ldexp(1.0, -static_cast<int>(l));
    int64_t wins = 0;
#ifdef _OPENMP
#pragma omp parallel for reduction(+ : wins) schedule(static)
#endif
    for (int64_t t = 0; t < static_cast<int64_t>(trials); ++t) {
        Rng rng(Rng::derive(seed, static_cast<uint64_t>(t)));
        const double mine = rng.uniform_open01();
        bool clear = true;
        for (uint32_t j = 1; j < p; ++j) {
            const double other = rng.uniform_open01();
            if (std::abs(other - mine) < half_width) {
                clear = false;
                break;
            }
        }
        wins += clear ? 1 : 0;
    }
    return static_cast<double>(wins) / static_cast<double>(trials);
}

} // namespace baxsim
