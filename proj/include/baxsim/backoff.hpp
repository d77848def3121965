#pragma once

#include <map>
#include <vector>

#include "baxsim/rng.hpp"
#include "baxsim/types.hpp"

namespace baxsim {

enum class RebScheme { baxos, binary, modified_binary };

RebScheme parse_scheme(const std::string& s);
const char* scheme_name(RebScheme s);

// Network-diameter round-trip estimate. Per-peer EWMA (weight 0.125) over
// Promise/Accept response times; the reported value is the max across peers.
// Peers that have not reported yet stand at the configured prior, so early
// backoffs are scaled by the latency-matrix diameter.
class RttEstimate {
public:
    RttEstimate(Micros prior, std::vector<ReplicaId> peers);

    void observe(ReplicaId peer, Micros sample);
    Micros current() const;

private:
    Micros prior_;
    std::vector<ReplicaId> peers_;
    std::map<ReplicaId, double> estimate_us_;
};

// Retry bookkeeping plus the backoff draw itself.
//   baxos:            k * 2^l * 2*RTT, k uniform in the open interval (0,1)
//   binary:           k' * 2*RTT,      k' uniform integer in {0..2^l - 1};
//                     success resets l to 0 (capture effect)
//   modified binary:  same slotted draw, but success decrements l like baxos
class BackoffState {
public:
    BackoffState(RebScheme scheme, uint64_t seed) : scheme_(scheme), rng_(seed) {}

    Micros draw(const RttEstimate& rtt);
    void on_retry();   // timeout observed: l += 1
    void on_success(); // proposal landed: scheme-specific decrease

    uint32_t retries() const { return retries_; }
    RebScheme scheme() const { return scheme_; }

    // Deterministic core of the baxos draw, exposed for direct checks.
    static Micros baxos_backoff(double k, uint32_t retries, Micros rtt);

private:
    RebScheme scheme_;
    Rng rng_;
    uint32_t retries_ = 0;
};

// Probability that a given proposer among p contenders, each at retry count l,
// gets a collision-free window long enough to run both phases:
//   (1 - 1/2^(l-1))^(p-1), clamped to [0,1].
// Undefined at l = 0 (the inner term leaves [0,1]); rejects it.
double termination_probability(uint32_t l, uint32_t p);

// Monte Carlo estimate of the same probability. Each trial drops p backoff
// completion offsets uniformly into the window of length 2^(l+2) * delta and
// succeeds when no other proposer lands within +-4*delta of the first
// proposer's offset. Deterministic per seed; trials are independent, so the
// loop parallelizes without changing the result.
double mc_single_winner_probability(uint32_t l, uint32_t p, uint32_t trials,
                                    uint64_t seed);

} // namespace baxsim
