#pragma once

#include <cmath>
#include <cstdint>

namespace baxsim {

// splitmix64 step; advances x and returns the next output word.
inline uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Deterministic xoshiro256** stream. All randomness in the simulator flows
// through instances of this class so runs are reproducible bit-for-bit across
// platforms (no std::uniform_* distributions, whose output is
// implementation-defined).
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& w : s_) w = splitmix64(x);
    }

    // Derives an independent stream seed from (seed, stream id).
    static uint64_t derive(uint64_t seed, uint64_t stream) {
        uint64_t x = seed ^ (0x9e3779b97f4a7c15ull * (stream + 1));
        splitmix64(x);
        return splitmix64(x);
    }

    uint64_t next() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0,1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in the open interval (0,1); exact 0 draws are redrawn.
    double uniform_open01() {
        double u = uniform01();
        while (u == 0.0) u = uniform01();
        return u;
    }

    // Uniform in [-1,1].
    double uniform_pm1() { return 2.0 * uniform01() - 1.0; }

    // Uniform integer in [0,n). Rejection sampling, unbiased.
    uint64_t below(uint64_t n) {
        if (n <= 1) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v = next();
        while (v >= limit) v = next();
        return v % n;
    }

    // Exponential inter-arrival gap with the given rate (events per unit).
    double exponential(double rate) {
        return -std::log(1.0 - uniform01()) / rate;
    }

private:
    static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
    uint64_t s_[4];
};

// FNV-1a, used for digests of batches, traces and state snapshots.
class Fnv1a {
public:
    void add(const void* data, size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < len; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001b3ull;
        }
    }
    void add_u64(uint64_t v) { add(&v, sizeof(v)); }
    uint64_t digest() const { return h_; }

private:
    uint64_t h_ = 0xcbf29ce484222325ull;
};

} // namespace baxsim
