#pragma once

#include <map>
#include <vector>

#include "baxsim/simnet.hpp"
#include "baxsim/types.hpp"

namespace baxsim {

enum class Generator { micro, ycsb_a };

Generator parse_generator(const std::string& s);
const char* generator_name(Generator g);

struct WorkloadSpec {
    uint32_t clients = 5;        // one per region, co-located with replica i
    double rate_per_client = 2500.0;
    Generator generator = Generator::micro;
    uint32_t request_bytes = 8;  // micro payload
    uint32_t response_bytes = 8;
    uint32_t key_space = 1000;
    double zipf_theta = 0.99;
    Micros client_timeout = seconds(8);

    void validate(uint32_t n) const;
};

struct RequestRecord {
    uint64_t client = 0;
    uint64_t seq = 0;
    SimTime submitted = 0;
    SimTime committed = -1; // -1 = no response within the horizon
    bool failed = false;    // latency exceeded the client timeout
    ReplicaId routed = 0;
};

// YCSB-style Zipfian sampler over ranks 0..n-1 (rank 0 hottest).
class ZipfianGenerator {
public:
    ZipfianGenerator(uint32_t n, double theta);
    uint32_t sample(Rng& rng) const;

private:
    std::vector<double> cdf_;
};

class Clients : public ClientDriver {
public:
    Clients(WorkloadSpec spec, uint64_t seed);

    void start(Sim&) override;
    void handle_arrival(Sim&, uint32_t client) override;
    void handle_response(Sim&, uint32_t client, RequestId rid) override;

    // Finalizes failure marks for requests unanswered at the horizon.
    std::vector<RequestRecord> finish(SimTime horizon);
    const WorkloadSpec& spec() const { return spec_; }

private:
    Command make_command(Rng& rng, uint32_t client, uint64_t seq) const;
    ReplicaId route(Sim& sim, uint32_t client);

    WorkloadSpec spec_;
    std::vector<Rng> rngs_;
    std::vector<uint64_t> next_seq_;
    ZipfianGenerator zipf_;
    std::vector<RequestRecord> records_;
    std::map<RequestId, size_t> open_; // request id -> records_ index
};

} // namespace baxsim
