#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fedsem/metrics.hpp"
#include "fedsem/trainer.hpp"

namespace fedsem {

enum class Aggregator { FedAvg, FedAvgM, FedAdam };

struct AggregatorSpec {
    Aggregator kind = Aggregator::FedAvg;
    double beta = 0.9;     // FedAvgM server momentum
    double beta1 = 0.9;    // FedAdam
    double beta2 = 0.99;   // FedAdam
    double eta = 0.1;      // FedAdam server learning rate
    double epsilon = 1e-8; // FedAdam

    void validate() const;
};

struct ServerState {
    ModelParams global;
    std::vector<double> momentum; // FedAvgM velocity v
    std::vector<double> adam_m;
    std::vector<double> adam_v;
    int round = 0;

    static ServerState init(ModelLayout layout);
};

struct RoundConfig {
    int total_clients = 100;
    int clients_per_round = 5;
    int total_rounds = 100;
    int eval_every = 1;
    std::uint64_t master_seed = 0;
    bool strict_empty_clients = true; // error on selected clients with no data (else skip)

    void validate() const;
};

struct ClientUpdate {
    int client_id = 0;
    long long n_k = 0;
    ModelParams params;
};

// Uniform sample without replacement, sorted ascending; deterministic per (seed, round).
std::vector<int> select_clients(int total_clients, int count, int round_index, std::uint64_t master_seed);

// Seed of one client's local pass in one round, exposed so a single client's
// training can be reproduced outside run_round.
std::uint64_t client_round_seed(std::uint64_t master_seed, int client_id, int round_index);

// Data-size-weighted mean of client params, summed in ascending client-id order.
ModelParams aggregate_fedavg(const std::vector<ClientUpdate>& updates);

// Size-weighted mean of pseudo-gradients delta_k = w_g - w_k, ascending order.
std::vector<double> aggregate_delta(const ModelParams& global, const std::vector<ClientUpdate>& updates);

void server_update_fedavg(ServerState& state, const std::vector<ClientUpdate>& updates);
void server_update_fedavgm(ServerState& state, const std::vector<ClientUpdate>& updates, double beta);
void server_update_fedadam(ServerState& state, const std::vector<ClientUpdate>& updates,
                           const AggregatorSpec& spec);
void apply_aggregator(ServerState& state, const std::vector<ClientUpdate>& updates, const AggregatorSpec& spec);

struct SimulationBundle {
    std::vector<std::vector<RelationExample>> client_data; // index = client id
    std::vector<TestScene> test_scenes;
    std::array<int, 3> dims{13, 13, 7}; // super-class dims (N1, N2, N3)
    RoundConfig round_cfg;
    AggregatorSpec aggregator;
    LocalTrainConfig local_cfg;
    bool use_parallel = true; // train selected clients and score scenes with OpenMP
};

// Test-set evaluation: loss and predicate accuracy over gt relations, R@K and
// mR@K over ranked per-scene candidate triplets (gt pairs x all predicates).
MetricRecord evaluate(const ModelParams& params, const std::vector<TestScene>& scenes,
                      const std::array<int, 3>& dims, bool use_parallel);

// One federated round: select, train locally, aggregate. Engaged result when
// evaluation was scheduled this round.
std::optional<MetricRecord> run_round(ServerState& state, const SimulationBundle& bundle, int round_index);

// Optionally exposes the final server state (e.g. for checkpointing).
RoundHistory run_simulation(const SimulationBundle& bundle, ServerState* final_state = nullptr);

} // namespace fedsem
