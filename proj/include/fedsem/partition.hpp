#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedsem/semantics.hpp"

namespace fedsem {

enum class Strategy { Random, Shard, Dirichlet };

struct PartitionSpec {
    Strategy strategy = Strategy::Random;
    int n_clients = 1;
    std::uint64_t seed = 0;
    int shard_p = 1;              // Shard: clusters per client
    bool size_weighted = false;   // Shard p=1: selector counts proportional to cluster size
    std::vector<double> alpha;    // Dirichlet concentration, length n_clusters

    void validate(int n_clusters) const;
};

struct PartitionPlan {
    PartitionSpec spec;
    std::vector<std::vector<std::string>> clients; // client_id -> sample ids
};

PartitionPlan partition_random(const std::vector<std::string>& sample_ids, int n_clients, std::uint64_t seed);

PartitionPlan partition_shard(const ClusterAssignment& assignment, int n_clients, int p, std::uint64_t seed,
                              bool size_weighted = false);

PartitionPlan partition_dirichlet(const ClusterAssignment& assignment, int n_clients,
                                  const std::vector<double>& alpha, std::uint64_t seed);

// Dispatch on spec.strategy.
PartitionPlan make_partition(const PartitionSpec& spec, const ClusterAssignment& assignment);

struct ClientStats {
    int client_id = 0;
    std::vector<int> histogram; // per-cluster sample counts
    double entropy = 0.0;       // nats
    double max_proportion = 0.0;
};

struct HeterogeneityReport {
    std::vector<ClientStats> clients;
    double mean_entropy = 0.0;
    double median_entropy = 0.0;
    double mean_max_proportion = 0.0;
    double median_max_proportion = 0.0;
    double coverage = 0.0; // fraction of assigned samples present in the plan
};

HeterogeneityReport heterogeneity_report(const PartitionPlan& plan, const ClusterAssignment& assignment);

} // namespace fedsem
