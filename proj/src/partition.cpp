#include "fedsem/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedsem/errors.hpp"
#include "fedsem/rng.hpp"

namespace fedsem {

namespace {

constexpr std::uint64_t kTagOrder = 0x6f72646572;
constexpr std::uint64_t kTagCluster = 0x636c7573;
constexpr std::uint64_t kTagClient = 0x636c6e74;
constexpr std::uint64_t kTagPool = 0x706f6f6c;
constexpr int kShardRetries = 16;

// Cluster members in deterministic (lexicographic) order.
std::vector<std::vector<std::string>> cluster_members(const ClusterAssignment& assignment) {
    std::vector<std::vector<std::string>> members(assignment.n_clusters);
    for (const auto& [id, cluster] : assignment.labels) {
        if (cluster < 0 || cluster >= assignment.n_clusters)
            throw DataError("cluster index " + std::to_string(cluster) + " out of range for sample " + id);
        members[cluster].push_back(id);
    }
    return members;
}

// Largest-remainder apportionment of `total` into weights-proportional integers.
// Ties go to the lowest index.
std::vector<long long> largest_remainder(long long total, const std::vector<double>& weights) {
    const int n = static_cast<int>(weights.size());
    double weight_sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<long long> out(n, 0);
    if (total <= 0) return out;
    if (weight_sum <= 0.0) {
        // Degenerate weights: spread uniformly.
        for (int i = 0; i < n; ++i) out[i] = total / n + (i < total % n ? 1 : 0);
        return out;
    }
    std::vector<double> frac(n);
    long long assigned = 0;
    for (int i = 0; i < n; ++i) {
        double target = static_cast<double>(total) * weights[i] / weight_sum;
        out[i] = static_cast<long long>(std::floor(target));
        frac[i] = target - std::floor(target);
        assigned += out[i];
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b]; });
    for (long long r = total - assigned, i = 0; r > 0; --r, ++i) out[order[i % n]]++;
    return out;
}

} // namespace

void PartitionSpec::validate(int n_clusters) const {
    if (n_clients < 1) throw ConfigError("partition: n_clients must be >= 1");
    switch (strategy) {
    case Strategy::Random:
        break;
    case Strategy::Shard:
        if (shard_p < 1 || shard_p > n_clusters)
            throw ConfigError("partition: shard p must be in [1, " + std::to_string(n_clusters) + "]");
        if (size_weighted && shard_p != 1)
            throw ConfigError("partition: size_weighted shard allocation requires p = 1");
        break;
    case Strategy::Dirichlet:
        if (static_cast<int>(alpha.size()) != n_clusters)
            throw ConfigError("partition: alpha length " + std::to_string(alpha.size()) +
                              " does not match cluster count " + std::to_string(n_clusters));
        for (double a : alpha)
            if (!(a > 0.0)) throw ConfigError("partition: every alpha must be > 0");
        break;
    }
}

PartitionPlan partition_random(const std::vector<std::string>& sample_ids, int n_clients, std::uint64_t seed) {
    if (n_clients < 1) throw ConfigError("partition_random: n_clients must be >= 1");
    if (static_cast<int>(sample_ids.size()) < n_clients)
        throw ConfigError("partition_random: fewer samples (" + std::to_string(sample_ids.size()) +
                          ") than clients (" + std::to_string(n_clients) + ")");
    std::vector<std::string> ids = sample_ids;
    std::sort(ids.begin(), ids.end());
    auto eng = rng::engine(rng::derive(seed, kTagOrder));
    std::shuffle(ids.begin(), ids.end(), eng);

    PartitionPlan plan;
    plan.spec.strategy = Strategy::Random;
    plan.spec.n_clients = n_clients;
    plan.spec.seed = seed;
    plan.clients.resize(n_clients);
    const long long total = static_cast<long long>(ids.size());
    const long long base = total / n_clients, rem = total % n_clients;
    std::size_t cursor = 0;
    for (int u = 0; u < n_clients; ++u) {
        long long take = base + (u < rem ? 1 : 0);
        for (long long i = 0; i < take; ++i) plan.clients[u].push_back(ids[cursor++]);
    }
    return plan;
}

namespace {

// Selector lists per cluster: which clients draw a shard from each cluster.
// Round-robin over a seeded client order, so every cluster is picked by the
// same number of clients whenever n divides U*p, and each client gets p
// distinct clusters.
std::vector<std::vector<int>> shard_selectors(int n_clients, int n_clusters, int p, std::uint64_t seed) {
    std::vector<int> order(n_clients);
    std::iota(order.begin(), order.end(), 0);
    auto eng = rng::engine(rng::derive(seed, kTagOrder));
    std::shuffle(order.begin(), order.end(), eng);
    std::vector<std::vector<int>> selectors(n_clusters);
    for (int r = 0; r < p; ++r)
        for (int idx = 0; idx < n_clients; ++idx)
            selectors[(idx + r) % n_clusters].push_back(order[idx]);
    for (auto& list : selectors) std::sort(list.begin(), list.end());
    return selectors;
}

// Size-weighted variant (p = 1): client counts per cluster proportional to
// cluster size, largest-remainder rounded.
std::vector<std::vector<int>> shard_selectors_weighted(int n_clients, const std::vector<std::size_t>& sizes,
                                                       std::uint64_t seed) {
    std::vector<double> weights(sizes.begin(), sizes.end());
    auto counts = largest_remainder(n_clients, weights);
    std::vector<int> order(n_clients);
    std::iota(order.begin(), order.end(), 0);
    auto eng = rng::engine(rng::derive(seed, kTagOrder));
    std::shuffle(order.begin(), order.end(), eng);
    std::vector<std::vector<int>> selectors(sizes.size());
    std::size_t cursor = 0;
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        for (long long i = 0; i < counts[c]; ++i) selectors[c].push_back(order[cursor++]);
        std::sort(selectors[c].begin(), selectors[c].end());
    }
    return selectors;
}

} // namespace

PartitionPlan partition_shard(const ClusterAssignment& assignment, int n_clients, int p, std::uint64_t seed,
                              bool size_weighted) {
    const int n = assignment.n_clusters;
    PartitionSpec spec;
    spec.strategy = Strategy::Shard;
    spec.n_clients = n_clients;
    spec.seed = seed;
    spec.shard_p = p;
    spec.size_weighted = size_weighted;
    spec.validate(n);

    auto members = cluster_members(assignment);
    std::vector<std::size_t> sizes(n);
    for (int c = 0; c < n; ++c) sizes[c] = members[c].size();

    std::vector<std::vector<int>> selectors;
    int empty_cluster = -1;
    for (int attempt = 0; attempt < kShardRetries; ++attempt) {
        std::uint64_t sub = rng::derive(seed, kTagCluster, static_cast<std::uint64_t>(attempt));
        selectors = size_weighted ? shard_selectors_weighted(n_clients, sizes, sub)
                                  : shard_selectors(n_clients, n, p, sub);
        empty_cluster = -1;
        for (int c = 0; c < n; ++c)
            if (selectors[c].empty()) {
                empty_cluster = c;
                break;
            }
        if (empty_cluster < 0) break;
    }
    if (empty_cluster >= 0)
        throw DataError("partition_shard: cluster " + std::to_string(empty_cluster) +
                        " selected by zero clients");

    PartitionPlan plan;
    plan.spec = spec;
    plan.clients.resize(n_clients);
    for (int c = 0; c < n; ++c) {
        auto eng = rng::engine(rng::derive(seed, kTagPool, static_cast<std::uint64_t>(c)));
        std::shuffle(members[c].begin(), members[c].end(), eng);
        const auto& who = selectors[c];
        const std::size_t cnt = who.size();
        const std::size_t base = members[c].size() / cnt, rem = members[c].size() % cnt;
        std::size_t cursor = 0;
        for (std::size_t j = 0; j < cnt; ++j) {
            std::size_t take = base + (j < rem ? 1 : 0);
            auto& dest = plan.clients[who[j]];
            for (std::size_t i = 0; i < take; ++i) dest.push_back(members[c][cursor++]);
        }
    }
    return plan;
}

PartitionPlan partition_dirichlet(const ClusterAssignment& assignment, int n_clients,
                                  const std::vector<double>& alpha, std::uint64_t seed) {
    const int n = assignment.n_clusters;
    PartitionSpec spec;
    spec.strategy = Strategy::Dirichlet;
    spec.n_clients = n_clients;
    spec.seed = seed;
    spec.alpha = alpha;
    spec.validate(n);

    auto members = cluster_members(assignment);
    for (int c = 0; c < n; ++c) {
        if (members[c].empty()) throw DataError("partition_dirichlet: cluster " + std::to_string(c) + " is empty");
        auto eng = rng::engine(rng::derive(seed, kTagPool, static_cast<std::uint64_t>(c)));
        std::shuffle(members[c].begin(), members[c].end(), eng);
    }
    std::vector<std::size_t> cursor(n, 0); // consumed prefix of each shuffled pool

    long long total = 0;
    for (const auto& m : members) total += static_cast<long long>(m.size());

    PartitionPlan plan;
    plan.spec = spec;
    plan.clients.resize(n_clients);
    const long long base = total / n_clients, rem = total % n_clients;
    for (int u = 0; u < n_clients; ++u) {
        auto eng = rng::engine(rng::derive(seed, kTagClient, static_cast<std::uint64_t>(u)));
        std::vector<double> p_u = rng::dirichlet(alpha, eng);
        long long quota = base + (u < rem ? 1 : 0);
        while (quota > 0) {
            std::vector<int> active;
            for (int c = 0; c < n; ++c)
                if (cursor[c] < members[c].size()) active.push_back(c);
            if (active.empty()) break;
            std::vector<double> weights(active.size());
            for (std::size_t i = 0; i < active.size(); ++i) weights[i] = p_u[active[i]];
            auto requests = largest_remainder(quota, weights);
            for (std::size_t i = 0; i < active.size(); ++i) {
                int c = active[i];
                std::size_t avail = members[c].size() - cursor[c];
                std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(requests[i]), avail);
                for (std::size_t j = 0; j < take; ++j) plan.clients[u].push_back(members[c][cursor[c]++]);
                quota -= static_cast<long long>(take);
            }
        }
    }
    return plan;
}

PartitionPlan make_partition(const PartitionSpec& spec, const ClusterAssignment& assignment) {
    switch (spec.strategy) {
    case Strategy::Random: {
        std::vector<std::string> ids;
        ids.reserve(assignment.labels.size());
        for (const auto& [id, cluster] : assignment.labels) ids.push_back(id);
        return partition_random(ids, spec.n_clients, spec.seed);
    }
    case Strategy::Shard:
        return partition_shard(assignment, spec.n_clients, spec.shard_p, spec.seed, spec.size_weighted);
    case Strategy::Dirichlet:
        return partition_dirichlet(assignment, spec.n_clients, spec.alpha, spec.seed);
    }
    throw ConfigError("partition: unknown strategy");
}

HeterogeneityReport heterogeneity_report(const PartitionPlan& plan, const ClusterAssignment& assignment) {
    const int n = assignment.n_clusters;
    HeterogeneityReport report;
    report.clients.reserve(plan.clients.size());
    std::size_t assigned = 0;
    for (std::size_t u = 0; u < plan.clients.size(); ++u) {
        ClientStats stats;
        stats.client_id = static_cast<int>(u);
        stats.histogram.assign(n, 0);
        for (const auto& id : plan.clients[u]) {
            auto it = assignment.labels.find(id);
            if (it == assignment.labels.end())
                throw DataError("heterogeneity_report: sample " + id + " missing from assignment");
            stats.histogram[it->second]++;
        }
        const double total = static_cast<double>(plan.clients[u].size());
        assigned += plan.clients[u].size();
        if (total > 0) {
            for (int count : stats.histogram) {
                if (count == 0) continue;
                double p = count / total;
                stats.entropy -= p * std::log(p);
                stats.max_proportion = std::max(stats.max_proportion, p);
            }
        }
        report.clients.push_back(std::move(stats));
    }

    auto summarize = [](std::vector<double> values, double& mean, double& median) {
        if (values.empty()) return;
        mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
        std::sort(values.begin(), values.end());
        std::size_t mid = values.size() / 2;
        median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
    };
    std::vector<double> entropies, max_props;
    for (const auto& c : report.clients) {
        entropies.push_back(c.entropy);
        max_props.push_back(c.max_proportion);
    }
    summarize(entropies, report.mean_entropy, report.median_entropy);
    summarize(max_props, report.mean_max_proportion, report.median_max_proportion);
    report.coverage = assignment.labels.empty()
                          ? 0.0
                          : static_cast<double>(assigned) / static_cast<double>(assignment.labels.size());
    return report;
}

} // namespace fedsem
