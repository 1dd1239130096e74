#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fedsem/errors.hpp"
#include "fedsem/partition.hpp"
#include "support/helpers.hpp"

using namespace fedsem;
using test_support::make_ids;
using test_support::padded_id;
using test_support::throws_containing;

namespace {

// Sequentially numbered ids, cluster c owning counts[c] of them.
ClusterAssignment make_assignment(const std::vector<int>& counts) {
    ClusterAssignment a;
    a.n_clusters = static_cast<int>(counts.size());
    int next = 0;
    for (int c = 0; c < a.n_clusters; ++c)
        for (int i = 0; i < counts[c]; ++i) a.labels[padded_id(next++)] = c;
    return a;
}

// Client plans must tile the id universe exactly.
void check_exact_cover(const PartitionPlan& plan, const std::set<std::string>& universe) {
    std::set<std::string> seen;
    for (const auto& client : plan.clients)
        for (const auto& id : client) {
            CHECK(universe.count(id) == 1);
            CHECK(seen.insert(id).second);  // no duplicates across clients
        }
    CHECK(seen.size() == universe.size());
}

std::vector<int> client_histogram(const std::vector<std::string>& client, const ClusterAssignment& a) {
    std::vector<int> hist(a.n_clusters, 0);
    for (const auto& id : client) hist[a.labels.at(id)]++;
    return hist;
}

}  // namespace

TEST_SUITE("partition") {

TEST_CASE("random split sizes differ by at most one, remainder to low clients") {
    auto even = partition_random(make_ids(10), 5, 7);
    for (const auto& c : even.clients) CHECK(c.size() == 2u);

    auto uneven = partition_random(make_ids(11), 5, 7);
    CHECK(uneven.clients[0].size() == 3u);
    for (int u = 1; u < 5; ++u) CHECK(uneven.clients[u].size() == 2u);

    std::set<std::string> universe;
    for (const auto& id : make_ids(11)) universe.insert(id);
    check_exact_cover(uneven, universe);
}

TEST_CASE("random split is deterministic and ignores input order") {
    auto ids = make_ids(103);
    auto a = partition_random(ids, 7, 42);
    auto b = partition_random(ids, 7, 42);
    CHECK(a.clients == b.clients);

    std::vector<std::string> reversed(ids.rbegin(), ids.rend());
    CHECK(partition_random(reversed, 7, 42).clients == a.clients);

    CHECK(partition_random(ids, 7, 43).clients != a.clients);
    CHECK_THROWS_AS(partition_random(make_ids(3), 4, 0), ConfigError);
}

TEST_CASE("shard p=1 gives each client one cluster, clusters split evenly") {
    auto a = make_assignment({4, 4});
    auto plan = partition_shard(a, 4, 1, 5);
    std::map<int, int> clients_per_cluster;
    for (const auto& client : plan.clients) {
        CHECK(client.size() == 2u);
        auto hist = client_histogram(client, a);
        int nonzero = 0, cluster = -1;
        for (int c = 0; c < 2; ++c)
            if (hist[c] > 0) {
                ++nonzero;
                cluster = c;
            }
        CHECK(nonzero == 1);
        clients_per_cluster[cluster]++;
    }
    CHECK(clients_per_cluster[0] == 2);
    CHECK(clients_per_cluster[1] == 2);
}

TEST_CASE("shard p=n spreads every cluster over every client") {
    auto a = make_assignment({4, 4});
    auto plan = partition_shard(a, 4, 2, 5);
    for (const auto& client : plan.clients) {
        auto hist = client_histogram(client, a);
        CHECK(hist == std::vector<int>{1, 1});
    }
    std::set<std::string> universe;
    for (const auto& [id, c] : a.labels) universe.insert(id);
    check_exact_cover(plan, universe);
}

TEST_CASE("shard arithmetic at benchmark scale") {
    // 5 balanced clusters of 2200, 100 clients.
    auto a = make_assignment(std::vector<int>(5, 2200));
    std::set<std::string> universe;
    for (const auto& [id, c] : a.labels) universe.insert(id);

    SUBCASE("p=5: every client draws 22 from each cluster") {
        auto plan = partition_shard(a, 100, 5, 11);
        for (const auto& client : plan.clients) {
            CHECK(client.size() == 110u);
            CHECK(client_histogram(client, a) == std::vector<int>(5, 22));
        }
        check_exact_cover(plan, universe);
    }
    SUBCASE("p=1: pure clients, 20 per cluster, 110 samples each") {
        auto plan = partition_shard(a, 100, 1, 11);
        std::map<int, int> clients_per_cluster;
        for (const auto& client : plan.clients) {
            CHECK(client.size() == 110u);
            auto hist = client_histogram(client, a);
            for (int c = 0; c < 5; ++c)
                if (hist[c] > 0) {
                    CHECK(hist[c] == 110);
                    clients_per_cluster[c]++;
                }
        }
        for (int c = 0; c < 5; ++c) CHECK(clients_per_cluster[c] == 20);
        check_exact_cover(plan, universe);
    }
}

TEST_CASE("shard rejects impossible configurations") {
    auto a = make_assignment({4, 4});
    CHECK_THROWS_AS(partition_shard(a, 4, 3, 0), ConfigError);  // p > n_clusters
    // 2 clients cannot cover 5 clusters at p=1: round-robin leaves cluster 2 first.
    auto five = make_assignment({3, 3, 3, 3, 3});
    CHECK(throws_containing<DataError>([&] { partition_shard(five, 2, 1, 9); }, "cluster 2"));
}

TEST_CASE("size-weighted shard allocates selector counts by cluster size") {
    auto a = make_assignment({8, 4, 4});
    auto plan = partition_shard(a, 4, 1, 3, true);
    std::map<int, int> clients_per_cluster;
    for (const auto& client : plan.clients) {
        CHECK(client.size() == 4u);  // 16 samples over 4 clients
        auto hist = client_histogram(client, a);
        int nonzero = 0, cluster = -1;
        for (int c = 0; c < 3; ++c)
            if (hist[c] > 0) {
                ++nonzero;
                cluster = c;
            }
        CHECK(nonzero == 1);
        clients_per_cluster[cluster]++;
    }
    CHECK(clients_per_cluster[0] == 2);
    CHECK(clients_per_cluster[1] == 1);
    CHECK(clients_per_cluster[2] == 1);

    CHECK_THROWS_AS(partition_shard(a, 4, 2, 3, true), ConfigError);
}

TEST_CASE("dirichlet draws without replacement and hits the quota") {
    auto a = make_assignment({50, 30, 20});
    std::vector<double> alpha(3, 0.5);
    auto plan = partition_dirichlet(a, 10, alpha, 21);
    REQUIRE(plan.clients.size() == 10u);
    for (const auto& client : plan.clients) CHECK(client.size() == 10u);
    std::set<std::string> universe;
    for (const auto& [id, c] : a.labels) universe.insert(id);
    check_exact_cover(plan, universe);

    CHECK(partition_dirichlet(a, 10, alpha, 21).clients == plan.clients);
    CHECK_THROWS_AS(partition_dirichlet(a, 10, {0.5, 0.5}, 21), ConfigError);
    CHECK_THROWS_AS(partition_dirichlet(a, 10, {0.5, 0.5, 0.0}, 21), ConfigError);
}

TEST_CASE("dirichlet with huge alpha approximates uniform mixing") {
    auto a = make_assignment(std::vector<int>(5, 1000));
    std::vector<double> alpha(5, 1000.0);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto plan = partition_dirichlet(a, 100, alpha, seed);
        double abs_dev = 0.0;
        long long cells = 0;
        for (const auto& client : plan.clients) {
            auto hist = client_histogram(client, a);
            double total = static_cast<double>(client.size());
            REQUIRE(total > 0);
            for (int c = 0; c < 5; ++c) {
                abs_dev += std::abs(hist[c] / total - 0.2);
                ++cells;
            }
        }
        CHECK(abs_dev / static_cast<double>(cells) < 0.03);
    }
}

TEST_CASE("dirichlet with small alpha concentrates client data") {
    auto a = make_assignment(std::vector<int>(5, 1000));
    std::vector<double> alpha(5, 0.2);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto plan = partition_dirichlet(a, 100, alpha, seed);
        auto report = heterogeneity_report(plan, a);
        CHECK(report.median_max_proportion >= 0.6);
    }
}

TEST_CASE("client entropy decreases as alpha shrinks") {
    auto a = make_assignment(std::vector<int>(5, 320));
    auto mean_entropy = [&](double alpha_value) {
        double total = 0.0;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            auto plan = partition_dirichlet(a, 50, std::vector<double>(5, alpha_value), seed);
            total += heterogeneity_report(plan, a).mean_entropy;
        }
        return total / 5.0;
    };
    double e10 = mean_entropy(10.0), e1 = mean_entropy(1.0), e02 = mean_entropy(0.2);
    CHECK(e10 > e1);
    CHECK(e1 > e02);
}

TEST_CASE("heterogeneity report on pure and uniform plans") {
    auto a = make_assignment(std::vector<int>(5, 40));

    auto pure = partition_shard(a, 10, 1, 2);
    auto pure_report = heterogeneity_report(pure, a);
    CHECK(pure_report.coverage == 1.0);
    for (const auto& c : pure_report.clients) {
        CHECK(c.entropy == 0.0);
        CHECK(c.max_proportion == 1.0);
    }
    CHECK(pure_report.mean_entropy == 0.0);
    CHECK(pure_report.median_max_proportion == 1.0);

    auto uniform = partition_shard(a, 10, 5, 2);
    auto uniform_report = heterogeneity_report(uniform, a);
    for (const auto& c : uniform_report.clients) {
        CHECK(c.histogram == std::vector<int>(5, 4));
        CHECK(c.entropy == doctest::Approx(std::log(5.0)).epsilon(1e-12));
        CHECK(c.max_proportion == doctest::Approx(0.2).epsilon(1e-12));
    }
    CHECK(uniform_report.mean_entropy > pure_report.mean_entropy);
}

TEST_CASE("heterogeneity report flags unknown samples and partial coverage") {
    auto a = make_assignment({4, 4});
    PartitionPlan plan;
    plan.clients = {{padded_id(0), padded_id(4)}, {padded_id(1), padded_id(5)}};
    auto report = heterogeneity_report(plan, a);
    CHECK(report.coverage == 0.5);

    plan.clients[0].push_back("ghost");
    CHECK(throws_containing<DataError>([&] { heterogeneity_report(plan, a); }, "ghost"));
}

TEST_CASE("make_partition dispatches to the strategy implementations") {
    auto a = make_assignment({12, 12, 12});

    PartitionSpec random_spec;
    random_spec.strategy = Strategy::Random;
    random_spec.n_clients = 4;
    random_spec.seed = 9;
    std::vector<std::string> ids;
    for (const auto& [id, c] : a.labels) ids.push_back(id);
    CHECK(make_partition(random_spec, a).clients == partition_random(ids, 4, 9).clients);

    PartitionSpec shard_spec;
    shard_spec.strategy = Strategy::Shard;
    shard_spec.n_clients = 6;
    shard_spec.seed = 9;
    shard_spec.shard_p = 3;
    CHECK(make_partition(shard_spec, a).clients == partition_shard(a, 6, 3, 9).clients);

    PartitionSpec dir_spec;
    dir_spec.strategy = Strategy::Dirichlet;
    dir_spec.n_clients = 6;
    dir_spec.seed = 9;
    dir_spec.alpha = {1.0, 1.0, 1.0};
    CHECK(make_partition(dir_spec, a).clients == partition_dirichlet(a, 6, dir_spec.alpha, 9).clients);
}

}  // TEST_SUITE
