#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "fedsem/errors.hpp"
#include "fedsem/flcore.hpp"
#include "support/helpers.hpp"

using namespace fedsem;

namespace {

ModelParams make_params(ModelLayout layout, const std::vector<double>& values) {
    ModelParams p = ModelParams::zeros(layout);
    p.values = values;
    return p;
}

std::vector<ClientUpdate> random_updates(std::mt19937_64& eng, ModelLayout layout, int count) {
    std::uniform_int_distribution<long long> nk(1, 50);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<int> ids(count * 3);
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), eng);
    std::vector<ClientUpdate> updates;
    for (int i = 0; i < count; ++i) {
        ClientUpdate u;
        u.client_id = ids[i];
        u.n_k = nk(eng);
        u.params = ModelParams::zeros(layout);
        for (auto& v : u.params.values) v = noise(eng);
        updates.push_back(std::move(u));
    }
    return updates;
}

// Independently coded naive weighted mean in ascending client-id order.
std::vector<double> naive_weighted_mean(const std::vector<ClientUpdate>& updates) {
    std::vector<std::size_t> order(updates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return updates[a].client_id < updates[b].client_id;
    });
    std::vector<double> out(updates[0].params.values.size(), 0.0);
    double n = 0.0;
    for (auto idx : order) n += static_cast<double>(updates[idx].n_k);
    for (auto idx : order) {
        double w = static_cast<double>(updates[idx].n_k);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * updates[idx].params.values[i];
    }
    for (auto& v : out) v /= n;
    return out;
}

// Independently coded size-weighted pseudo-gradient mean, same order.
std::vector<double> naive_delta(const ModelParams& global, const std::vector<ClientUpdate>& updates) {
    std::vector<std::size_t> order(updates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return updates[a].client_id < updates[b].client_id;
    });
    double n = 0.0;
    for (auto idx : order) n += static_cast<double>(updates[idx].n_k);
    std::vector<double> delta(global.values.size(), 0.0);
    for (auto idx : order) {
        double w = static_cast<double>(updates[idx].n_k) / n;
        for (std::size_t i = 0; i < delta.size(); ++i)
            delta[i] += w * (global.values[i] - updates[idx].params.values[i]);
    }
    return delta;
}

// Tiny deterministic federated setup over dims (3, 3, 2).
SimulationBundle tiny_bundle(int total_clients, int per_client, std::uint64_t seed) {
    SimulationBundle bundle;
    bundle.dims = {3, 3, 2};
    bundle.round_cfg.total_clients = total_clients;
    bundle.round_cfg.clients_per_round = std::min(2, total_clients);
    bundle.round_cfg.total_rounds = 3;
    bundle.round_cfg.master_seed = seed;
    bundle.local_cfg.batch_size = 4;
    bundle.local_cfg.learning_rate = 0.05;

    std::mt19937_64 eng(seed);
    std::uniform_int_distribution<int> obj(0, 2);
    for (int u = 0; u < total_clients; ++u) {
        std::vector<RelationExample> data;
        for (int i = 0; i < per_client; ++i) {
            int s = obj(eng), o = obj(eng);
            data.push_back(featurize({s, o, (s + u) % 2}, bundle.dims));
        }
        bundle.client_data.push_back(std::move(data));
    }
    for (int sc = 0; sc < 5; ++sc) {
        TestScene scene;
        scene.scene_id = "scene" + std::to_string(sc);
        for (int i = 0; i < 4; ++i) scene.gt.push_back({obj(eng), obj(eng), (sc + i) % 2});
        bundle.test_scenes.push_back(std::move(scene));
    }
    return bundle;
}

bool close_all(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > tol * std::max(1.0, std::abs(b[i]))) return false;
    return true;
}

}  // namespace

TEST_SUITE("flcore") {

TEST_CASE("select_clients covers the range and stays deterministic") {
    auto all = select_clients(7, 7, 1, 99);
    std::vector<int> expected{0, 1, 2, 3, 4, 5, 6};
    CHECK(all == expected);

    auto one = select_clients(10, 1, 5, 99);
    REQUIRE(one.size() == 1u);
    CHECK(one[0] >= 0);
    CHECK(one[0] < 10);

    CHECK(select_clients(10, 4, 3, 42) == select_clients(10, 4, 3, 42));
    CHECK(select_clients(10, 4, 3, 42) != select_clients(10, 4, 4, 42));
    CHECK_THROWS_AS(select_clients(5, 6, 0, 0), ConfigError);

    auto sorted = select_clients(100, 10, 2, 7);
    CHECK(std::is_sorted(sorted.begin(), sorted.end()));
    CHECK(std::set<int>(sorted.begin(), sorted.end()).size() == sorted.size());
}

TEST_CASE("selection frequency is uniform over many rounds") {
    const int total = 10, count = 3, rounds = 10000;
    std::vector<int> freq(total, 0);
    for (int r = 0; r < rounds; ++r)
        for (int id : select_clients(total, count, r, 1234)) freq[id]++;
    // Binomial(10000, 0.3): 3 sigma is about 137.
    const double mean = rounds * static_cast<double>(count) / total;
    const double bound = 3.0 * std::sqrt(rounds * 0.3 * 0.7);
    for (int id = 0; id < total; ++id) CHECK(std::abs(freq[id] - mean) <= bound);
}

TEST_CASE("fedavg weighted mean, idempotence, and errors") {
    ModelLayout layout{1, 0};
    std::vector<ClientUpdate> updates;
    updates.push_back({0, 1, make_params(layout, {0.0})});
    updates.push_back({1, 3, make_params(layout, {4.0})});
    CHECK(aggregate_fedavg(updates).values[0] == 3.0);

    std::vector<ClientUpdate> same;
    for (int i = 0; i < 4; ++i) same.push_back({i, 7 + i, make_params(layout, {-1.25})});
    CHECK(std::abs(aggregate_fedavg(same).values[0] - (-1.25)) <= 1e-15 * 1.25);

    CHECK_THROWS_AS(aggregate_fedavg({}), DataError);
    std::vector<ClientUpdate> bad = updates;
    bad[1].params = make_params(ModelLayout{2, 0}, {1.0, 2.0});
    CHECK_THROWS_AS(aggregate_fedavg(bad), DataError);
    bad = updates;
    bad[0].n_k = 0;
    CHECK_THROWS_AS(aggregate_fedavg(bad), DataError);
}

TEST_CASE("fedavg matches the naive oracle on 100 random instances") {
    std::mt19937_64 eng(2024);
    std::uniform_int_distribution<int> count(2, 6), dim(2, 40);
    for (int trial = 0; trial < 100; ++trial) {
        ModelLayout layout{1, dim(eng) - 1};
        auto updates = random_updates(eng, layout, count(eng));
        auto got = aggregate_fedavg(updates).values;
        auto want = naive_weighted_mean(updates);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i)
            CHECK(std::abs(got[i] - want[i]) <= 1e-15 * std::max(1.0, std::abs(want[i])));
    }
}

TEST_CASE("fedavg is permutation-invariant and homogeneous") {
    std::mt19937_64 eng(55);
    ModelLayout layout{2, 4};
    auto updates = random_updates(eng, layout, 5);
    auto base = aggregate_fedavg(updates).values;

    auto shuffled = updates;
    std::reverse(shuffled.begin(), shuffled.end());
    CHECK(aggregate_fedavg(shuffled).values == base);

    auto scaled = updates;
    for (auto& u : scaled)
        for (auto& v : u.params.values) v *= 3.0;
    auto got = aggregate_fedavg(scaled).values;
    for (std::size_t i = 0; i < base.size(); ++i)
        CHECK(got[i] == doctest::Approx(3.0 * base[i]).epsilon(1e-14));
}

TEST_CASE("fedavgm with zero beta applies the fedavg pseudo-gradient exactly") {
    std::mt19937_64 eng(77);
    ModelLayout layout{3, 5};
    for (int trial = 0; trial < 20; ++trial) {
        auto updates = random_updates(eng, layout, 4);
        ServerState state = ServerState::init(layout);
        std::normal_distribution<double> noise(0.0, 1.0);
        for (auto& v : state.global.values) v = noise(eng);

        auto delta = naive_delta(state.global, updates);
        std::vector<double> expected(state.global.values.size());
        for (std::size_t i = 0; i < expected.size(); ++i) expected[i] = state.global.values[i] - delta[i];

        server_update_fedavgm(state, updates, 0.0);
        CHECK(state.global.values == expected);
    }
}

TEST_CASE("fedavgm momentum accumulates a constant delta") {
    ModelLayout layout{2, 0};
    ServerState state = ServerState::init(layout);
    state.global.values = {1.0, -2.0};
    const std::vector<double> d{0.5, -0.25};

    auto client_at = [&](const std::vector<double>& g) {
        std::vector<ClientUpdate> updates;
        std::vector<double> w(2);
        for (int i = 0; i < 2; ++i) w[i] = g[i] - d[i];
        updates.push_back({0, 5, make_params(layout, w)});
        return updates;
    };

    server_update_fedavgm(state, client_at(state.global.values), 0.9);
    CHECK(state.momentum[0] == doctest::Approx(d[0]).epsilon(1e-15));
    CHECK(state.momentum[1] == doctest::Approx(d[1]).epsilon(1e-15));
    CHECK(state.global.values[0] == doctest::Approx(0.5).epsilon(1e-15));

    server_update_fedavgm(state, client_at(state.global.values), 0.9);
    CHECK(state.momentum[0] == doctest::Approx(1.9 * d[0]).epsilon(1e-14));
    CHECK(state.momentum[1] == doctest::Approx(1.9 * d[1]).epsilon(1e-14));
}

TEST_CASE("fedavgm zero delta still decays the velocity") {
    ModelLayout layout{1, 0};
    ServerState state = ServerState::init(layout);
    state.global.values = {4.0};
    state.momentum = {0.5};
    std::vector<ClientUpdate> echo;
    echo.push_back({0, 3, make_params(layout, {4.0})});  // w_k == w_g, delta 0
    server_update_fedavgm(state, echo, 0.9);
    CHECK(state.momentum[0] == doctest::Approx(0.45).epsilon(1e-15));
    CHECK(state.global.values[0] == doctest::Approx(4.0 - 0.45).epsilon(1e-15));
}

TEST_CASE("fedadam first-step hand arithmetic") {
    ModelLayout layout{1, 0};
    AggregatorSpec spec;
    spec.kind = Aggregator::FedAdam;  // beta1 0.9, beta2 0.99, eta 0.1, epsilon 1e-8

    SUBCASE("zero delta from zero moments leaves the model unchanged") {
        ServerState state = ServerState::init(layout);
        state.global.values = {2.5};
        std::vector<ClientUpdate> echo;
        echo.push_back({0, 1, make_params(layout, {2.5})});
        server_update_fedadam(state, echo, spec);
        CHECK(state.global.values[0] == 2.5);
        CHECK(state.adam_m[0] == 0.0);
        CHECK(state.adam_v[0] == 0.0);
    }
    SUBCASE("scalar delta of 1.0") {
        ServerState state = ServerState::init(layout);
        state.global.values = {1.0};
        std::vector<ClientUpdate> updates;
        updates.push_back({0, 1, make_params(layout, {0.0})});  // delta = 1
        server_update_fedadam(state, updates, spec);
        CHECK(std::abs(state.adam_m[0] - 0.1) <= 1e-12);
        CHECK(std::abs(state.adam_v[0] - 0.01) <= 1e-12);
        double expected_step = 0.1 * 0.1 / (std::sqrt(0.01) + 1e-8);
        CHECK(std::abs((1.0 - state.global.values[0]) - expected_step) <= 1e-12);
    }
}

TEST_CASE("fedadam moves against the aggregate delta with bounded first step") {
    ModelLayout layout{2, 3};
    AggregatorSpec spec;
    spec.kind = Aggregator::FedAdam;
    std::mt19937_64 eng(91);
    std::uniform_real_distribution<double> mag(0.01, 2.0);

    ServerState state = ServerState::init(layout);
    std::vector<double> delta(state.global.values.size());
    for (auto& v : delta) v = mag(eng);
    for (std::size_t i = 0; i < delta.size(); ++i) state.global.values[i] = delta[i];  // w_k = 0 below

    std::vector<ClientUpdate> updates;
    updates.push_back({0, 2, make_params(layout, std::vector<double>(delta.size(), 0.0))});
    auto before = state.global.values;
    server_update_fedadam(state, updates, spec);
    for (std::size_t i = 0; i < delta.size(); ++i) {
        double step = before[i] - state.global.values[i];
        CHECK(step > 0.0);  // positive delta: global decreases
        double bound = spec.eta * (1.0 - spec.beta1) * std::abs(delta[i]) /
                       (std::sqrt(1.0 - spec.beta2) * std::abs(delta[i]) + spec.epsilon);
        CHECK(step <= bound * (1.0 + 1e-12));
    }
}

TEST_CASE("apply_aggregator dispatch and spec validation") {
    ModelLayout layout{1, 0};
    std::vector<ClientUpdate> updates;
    updates.push_back({0, 1, make_params(layout, {0.0})});
    updates.push_back({1, 3, make_params(layout, {4.0})});

    ServerState state = ServerState::init(layout);
    AggregatorSpec spec;
    apply_aggregator(state, updates, spec);
    CHECK(state.global.values[0] == 3.0);

    AggregatorSpec bad;
    bad.kind = Aggregator::FedAvgM;
    bad.beta = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.kind = Aggregator::FedAdam;
    bad.beta = 0.5;
    bad.eta = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("run_round with one selected client adopts its trained params") {
    auto bundle = tiny_bundle(3, 8, 404);
    bundle.round_cfg.clients_per_round = 1;
    ModelLayout layout{bundle.dims[2], bundle.dims[0] + bundle.dims[1]};
    ServerState state = ServerState::init(layout);
    ModelParams before = state.global;

    auto record = run_round(state, bundle, 1);
    CHECK(record.has_value());

    int chosen = select_clients(3, 1, 1, bundle.round_cfg.master_seed)[0];
    auto expected = local_train(before, bundle.client_data[chosen], bundle.local_cfg,
                                client_round_seed(bundle.round_cfg.master_seed, chosen, 1));
    CHECK(close_all(state.global.values, expected.values, 1e-15));
}

TEST_CASE("zero local epochs leave the global model unchanged") {
    auto bundle = tiny_bundle(4, 6, 71);
    bundle.local_cfg.epochs = 0;
    ModelLayout layout{bundle.dims[2], bundle.dims[0] + bundle.dims[1]};
    ServerState state = ServerState::init(layout);
    std::mt19937_64 eng(8);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (auto& v : state.global.values) v = noise(eng);
    auto before = state.global.values;

    run_round(state, bundle, 1);
    CHECK(close_all(state.global.values, before, 1e-15));
}

TEST_CASE("empty clients follow the strict flag") {
    auto bundle = tiny_bundle(2, 5, 13);
    bundle.round_cfg.clients_per_round = 2;
    bundle.client_data[1].clear();
    ModelLayout layout{bundle.dims[2], bundle.dims[0] + bundle.dims[1]};

    SUBCASE("strict mode raises") {
        ServerState state = ServerState::init(layout);
        CHECK_THROWS_AS(run_round(state, bundle, 1), ConfigError);
    }
    SUBCASE("lenient mode trains the remaining client") {
        bundle.round_cfg.strict_empty_clients = false;
        ServerState state = ServerState::init(layout);
        run_round(state, bundle, 1);
        auto expected = local_train(ModelParams::zeros(layout), bundle.client_data[0], bundle.local_cfg,
                                    client_round_seed(bundle.round_cfg.master_seed, 0, 1));
        CHECK(close_all(state.global.values, expected.values, 1e-15));
    }
    SUBCASE("no data anywhere raises even in lenient mode") {
        bundle.round_cfg.strict_empty_clients = false;
        bundle.client_data[0].clear();
        ServerState state = ServerState::init(layout);
        CHECK_THROWS_AS(run_round(state, bundle, 1), DataError);
    }
}

TEST_CASE("evaluate is bit-identical across serial and parallel paths") {
    auto bundle = tiny_bundle(3, 8, 500);
    ModelLayout layout{bundle.dims[2], bundle.dims[0] + bundle.dims[1]};
    std::mt19937_64 eng(3);
    ModelParams params = ModelParams::zeros(layout);
    std::normal_distribution<double> noise(0.0, 0.5);
    for (auto& v : params.values) v = noise(eng);

    auto serial = evaluate(params, bundle.test_scenes, bundle.dims, false);
    auto parallel = evaluate(params, bundle.test_scenes, bundle.dims, true);
    CHECK(serial.loss == parallel.loss);
    CHECK(serial.acc == parallel.acc);
    CHECK(serial.r20 == parallel.r20);
    CHECK(serial.mr20 == parallel.mr20);
    CHECK(serial.r100 == parallel.r100);
    CHECK_THROWS_AS(evaluate(params, {}, bundle.dims, false), DataError);
}

TEST_CASE("simulation determinism and single-round equivalence") {
    auto bundle = tiny_bundle(4, 8, 1717);
    bundle.round_cfg.total_rounds = 3;

    auto h1 = run_simulation(bundle);
    auto h2 = run_simulation(bundle);
    REQUIRE(h1.size() == h2.size());
    REQUIRE(h1.size() == 3u);
    for (std::size_t i = 0; i < h1.size(); ++i) {
        CHECK(h1[i].round == h2[i].round);
        CHECK(h1[i].loss == h2[i].loss);
        CHECK(h1[i].acc == h2[i].acc);
        CHECK(h1[i].r20 == h2[i].r20);
        CHECK(h1[i].r50 == h2[i].r50);
        CHECK(h1[i].r100 == h2[i].r100);
        CHECK(h1[i].mr20 == h2[i].mr20);
        CHECK(h1[i].mr50 == h2[i].mr50);
        CHECK(h1[i].mr100 == h2[i].mr100);
        CHECK(h1[i].final_round == h2[i].final_round);
    }
    CHECK(h1.back().final_round);
    CHECK(!h1.front().final_round);

    bundle.round_cfg.total_rounds = 1;
    ServerState final_state;
    auto single = run_simulation(bundle, &final_state);
    REQUIRE(single.size() == 1u);
    ModelLayout layout{bundle.dims[2], bundle.dims[0] + bundle.dims[1]};
    ServerState manual = ServerState::init(layout);
    auto record = run_round(manual, bundle, 1);
    REQUIRE(record.has_value());
    CHECK(single[0].loss == record->loss);
    CHECK(single[0].acc == record->acc);
    CHECK(single[0].mr50 == record->mr50);
    CHECK(final_state.global.values == manual.global.values);
}

TEST_CASE("simulation bundle validation") {
    auto bundle = tiny_bundle(3, 4, 2);
    bundle.client_data.pop_back();  // size no longer matches total_clients
    CHECK_THROWS_AS(run_simulation(bundle), ConfigError);

    auto no_test = tiny_bundle(3, 4, 2);
    no_test.test_scenes.clear();
    CHECK_THROWS_AS(run_simulation(no_test), ConfigError);
}

}  // TEST_SUITE
