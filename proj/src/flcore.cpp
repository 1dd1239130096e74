#include "fedsem/flcore.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <utility>

#include "fedsem/errors.hpp"
#include "fedsem/parallel.hpp"
#include "fedsem/rng.hpp"

namespace fedsem {

namespace {
constexpr std::uint64_t kTagSelect = 0x73656c6563;
constexpr std::uint64_t kTagTrain = 0x747261696e;
} // namespace

void AggregatorSpec::validate() const {
    if (kind == Aggregator::FedAvgM && (beta < 0.0 || beta >= 1.0))
        throw ConfigError("aggregator: beta must be in [0, 1)");
    if (kind == Aggregator::FedAdam) {
        if (beta1 < 0.0 || beta1 >= 1.0) throw ConfigError("aggregator: beta1 must be in [0, 1)");
        if (beta2 < 0.0 || beta2 >= 1.0) throw ConfigError("aggregator: beta2 must be in [0, 1)");
        if (!(eta > 0.0)) throw ConfigError("aggregator: eta must be > 0");
        if (!(epsilon > 0.0)) throw ConfigError("aggregator: epsilon must be > 0");
    }
}

void RoundConfig::validate() const {
    if (total_clients < 1) throw ConfigError("round: total_clients must be >= 1");
    if (clients_per_round < 1 || clients_per_round > total_clients)
        throw ConfigError("round: clients_per_round must be in [1, total_clients]");
    if (total_rounds < 1) throw ConfigError("round: total_rounds must be >= 1");
    if (eval_every < 1) throw ConfigError("round: eval_every must be >= 1");
}

ServerState ServerState::init(ModelLayout layout) {
    ServerState state;
    state.global = ModelParams::zeros(layout);
    state.momentum.assign(layout.size(), 0.0);
    state.adam_m.assign(layout.size(), 0.0);
    state.adam_v.assign(layout.size(), 0.0);
    return state;
}

std::vector<int> select_clients(int total_clients, int count, int round_index, std::uint64_t master_seed) {
    if (count < 1 || count > total_clients)
        throw ConfigError("select_clients: count must be in [1, total_clients]");
    auto eng = rng::engine(rng::derive(master_seed, kTagSelect, static_cast<std::uint64_t>(round_index)));
    return rng::sample_without_replacement(total_clients, count, eng);
}

namespace {

std::vector<std::size_t> ascending_by_client(const std::vector<ClientUpdate>& updates) {
    std::vector<std::size_t> order(updates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return updates[a].client_id < updates[b].client_id; });
    return order;
}

void check_updates(const ModelParams& global, const std::vector<ClientUpdate>& updates) {
    if (updates.empty()) throw DataError("aggregation: empty update list");
    for (const auto& u : updates) {
        if (u.params.layout != global.layout || u.params.values.size() != global.values.size())
            throw DataError("aggregation: shape mismatch for client " + std::to_string(u.client_id));
        if (u.n_k < 1) throw DataError("aggregation: client " + std::to_string(u.client_id) + " has n_k < 1");
    }
}

} // namespace

ModelParams aggregate_fedavg(const std::vector<ClientUpdate>& updates) {
    if (updates.empty()) throw DataError("aggregate_fedavg: empty update list");
    check_updates(updates.front().params, updates);
    auto order = ascending_by_client(updates);
    ModelParams out = ModelParams::zeros(updates.front().params.layout);
    double n = 0.0;
    for (std::size_t idx : order) n += static_cast<double>(updates[idx].n_k);
    for (std::size_t idx : order) {
        const auto& u = updates[idx];
        const double w = static_cast<double>(u.n_k);
        for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += w * u.params.values[i];
    }
    for (double& v : out.values) v /= n;
    return out;
}

std::vector<double> aggregate_delta(const ModelParams& global, const std::vector<ClientUpdate>& updates) {
    check_updates(global, updates);
    auto order = ascending_by_client(updates);
    double n = 0.0;
    for (std::size_t idx : order) n += static_cast<double>(updates[idx].n_k);
    std::vector<double> delta(global.values.size(), 0.0);
    for (std::size_t idx : order) {
        const auto& u = updates[idx];
        const double w = static_cast<double>(u.n_k) / n;
        for (std::size_t i = 0; i < delta.size(); ++i)
            delta[i] += w * (global.values[i] - u.params.values[i]);
    }
    return delta;
}

void server_update_fedavg(ServerState& state, const std::vector<ClientUpdate>& updates) {
    check_updates(state.global, updates);
    state.global = aggregate_fedavg(updates);
}

void server_update_fedavgm(ServerState& state, const std::vector<ClientUpdate>& updates, double beta) {
    auto delta = aggregate_delta(state.global, updates);
    for (std::size_t i = 0; i < delta.size(); ++i) {
        state.momentum[i] = beta * state.momentum[i] + delta[i];
        state.global.values[i] -= state.momentum[i];
    }
}

void server_update_fedadam(ServerState& state, const std::vector<ClientUpdate>& updates,
                           const AggregatorSpec& spec) {
    auto delta = aggregate_delta(state.global, updates);
    for (std::size_t i = 0; i < delta.size(); ++i) {
        state.adam_m[i] = spec.beta1 * state.adam_m[i] + (1.0 - spec.beta1) * delta[i];
        state.adam_v[i] = spec.beta2 * state.adam_v[i] + (1.0 - spec.beta2) * delta[i] * delta[i];
        state.global.values[i] -= spec.eta * state.adam_m[i] / (std::sqrt(state.adam_v[i]) + spec.epsilon);
    }
}

void apply_aggregator(ServerState& state, const std::vector<ClientUpdate>& updates, const AggregatorSpec& spec) {
    switch (spec.kind) {
    case Aggregator::FedAvg:
        server_update_fedavg(state, updates);
        return;
    case Aggregator::FedAvgM:
        server_update_fedavgm(state, updates, spec.beta);
        return;
    case Aggregator::FedAdam:
        server_update_fedadam(state, updates, spec);
        return;
    }
    throw ConfigError("aggregator: unknown kind");
}

namespace {

struct ScenePartial {
    TripletPrediction prediction;
    double loss_sum = 0.0;
    long long examples = 0;
    long long acc_hits = 0;
};

// PredCls-style candidates: every unique gt (subject, object) pair scored
// against every predicate class.
ScenePartial score_scene(const ModelParams& params, const TestScene& scene, const std::array<int, 3>& dims) {
    ScenePartial part;
    part.prediction.scene_id = scene.scene_id;
    std::set<std::pair<int, int>> pairs;
    for (const auto& t : scene.gt) pairs.emplace(t[0], t[1]);

    std::vector<ScoredTriplet> candidates;
    candidates.reserve(pairs.size() * static_cast<std::size_t>(dims[2]));
    std::map<std::pair<int, int>, std::vector<double>> pair_probs;
    for (const auto& [s, o] : pairs) {
        auto feature = featurize({s, o, 0}, dims).feature;
        auto probs = softmax_probs(params, feature);
        for (int c = 0; c < dims[2]; ++c) candidates.push_back({{s, o, c}, probs[c]});
        pair_probs.emplace(std::make_pair(s, o), std::move(probs));
    }
    rank_predictions(candidates, 100);
    part.prediction.ranked = std::move(candidates);

    for (const auto& t : scene.gt) {
        const auto& probs = pair_probs.at({t[0], t[1]});
        part.loss_sum += -std::log(std::max(probs[t[2]], 1e-300));
        part.examples++;
        int argmax = 0;
        for (int c = 1; c < dims[2]; ++c)
            if (probs[c] > probs[argmax]) argmax = c;
        if (argmax == t[2]) part.acc_hits++;
    }
    return part;
}

} // namespace

MetricRecord evaluate(const ModelParams& params, const std::vector<TestScene>& scenes,
                      const std::array<int, 3>& dims, bool use_parallel) {
    if (scenes.empty()) throw DataError("evaluate: no test scenes");
    const int n = static_cast<int>(scenes.size());
    std::vector<ScenePartial> partials(n);
    if (use_parallel) {
#pragma omp parallel for schedule(static) num_threads(parallel::worker_count())
        for (int i = 0; i < n; ++i) partials[i] = score_scene(params, scenes[i], dims);
    } else {
        for (int i = 0; i < n; ++i) partials[i] = score_scene(params, scenes[i], dims);
    }

    // Fixed-order reduction keeps the result identical across thread counts.
    MetricRecord record;
    double loss_sum = 0.0;
    long long examples = 0, acc_hits = 0;
    std::vector<TripletPrediction> preds;
    preds.reserve(n);
    for (int i = 0; i < n; ++i) {
        loss_sum += partials[i].loss_sum;
        examples += partials[i].examples;
        acc_hits += partials[i].acc_hits;
        preds.push_back(std::move(partials[i].prediction));
    }
    if (examples == 0) throw DataError("evaluate: test scenes carry no relations");
    record.loss = loss_sum / static_cast<double>(examples);
    record.acc = static_cast<double>(acc_hits) / static_cast<double>(examples);
    record.r20 = recall_at_k(scenes, preds, 20);
    record.r50 = recall_at_k(scenes, preds, 50);
    record.r100 = recall_at_k(scenes, preds, 100);
    record.mr20 = mean_recall_at_k(scenes, preds, 20, dims[2]);
    record.mr50 = mean_recall_at_k(scenes, preds, 50, dims[2]);
    record.mr100 = mean_recall_at_k(scenes, preds, 100, dims[2]);
    return record;
}

std::uint64_t client_round_seed(std::uint64_t master_seed, int client_id, int round_index) {
    return rng::derive(master_seed, kTagTrain, static_cast<std::uint64_t>(client_id),
                       static_cast<std::uint64_t>(round_index));
}

std::optional<MetricRecord> run_round(ServerState& state, const SimulationBundle& bundle, int round_index) {
    const auto& cfg = bundle.round_cfg;
    auto selected = select_clients(cfg.total_clients, cfg.clients_per_round, round_index, cfg.master_seed);

    std::vector<int> active;
    active.reserve(selected.size());
    for (int id : selected) {
        if (id >= static_cast<int>(bundle.client_data.size()) || bundle.client_data[id].empty()) {
            if (cfg.strict_empty_clients)
                throw ConfigError("run_round: client " + std::to_string(id) + " has no data (round " +
                                  std::to_string(round_index) + ")");
            std::fprintf(stderr, "warning: skipping client %d with no data in round %d\n", id, round_index);
            continue;
        }
        active.push_back(id);
    }
    if (active.empty())
        throw DataError("run_round: no selected client has data in round " + std::to_string(round_index));

    const int m = static_cast<int>(active.size());
    std::vector<ClientUpdate> updates(m);
    const ModelParams& global = state.global;
    if (bundle.use_parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(parallel::worker_count())
        for (int i = 0; i < m; ++i) {
            const int id = active[i];
            std::uint64_t seed = client_round_seed(cfg.master_seed, id, round_index);
            updates[i] = {id, static_cast<long long>(bundle.client_data[id].size()),
                          local_train(global, bundle.client_data[id], bundle.local_cfg, seed)};
        }
    } else {
        for (int i = 0; i < m; ++i) {
            const int id = active[i];
            std::uint64_t seed = client_round_seed(cfg.master_seed, id, round_index);
            updates[i] = {id, static_cast<long long>(bundle.client_data[id].size()),
                          local_train(global, bundle.client_data[id], bundle.local_cfg, seed)};
        }
    }
    apply_aggregator(state, updates, bundle.aggregator);
    state.round = round_index;

    if (round_index % cfg.eval_every != 0 && round_index != cfg.total_rounds) return std::nullopt;
    MetricRecord record = evaluate(state.global, bundle.test_scenes, bundle.dims, bundle.use_parallel);
    record.round = round_index;
    return record;
}

RoundHistory run_simulation(const SimulationBundle& bundle, ServerState* final_state) {
    bundle.round_cfg.validate();
    bundle.aggregator.validate();
    bundle.local_cfg.validate();
    if (static_cast<int>(bundle.client_data.size()) != bundle.round_cfg.total_clients)
        throw ConfigError("simulation: client_data size " + std::to_string(bundle.client_data.size()) +
                          " does not match total_clients " + std::to_string(bundle.round_cfg.total_clients));
    if (bundle.test_scenes.empty()) throw ConfigError("simulation: empty test set");

    ModelLayout layout{bundle.dims[2], bundle.dims[0] + bundle.dims[1]};
    ServerState state = ServerState::init(layout);
    RoundHistory history;
    for (int r = 1; r <= bundle.round_cfg.total_rounds; ++r) {
        auto start = std::chrono::steady_clock::now();
        auto record = run_round(state, bundle, r);
        if (!record) continue;
        record->wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        history.push_back(*record);
    }
    if (!history.empty()) history.back().final_round = true;
    if (final_state) *final_state = std::move(state);
    return history;
}

} // namespace fedsem
