#include "fedsem/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <tuple>
#include <unordered_map>

#include "fedsem/errors.hpp"
#include "fedsem/rng.hpp"

namespace fedsem {

namespace {

// Sub-stream tags 1/2/4/5 are taken by config seed derivation in io.cpp.
constexpr std::uint64_t kTagBalance = 3;
constexpr std::uint64_t kTagSplit = 6;

struct LoadedDataset {
    std::vector<AnnotationRecord> records;
    CategoryMap map; // valid in relation mode only
    bool relation_mode = true;
};

LoadedDataset load_dataset(const ExperimentConfig& cfg) {
    LoadedDataset data;
    if (cfg.dataset.generator) {
        data.records = generate(*cfg.dataset.generator).first;
        data.map = CategoryMap::identity(cfg.dataset.generator->dims);
        data.relation_mode = true;
        return data;
    }
    data.records = load_annotations(cfg.dataset.annotations_path);
    if (data.records.empty()) throw DataError(cfg.dataset.annotations_path + ": no records");
    data.relation_mode = data.records.front().relation_mode();
    for (const auto& r : data.records)
        if (r.relation_mode() != data.relation_mode)
            throw DataError(cfg.dataset.annotations_path + ": mixed relation/attribute records");
    if (data.relation_mode) {
        if (cfg.dataset.category_map_path.empty())
            throw ConfigError("config: dataset.category_map: required for relation annotations");
        data.map = load_category_map(cfg.dataset.category_map_path);
    }
    return data;
}

std::vector<CategoryTensor> build_tensors(const LoadedDataset& data, const ExperimentConfig& cfg) {
    std::vector<CategoryTensor> tensors;
    tensors.reserve(data.records.size());
    for (const auto& r : data.records)
        tensors.push_back(data.relation_mode ? build_category_tensor(r, data.map)
                                             : build_attribute_tensor(r));
    if (cfg.clustering.normalize)
        for (auto& t : tensors) t = l1_normalized(t);
    return tensors;
}

// Stratified holdout by assigned cluster; returns held-out ids and shrinks `working`.
std::vector<std::string> split_holdout(ClusterAssignment& working, double fraction, std::uint64_t seed) {
    std::vector<std::vector<std::string>> members(working.n_clusters);
    for (const auto& [id, cluster] : working.labels) members[cluster].push_back(id);
    std::vector<std::string> holdout;
    for (int c = 0; c < working.n_clusters; ++c) {
        auto eng = rng::engine(rng::derive(seed, kTagSplit, static_cast<std::uint64_t>(c)));
        std::shuffle(members[c].begin(), members[c].end(), eng);
        auto take = static_cast<std::size_t>(
            std::llround(fraction * static_cast<double>(members[c].size())));
        for (std::size_t j = 0; j < take && j < members[c].size(); ++j) {
            holdout.push_back(members[c][j]);
            working.labels.erase(members[c][j]);
        }
    }
    if (holdout.empty() || working.labels.empty())
        throw ConfigError("config: dataset.holdout_fraction: split leaves an empty side");
    std::sort(holdout.begin(), holdout.end());
    return holdout;
}

} // namespace

PipelineResult run_cluster_stage(const ExperimentConfig& cfg) {
    auto data = load_dataset(cfg);
    auto tensors = build_tensors(data, cfg);

    PipelineResult result;
    result.relation_mode = data.relation_mode;
    result.map = data.map;

    std::vector<std::string> ids;
    ids.reserve(data.records.size());
    for (const auto& r : data.records) ids.push_back(r.sample_id);

    KMeansOptions opts;
    opts.n_clusters = cfg.clustering.n_clusters;
    opts.seed = cfg.clustering.seed;
    opts.max_iters = cfg.clustering.max_iters;
    opts.tol = cfg.clustering.tol;
    opts.use_parallel = cfg.use_parallel;
    std::tie(result.model, result.assignment) = kmeans_fit(ids, tensors, opts);
    result.working = result.assignment;
    return result;
}

PipelineResult run_partition_stage(const ExperimentConfig& cfg) {
    if (!cfg.partition) throw ConfigError("config: partition: section required for this command");
    PipelineResult result = run_cluster_stage(cfg);
    if (cfg.balance) result.working = balance_clusters(result.working, rng::derive(cfg.seed, kTagBalance));
    result.plan = make_partition(*cfg.partition, result.working);
    result.heterogeneity = heterogeneity_report(result.plan, result.assignment);
    return result;
}

PipelineResult run_simulate_stage(const ExperimentConfig& cfg) {
    if (!cfg.partition)
        throw ConfigError("config: partition: simulate needs a partition section (run `partition` "
                          "standalone to inspect plans)");
    auto data = load_dataset(cfg);
    if (!data.relation_mode)
        throw ConfigError("config: dataset: simulate requires relation-mode annotations (the surrogate "
                          "trainer is a predicate classifier)");
    auto tensors = build_tensors(data, cfg);

    PipelineResult result;
    result.relation_mode = true;
    result.map = data.map;

    std::vector<std::string> ids;
    ids.reserve(data.records.size());
    for (const auto& r : data.records) ids.push_back(r.sample_id);

    KMeansOptions opts;
    opts.n_clusters = cfg.clustering.n_clusters;
    opts.seed = cfg.clustering.seed;
    opts.max_iters = cfg.clustering.max_iters;
    opts.tol = cfg.clustering.tol;
    opts.use_parallel = cfg.use_parallel;
    std::tie(result.model, result.assignment) = kmeans_fit(ids, tensors, opts);

    result.working = result.assignment;
    auto holdout = split_holdout(result.working, cfg.dataset.holdout_fraction, cfg.seed);
    if (cfg.balance) result.working = balance_clusters(result.working, rng::derive(cfg.seed, kTagBalance));
    result.plan = make_partition(*cfg.partition, result.working);
    result.heterogeneity = heterogeneity_report(result.plan, result.assignment);

    std::unordered_map<std::string, const AnnotationRecord*> by_id;
    by_id.reserve(data.records.size());
    for (const auto& r : data.records) by_id.emplace(r.sample_id, &r);

    SimulationBundle bundle;
    bundle.dims = data.map.dims;
    bundle.round_cfg = cfg.round;
    bundle.aggregator = cfg.aggregator;
    bundle.local_cfg = cfg.local;
    bundle.use_parallel = cfg.use_parallel;
    if (static_cast<int>(result.plan.clients.size()) != cfg.round.total_clients)
        throw ConfigError("config: round.total_clients (" + std::to_string(cfg.round.total_clients) +
                          ") must match partition.n_clients (" + std::to_string(result.plan.clients.size()) +
                          ")");
    bundle.client_data.resize(result.plan.clients.size());
    for (std::size_t u = 0; u < result.plan.clients.size(); ++u) {
        for (const auto& id : result.plan.clients[u]) {
            const auto& record = *by_id.at(id);
            for (const auto& rel : record.relations)
                bundle.client_data[u].push_back(featurize(data.map.map_triplet(rel), data.map.dims));
        }
    }
    bundle.test_scenes.reserve(holdout.size());
    for (const auto& id : holdout) {
        const auto& record = *by_id.at(id);
        TestScene scene;
        scene.scene_id = id;
        scene.gt.reserve(record.relations.size());
        for (const auto& rel : record.relations) scene.gt.push_back(data.map.map_triplet(rel));
        bundle.test_scenes.push_back(std::move(scene));
    }

    ServerState final_state;
    result.history = run_simulation(bundle, &final_state);
    result.final_params = std::move(final_state.global);
    return result;
}

void write_artifacts(const ExperimentConfig& cfg, const PipelineResult& result, bool include_timings) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    auto path = [&](const char* name) { return (fs::path(cfg.output_dir) / name).string(); };

    std::ofstream(path("config.json"), std::ios::binary | std::ios::trunc) << dump_experiment_config(cfg);
    if (result.model.n_clusters > 0) save_assignment(path("assignment.jsonl"), result.assignment);
    if (!result.plan.clients.empty()) {
        save_plan(path("plan.json"), result.plan);
        save_heterogeneity_csv(path("heterogeneity.csv"), result.heterogeneity);
    }
    if (!result.history.empty()) {
        save_history_jsonl(path("history.jsonl"), result.history, include_timings);
        save_history_csv(path("history.csv"), result.history);
        save_params(path("params.bin"), result.final_params);
    }
}

} // namespace fedsem
