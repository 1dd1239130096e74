#include "fedsem/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "fedsem/errors.hpp"
#include "fedsem/rng.hpp"

namespace fedsem {

namespace {
constexpr std::uint64_t kTagCluster = 0x67656e63;
constexpr std::uint64_t kTagSplit = 0x73706c6974;

std::string sample_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "s%06d", index);
    return buf;
}

int draw_categorical(const std::vector<double>& probs, std::mt19937_64& eng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double u = unit(eng);
    double cum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        cum += probs[i];
        if (u < cum) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}
} // namespace

void GeneratorSpec::validate() const {
    if (n_true_clusters < 1) throw ConfigError("generator: n_true_clusters must be >= 1");
    if (samples_per_cluster < 1) throw ConfigError("generator: samples_per_cluster must be >= 1");
    if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1) throw ConfigError("generator: dims must be positive");
    if (min_relations < 1 || max_relations < min_relations)
        throw ConfigError("generator: relation range must satisfy 1 <= min <= max");
    if (!(separation > 0.0)) throw ConfigError("generator: separation must be > 0");
}

std::pair<std::vector<AnnotationRecord>, ClusterAssignment> generate(const GeneratorSpec& spec) {
    spec.validate();
    const std::size_t cells =
        static_cast<std::size_t>(spec.dims[0]) * spec.dims[1] * spec.dims[2];
    std::vector<AnnotationRecord> records;
    records.reserve(static_cast<std::size_t>(spec.n_true_clusters) * spec.samples_per_cluster);
    ClusterAssignment labels;
    labels.n_clusters = spec.n_true_clusters;

    // `separation` is the total Dirichlet concentration, split evenly across
    // cells so the knob's meaning does not depend on dims: small values put a
    // cluster's prior mass on a handful of cells regardless of vocabulary size.
    const std::vector<double> alpha(cells, spec.separation / static_cast<double>(cells));
    int next_id = 0;
    for (int c = 0; c < spec.n_true_clusters; ++c) {
        auto eng = rng::engine(rng::derive(spec.seed, kTagCluster, static_cast<std::uint64_t>(c)));
        std::vector<double> prior = rng::dirichlet(alpha, eng);
        std::uniform_int_distribution<int> rel_count(spec.min_relations, spec.max_relations);
        for (int j = 0; j < spec.samples_per_cluster; ++j) {
            AnnotationRecord record;
            record.sample_id = sample_name(next_id++);
            const int count = rel_count(eng);
            record.relations.reserve(count);
            for (int r = 0; r < count; ++r) {
                int cell = draw_categorical(prior, eng);
                int p = cell % spec.dims[2];
                int rest = cell / spec.dims[2];
                int o = rest % spec.dims[1];
                int s = rest / spec.dims[1];
                record.relations.push_back({s, o, p});
            }
            labels.labels.emplace(record.sample_id, c);
            records.push_back(std::move(record));
        }
    }
    return {std::move(records), std::move(labels)};
}

Testbed make_testbed(const GeneratorSpec& spec, double holdout_fraction, std::uint64_t seed) {
    if (!(holdout_fraction > 0.0) || !(holdout_fraction < 1.0))
        throw ConfigError("testbed: holdout_fraction must be in (0, 1)");
    auto [records, labels] = generate(spec);

    std::vector<std::vector<std::size_t>> by_cluster(spec.n_true_clusters);
    for (std::size_t i = 0; i < records.size(); ++i) by_cluster[labels.labels.at(records[i].sample_id)].push_back(i);

    std::vector<bool> is_test(records.size(), false);
    for (int c = 0; c < spec.n_true_clusters; ++c) {
        auto& idx = by_cluster[c];
        auto eng = rng::engine(rng::derive(seed, kTagSplit, static_cast<std::uint64_t>(c)));
        std::shuffle(idx.begin(), idx.end(), eng);
        auto take = static_cast<std::size_t>(
            std::llround(holdout_fraction * static_cast<double>(idx.size())));
        for (std::size_t j = 0; j < take && j < idx.size(); ++j) is_test[idx[j]] = true;
    }

    Testbed bed;
    bed.train_labels.n_clusters = spec.n_true_clusters;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (is_test[i]) {
            TestScene scene;
            scene.scene_id = records[i].sample_id;
            scene.gt = records[i].relations;
            bed.test.push_back(std::move(scene));
        } else {
            bed.train_labels.labels.emplace(records[i].sample_id, labels.labels.at(records[i].sample_id));
            bed.train.push_back(std::move(records[i]));
        }
    }
    if (bed.train.empty() || bed.test.empty())
        throw ConfigError("testbed: holdout_fraction " + std::to_string(holdout_fraction) +
                          " leaves an empty split");
    return bed;
}

} // namespace fedsem
