#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedsem/datagen.hpp"
#include "fedsem/flcore.hpp"
#include "fedsem/metrics.hpp"
#include "fedsem/partition.hpp"
#include "fedsem/semantics.hpp"
#include "fedsem/trainer.hpp"

namespace fedsem {

// JSON Lines annotations: {"sample_id": str, "relations": [[s,o,p],...]} or
// {"sample_id": str, "attributes": [-1/+1 ...]}.
std::vector<AnnotationRecord> load_annotations(const std::string& path);
void save_annotations(const std::string& path, const std::vector<AnnotationRecord>& records);

CategoryMap load_category_map(const std::string& path);
void save_category_map(const std::string& path, const CategoryMap& map);

// JSON Lines: {"sample_id": str, "cluster": int}.
ClusterAssignment load_assignment(const std::string& path);
void save_assignment(const std::string& path, const ClusterAssignment& assignment);

// {"spec": {...}, "clients": {"0": [ids...], ...}}.
PartitionPlan load_plan(const std::string& path);
void save_plan(const std::string& path, const PartitionPlan& plan);

RoundHistory load_history(const std::string& path);
void save_history_jsonl(const std::string& path, const RoundHistory& history, bool include_timings = false);
void save_history_csv(const std::string& path, const RoundHistory& history);

void save_heterogeneity_csv(const std::string& path, const HeterogeneityReport& report);

// JSON layout header line, then little-endian 64-bit doubles.
void save_params(const std::string& path, const ModelParams& params);
ModelParams load_params(const std::string& path);

struct DatasetConfig {
    std::optional<GeneratorSpec> generator;
    std::string annotations_path;  // file mode
    std::string category_map_path; // file mode, relation data
    double holdout_fraction = 0.2;
};

struct ClusteringConfig {
    int n_clusters = 5;
    int max_iters = 300;
    double tol = 1e-6;
    bool normalize = false; // L1-normalize tensors before K-means
    std::uint64_t seed = 0;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    DatasetConfig dataset;
    ClusteringConfig clustering;
    bool balance = true;
    std::optional<PartitionSpec> partition;
    RoundConfig round;
    AggregatorSpec aggregator;
    LocalTrainConfig local;
    bool use_parallel = true;
};

// Parses and validates; section seeds default to sub-streams of the root seed.
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config(const std::string& text, const std::string& origin);

// Effective config with resolved seeds, written as provenance next to results.
std::string dump_experiment_config(const ExperimentConfig& cfg);

} // namespace fedsem
