#pragma once

#include <string>
#include <vector>

#include "fedsem/io.hpp"

namespace fedsem {

// Artifacts accumulated by the pipeline stages. Later stages extend earlier ones.
struct PipelineResult {
    bool relation_mode = true;
    CategoryMap map;                 // identity map in generator mode
    ClusterModel model;
    ClusterAssignment assignment;    // K-means labels for every clustered sample
    ClusterAssignment working;       // assignment actually partitioned (post holdout/balance)
    PartitionPlan plan;
    HeterogeneityReport heterogeneity;
    std::vector<TestScene> test_scenes;
    RoundHistory history;
    ModelParams final_params;
};

// dataset -> tensors -> kmeans_fit. Generator mode clusters the train split of
// a seeded testbed; file mode clusters every record.
PipelineResult run_cluster_stage(const ExperimentConfig& cfg);

// cluster stage + optional balancing + partition + heterogeneity report.
PipelineResult run_partition_stage(const ExperimentConfig& cfg);

// Full pipeline through run_simulation. Relation-mode data only.
PipelineResult run_simulate_stage(const ExperimentConfig& cfg);

// Writes the artifacts a stage produced into cfg.output_dir under fixed names.
void write_artifacts(const ExperimentConfig& cfg, const PipelineResult& result, bool include_timings);

} // namespace fedsem
