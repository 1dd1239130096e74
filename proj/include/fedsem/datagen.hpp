#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "fedsem/metrics.hpp"
#include "fedsem/semantics.hpp"

namespace fedsem {

struct GeneratorSpec {
    int n_true_clusters = 5;
    int samples_per_cluster = 200;
    std::array<int, 3> dims{13, 13, 7};
    int min_relations = 4;
    int max_relations = 8;        // inclusive
    double separation = 0.05;     // total Dirichlet concentration of each cluster's category
                                  // prior; smaller means more peaked, better separated clusters
    std::uint64_t seed = 0;

    void validate() const;
};

// Synthetic annotations with known cluster structure: each true cluster owns a
// Dirichlet-drawn categorical prior over flattened (s, o, p) cells, and every
// sample draws its relations from its cluster's prior.
std::pair<std::vector<AnnotationRecord>, ClusterAssignment> generate(const GeneratorSpec& spec);

struct Testbed {
    std::vector<AnnotationRecord> train;
    ClusterAssignment train_labels; // ground-truth labels of the train split
    std::vector<TestScene> test;    // held-out scenes, gt triplets in generator dims
};

// Stratified-by-true-cluster holdout split.
Testbed make_testbed(const GeneratorSpec& spec, double holdout_fraction, std::uint64_t seed);

} // namespace fedsem
