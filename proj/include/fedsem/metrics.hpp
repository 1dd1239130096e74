#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fedsem/semantics.hpp"

namespace fedsem {

struct TestScene {
    std::string scene_id;
    std::vector<Triplet> gt; // ground-truth super-class triplets
};

struct ScoredTriplet {
    Triplet triplet;
    double score = 0.0;
};

struct TripletPrediction {
    std::string scene_id;
    std::vector<ScoredTriplet> ranked; // descending score; ties broken by triplet order
};

// Stable sort by (score desc, triplet lexicographic) then cut at rank k.
void rank_predictions(std::vector<ScoredTriplet>& candidates, int k);

// Single-scene recall; nullopt when the scene has no ground truth.
std::optional<double> recall_at_k(const std::vector<Triplet>& gt, const TripletPrediction& pred, int k);

// Dataset-level micro recall: total hits / total distinct gt triplets.
double recall_at_k(const std::vector<TestScene>& scenes, const std::vector<TripletPrediction>& preds, int k);

// Macro recall over predicate categories that appear in the ground truth.
double mean_recall_at_k(const std::vector<TestScene>& scenes, const std::vector<TripletPrediction>& preds,
                        int k, int num_predicates);

double accuracy(const std::vector<int>& gt, const std::vector<int>& predicted);

struct MetricRecord {
    int round = 0;
    double loss = 0.0;
    double acc = 0.0;
    double r20 = 0.0, r50 = 0.0, r100 = 0.0;
    double mr20 = 0.0, mr50 = 0.0, mr100 = 0.0;
    bool final_round = false;
    double wall_ms = 0.0; // populated only when timing is requested

    double metric(const std::string& name) const; // throws ConfigError on unknown name
};

using RoundHistory = std::vector<MetricRecord>;

// Earliest record whose metric >= target; nullopt when never reached.
std::optional<int> rounds_to_target(const RoundHistory& history, const std::string& metric, double target);

long long communication_cost(long long param_count, long long rounds);

// cost / baseline_cost, e.g. 63/64 -> 0.984375.
double relative_cost(long long cost, long long baseline_cost);

} // namespace fedsem
