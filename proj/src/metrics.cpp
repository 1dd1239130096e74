#include "fedsem/metrics.hpp"

#include <algorithm>
#include <set>

#include "fedsem/errors.hpp"

namespace fedsem {

void rank_predictions(std::vector<ScoredTriplet>& candidates, int k) {
    std::stable_sort(candidates.begin(), candidates.end(), [](const ScoredTriplet& a, const ScoredTriplet& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.triplet < b.triplet;
    });
    if (k >= 0 && candidates.size() > static_cast<std::size_t>(k)) candidates.resize(k);
}

namespace {

std::size_t hits_in_top_k(const std::set<Triplet>& gt, const TripletPrediction& pred, int k) {
    std::size_t limit = std::min<std::size_t>(pred.ranked.size(), static_cast<std::size_t>(k));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < limit; ++i)
        if (gt.count(pred.ranked[i].triplet)) hits++;
    return hits;
}

const TripletPrediction* find_prediction(const std::vector<TripletPrediction>& preds, const std::string& id) {
    for (const auto& p : preds)
        if (p.scene_id == id) return &p;
    return nullptr;
}

} // namespace

std::optional<double> recall_at_k(const std::vector<Triplet>& gt, const TripletPrediction& pred, int k) {
    if (k < 1) throw ConfigError("recall_at_k: k must be >= 1");
    std::set<Triplet> gt_set(gt.begin(), gt.end());
    if (gt_set.empty()) return std::nullopt;
    return static_cast<double>(hits_in_top_k(gt_set, pred, k)) / static_cast<double>(gt_set.size());
}

double recall_at_k(const std::vector<TestScene>& scenes, const std::vector<TripletPrediction>& preds, int k) {
    if (k < 1) throw ConfigError("recall_at_k: k must be >= 1");
    static const TripletPrediction empty;
    std::size_t hits = 0, total = 0;
    for (const auto& scene : scenes) {
        std::set<Triplet> gt_set(scene.gt.begin(), scene.gt.end());
        if (gt_set.empty()) continue;
        const TripletPrediction* pred = find_prediction(preds, scene.scene_id);
        hits += hits_in_top_k(gt_set, pred ? *pred : empty, k);
        total += gt_set.size();
    }
    if (total == 0) throw DataError("recall_at_k: no ground-truth triplets");
    return static_cast<double>(hits) / static_cast<double>(total);
}

double mean_recall_at_k(const std::vector<TestScene>& scenes, const std::vector<TripletPrediction>& preds,
                        int k, int num_predicates) {
    if (k < 1) throw ConfigError("mean_recall_at_k: k must be >= 1");
    if (num_predicates < 1) throw ConfigError("mean_recall_at_k: num_predicates must be >= 1");
    static const TripletPrediction empty;
    std::vector<std::size_t> hits(num_predicates, 0), total(num_predicates, 0);
    for (const auto& scene : scenes) {
        std::set<Triplet> gt_set(scene.gt.begin(), scene.gt.end());
        if (gt_set.empty()) continue;
        const TripletPrediction* pred = find_prediction(preds, scene.scene_id);
        std::size_t limit = pred ? std::min<std::size_t>(pred->ranked.size(), static_cast<std::size_t>(k)) : 0;
        std::set<Triplet> top;
        for (std::size_t i = 0; i < limit; ++i) top.insert(pred->ranked[i].triplet);
        for (const auto& t : gt_set) {
            if (t[2] < 0 || t[2] >= num_predicates)
                throw DataError("mean_recall_at_k: predicate index out of range");
            total[t[2]]++;
            if (top.count(t)) hits[t[2]]++;
        }
    }
    double sum = 0.0;
    int present = 0;
    for (int p = 0; p < num_predicates; ++p) {
        if (total[p] == 0) continue;
        sum += static_cast<double>(hits[p]) / static_cast<double>(total[p]);
        present++;
    }
    if (present == 0) throw DataError("mean_recall_at_k: no ground-truth triplets");
    return sum / static_cast<double>(present);
}

double accuracy(const std::vector<int>& gt, const std::vector<int>& predicted) {
    if (gt.empty()) throw DataError("accuracy: empty inputs");
    if (gt.size() != predicted.size()) throw DataError("accuracy: length mismatch");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < gt.size(); ++i)
        if (gt[i] == predicted[i]) hits++;
    return static_cast<double>(hits) / static_cast<double>(gt.size());
}

double MetricRecord::metric(const std::string& name) const {
    if (name == "loss") return loss;
    if (name == "acc") return acc;
    if (name == "r20") return r20;
    if (name == "r50") return r50;
    if (name == "r100") return r100;
    if (name == "mr20") return mr20;
    if (name == "mr50") return mr50;
    if (name == "mr100") return mr100;
    throw ConfigError("unknown metric name: " + name);
}

std::optional<int> rounds_to_target(const RoundHistory& history, const std::string& metric, double target) {
    for (const auto& record : history)
        if (record.metric(metric) >= target) return record.round;
    return std::nullopt;
}

long long communication_cost(long long param_count, long long rounds) {
    if (param_count < 0 || rounds < 0) throw ConfigError("communication_cost: negative input");
    return param_count * rounds;
}

double relative_cost(long long cost, long long baseline_cost) {
    if (baseline_cost <= 0) throw ConfigError("relative_cost: baseline must be positive");
    return static_cast<double>(cost) / static_cast<double>(baseline_cost);
}

} // namespace fedsem
