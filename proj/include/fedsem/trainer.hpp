#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "fedsem/semantics.hpp"

namespace fedsem {

// Linear softmax predicate classifier: logits = W x + b with
// W [num_classes x feature_dim] followed by b [num_classes], stored flat.
struct ModelLayout {
    int num_classes = 0;
    int feature_dim = 0;

    int size() const { return num_classes * (feature_dim + 1); }
    int weight_index(int c, int f) const { return c * feature_dim + f; }
    int bias_index(int c) const { return num_classes * feature_dim + c; }
    bool operator==(const ModelLayout&) const = default;
};

struct ModelParams {
    ModelLayout layout;
    std::vector<double> values;

    static ModelParams zeros(ModelLayout layout);
};

struct LocalTrainConfig {
    int epochs = 1;
    int batch_size = 16;
    double learning_rate = 0.02;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    double grad_clip_norm = 35.0;
    bool decay_before_clip = false; // sensitivity toggle; default clips the raw gradient

    void validate() const;
};

struct RelationExample {
    std::vector<double> feature; // one-hot subject ++ one-hot object
    int label = 0;               // predicate super-class
};

// Two-hot encoding of a (subject, object, predicate) triplet under dims (N1, N2, N3).
RelationExample featurize(const Triplet& relation, const std::array<int, 3>& dims);

// Mean softmax cross-entropy over the batch and its analytic gradient.
std::pair<double, std::vector<double>> loss_and_grad(const ModelParams& params,
                                                     const std::vector<RelationExample>& batch);

// Softmax class probabilities for one feature vector.
std::vector<double> softmax_probs(const ModelParams& params, const std::vector<double>& feature);

// Clip grad to L2 norm, add weight decay, momentum update, descend. In place.
void sgd_step(ModelParams& params, std::vector<double> grad, std::vector<double>& velocity,
              const LocalTrainConfig& cfg);

// One client's local pass: per-epoch shuffle, mini-batches, fresh zero velocity.
ModelParams local_train(const ModelParams& params, const std::vector<RelationExample>& data,
                        const LocalTrainConfig& cfg, std::uint64_t seed);

} // namespace fedsem
