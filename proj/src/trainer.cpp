#include "fedsem/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedsem/errors.hpp"
#include "fedsem/rng.hpp"

namespace fedsem {

ModelParams ModelParams::zeros(ModelLayout layout) {
    ModelParams params;
    params.layout = layout;
    params.values.assign(layout.size(), 0.0);
    return params;
}

void LocalTrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("local: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("local: batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("local: learning_rate must be > 0");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("local: momentum must be in [0, 1)");
    if (weight_decay < 0.0) throw ConfigError("local: weight_decay must be >= 0");
    if (!(grad_clip_norm > 0.0)) throw ConfigError("local: grad_clip_norm must be > 0");
}

RelationExample featurize(const Triplet& relation, const std::array<int, 3>& dims) {
    const auto [s, o, p] = relation;
    if (s < 0 || s >= dims[0] || o < 0 || o >= dims[1] || p < 0 || p >= dims[2])
        throw DataError("featurize: triplet (" + std::to_string(s) + ", " + std::to_string(o) + ", " +
                        std::to_string(p) + ") out of range");
    RelationExample ex;
    ex.feature.assign(dims[0] + dims[1], 0.0);
    ex.feature[s] = 1.0;
    ex.feature[dims[0] + o] = 1.0;
    ex.label = p;
    return ex;
}

namespace {

// logits[c] = b_c + sum_f W[c,f] x_f
void compute_logits(const ModelParams& params, const std::vector<double>& feature, std::vector<double>& logits) {
    const auto& layout = params.layout;
    logits.resize(layout.num_classes);
    for (int c = 0; c < layout.num_classes; ++c) {
        double acc = params.values[layout.bias_index(c)];
        const double* row = params.values.data() + layout.weight_index(c, 0);
        for (int f = 0; f < layout.feature_dim; ++f) acc += row[f] * feature[f];
        logits[c] = acc;
    }
}

double log_sum_exp(const std::vector<double>& logits) {
    double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double l : logits) sum += std::exp(l - m);
    return m + std::log(sum);
}

} // namespace

std::vector<double> softmax_probs(const ModelParams& params, const std::vector<double>& feature) {
    if (static_cast<int>(feature.size()) != params.layout.feature_dim)
        throw DataError("softmax_probs: feature dimension mismatch");
    std::vector<double> logits;
    compute_logits(params, feature, logits);
    double lse = log_sum_exp(logits);
    for (double& l : logits) l = std::exp(l - lse);
    return logits;
}

std::pair<double, std::vector<double>> loss_and_grad(const ModelParams& params,
                                                     const std::vector<RelationExample>& batch) {
    if (batch.empty()) throw DataError("loss_and_grad: empty batch");
    const auto& layout = params.layout;
    std::vector<double> grad(layout.size(), 0.0);
    std::vector<double> logits;
    double loss = 0.0;
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    for (const auto& ex : batch) {
        if (static_cast<int>(ex.feature.size()) != layout.feature_dim)
            throw DataError("loss_and_grad: feature dimension mismatch");
        if (ex.label < 0 || ex.label >= layout.num_classes)
            throw DataError("loss_and_grad: label out of range");
        compute_logits(params, ex.feature, logits);
        double lse = log_sum_exp(logits);
        loss += (lse - logits[ex.label]) * inv_batch;
        for (int c = 0; c < layout.num_classes; ++c) {
            double g = std::exp(logits[c] - lse) - (c == ex.label ? 1.0 : 0.0);
            g *= inv_batch;
            double* row = grad.data() + layout.weight_index(c, 0);
            for (int f = 0; f < layout.feature_dim; ++f) row[f] += g * ex.feature[f];
            grad[layout.bias_index(c)] += g;
        }
    }
    return {loss, std::move(grad)};
}

void sgd_step(ModelParams& params, std::vector<double> grad, std::vector<double>& velocity,
              const LocalTrainConfig& cfg) {
    if (grad.size() != params.values.size() || velocity.size() != params.values.size())
        throw DataError("sgd_step: shape mismatch");
    for (double g : grad)
        if (!std::isfinite(g)) throw TrainingError("sgd_step: non-finite gradient");
    auto apply_decay = [&] {
        if (cfg.weight_decay != 0.0)
            for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += cfg.weight_decay * params.values[i];
    };
    if (cfg.decay_before_clip) apply_decay();
    double norm = std::sqrt(std::inner_product(grad.begin(), grad.end(), grad.begin(), 0.0));
    if (std::isfinite(cfg.grad_clip_norm) && norm > cfg.grad_clip_norm) {
        double scale = cfg.grad_clip_norm / norm;
        for (double& g : grad) g *= scale;
    }
    if (!cfg.decay_before_clip) apply_decay();
    for (std::size_t i = 0; i < grad.size(); ++i) {
        velocity[i] = cfg.momentum * velocity[i] + grad[i];
        params.values[i] -= cfg.learning_rate * velocity[i];
    }
}

ModelParams local_train(const ModelParams& params, const std::vector<RelationExample>& data,
                        const LocalTrainConfig& cfg, std::uint64_t seed) {
    if (data.empty()) throw DataError("local_train: empty dataset");
    ModelParams out = params;
    std::vector<double> velocity(params.values.size(), 0.0);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto eng = rng::engine(seed);
    std::vector<RelationExample> batch;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), eng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::size_t end = std::min(order.size(), start + cfg.batch_size);
            batch.assign(end - start, RelationExample{});
            for (std::size_t i = start; i < end; ++i) batch[i - start] = data[order[i]];
            auto [loss, grad] = loss_and_grad(out, batch);
            (void)loss;
            sgd_step(out, std::move(grad), velocity, cfg);
        }
    }
    return out;
}

} // namespace fedsem
