#pragma once

#include <cstdint>
#include <vector>

#include "fmce/nn.hpp"

namespace fmce {

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    float learning_rate = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float epsilon = 1e-8f;
};

struct OptimizerState {
    OptimizerConfig config;
    int64_t step_count = 0;
    // adam first/second moments, aligned with model.layers (empty for sgd)
    std::vector<Tensor4> m_weight, v_weight, m_bias, v_bias;
};

OptimizerState make_optimizer(const OptimizerConfig& config, const ModelGraph& model);

// sgd: x -= lr * g. adam: bias-corrected moment update.
void optimizer_step(OptimizerState& state, ModelGraph& model, const Gradients& grads);

const char* to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(const std::string& name);

}  // namespace fmce
