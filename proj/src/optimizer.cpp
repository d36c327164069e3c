#include "fmce/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fmce {

OptimizerState make_optimizer(const OptimizerConfig& config, const ModelGraph& model) {
    if (!(config.learning_rate > 0.0f)) {
        throw std::invalid_argument("learning rate must be > 0");
    }
    OptimizerState state;
    state.config = config;
    if (config.kind == OptimizerKind::adam) {
        state.m_weight.resize(model.layers.size());
        state.v_weight.resize(model.layers.size());
        state.m_bias.resize(model.layers.size());
        state.v_bias.resize(model.layers.size());
        for (size_t i = 0; i < model.layers.size(); ++i) {
            if (model.layers[i].spec.has_params()) {
                state.m_weight[i] = Tensor4::zeros_like(model.layers[i].weight);
                state.v_weight[i] = Tensor4::zeros_like(model.layers[i].weight);
                state.m_bias[i] = Tensor4::zeros_like(model.layers[i].bias);
                state.v_bias[i] = Tensor4::zeros_like(model.layers[i].bias);
            }
        }
    }
    return state;
}

namespace {

void sgd_update(Tensor4& param, const Tensor4& grad, float lr) {
    for (size_t i = 0; i < param.size(); ++i) param.v[i] -= lr * grad.v[i];
}

void adam_update(Tensor4& param, const Tensor4& grad, Tensor4& m, Tensor4& v,
                 const OptimizerConfig& cfg, float m_correction, float v_correction) {
    for (size_t i = 0; i < param.size(); ++i) {
        const float g = grad.v[i];
        m.v[i] = cfg.beta1 * m.v[i] + (1.0f - cfg.beta1) * g;
        v.v[i] = cfg.beta2 * v.v[i] + (1.0f - cfg.beta2) * g * g;
        const float m_hat = m.v[i] * m_correction;
        const float v_hat = v.v[i] * v_correction;
        param.v[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

}  // namespace

void optimizer_step(OptimizerState& state, ModelGraph& model, const Gradients& grads) {
    if (grads.weight.size() != model.layers.size()) {
        throw std::invalid_argument("gradient/layer count mismatch");
    }
    state.step_count++;
    float m_corr = 1.0f, v_corr = 1.0f;
    if (state.config.kind == OptimizerKind::adam) {
        const double t = static_cast<double>(state.step_count);
        m_corr = static_cast<float>(1.0 / (1.0 - std::pow(state.config.beta1, t)));
        v_corr = static_cast<float>(1.0 / (1.0 - std::pow(state.config.beta2, t)));
    }
    for (size_t i = 0; i < model.layers.size(); ++i) {
        Layer& layer = model.layers[i];
        if (!layer.spec.has_params()) continue;
        if (!grads.weight[i].same_shape(layer.weight) ||
            !grads.bias[i].same_shape(layer.bias)) {
            throw std::invalid_argument("gradient shape mismatch at layer " + std::to_string(i));
        }
        if (state.config.kind == OptimizerKind::sgd) {
            sgd_update(layer.weight, grads.weight[i], state.config.learning_rate);
            sgd_update(layer.bias, grads.bias[i], state.config.learning_rate);
        } else {
            adam_update(layer.weight, grads.weight[i], state.m_weight[i], state.v_weight[i],
                        state.config, m_corr, v_corr);
            adam_update(layer.bias, grads.bias[i], state.m_bias[i], state.v_bias[i],
                        state.config, m_corr, v_corr);
        }
    }
}

const char* to_string(OptimizerKind kind) {
    return kind == OptimizerKind::sgd ? "sgd" : "adam";
}

OptimizerKind optimizer_kind_from_string(const std::string& name) {
    if (name == "sgd") return OptimizerKind::sgd;
    if (name == "adam") return OptimizerKind::adam;
    throw std::invalid_argument("unknown optimizer: " + name);
}

}  // namespace fmce
