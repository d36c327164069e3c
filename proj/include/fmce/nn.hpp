#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fmce/tensor.hpp"

namespace fmce {

enum class LayerKind : uint8_t {
    conv3x3 = 1,
    maxpool2x2 = 2,
    relu = 3,
    global_avg_pool = 4,
    fully_connected = 5,
    softmax = 6,
};

const char* to_string(LayerKind kind);

struct LayerSpec {
    LayerKind kind;
    int in_channels = 0, out_channels = 0;  // conv3x3
    int in_features = 0, out_features = 0;  // fully_connected
    int padding = 1;                        // conv3x3

    static LayerSpec conv(int in_c, int out_c, int padding = 1);
    static LayerSpec maxpool();
    static LayerSpec relu();
    static LayerSpec gap();
    static LayerSpec fc(int in_f, int out_f);
    static LayerSpec softmax();

    bool has_params() const {
        return kind == LayerKind::conv3x3 || kind == LayerKind::fully_connected;
    }
};

struct Layer {
    LayerSpec spec;
    Tensor4 weight;  // conv: (out_c, in_c, 3, 3); fc: (out_f, in_f, 1, 1)
    Tensor4 bias;    // (out_c|out_f, 1, 1, 1)
};

// A straight-line stack of layers. Parameters are initialized as a pure
// function of rng_seed: weights fan-in-scaled uniform, biases zero.
struct ModelGraph {
    std::vector<Layer> layers;
    Shape3 input_shape;
    std::vector<Shape3> output_shapes;  // per layer
    uint64_t rng_seed = 0;

    Shape3 shape_after(int layer_count) const {
        return layer_count == 0 ? input_shape
                                : output_shapes[static_cast<size_t>(layer_count) - 1];
    }
};

// Validates shape compatibility across the stack before any allocation;
// throws std::invalid_argument naming the offending layer.
ModelGraph build_model(Shape3 input_shape, const std::vector<LayerSpec>& specs,
                       uint64_t rng_seed);

Shape3 infer_output_shape(const LayerSpec& spec, Shape3 in, int layer_index);

// Forward activations plus the argmax bookkeeping maxpool backward needs.
// acts[0] is the input of layer first_layer; acts[i - first_layer + 1] the
// output of layer i.
struct ActivationCache {
    int first_layer = 0;
    std::vector<Tensor4> acts;
    std::vector<std::vector<uint32_t>> pool_argmax;  // indexed by layer; empty unless maxpool
};

// Applies layers [first_layer, last_layer) to `input` (which must match
// the graph's shape at first_layer). cache may be null when no backward
// pass will follow.
Tensor4 forward_range(const ModelGraph& model, const Tensor4& input, int first_layer,
                      int last_layer, ActivationCache* cache);

Tensor4 forward(const ModelGraph& model, const Tensor4& input, ActivationCache* cache = nullptr);

struct Gradients {
    std::vector<Tensor4> weight;  // aligned with model.layers; empty where no params
    std::vector<Tensor4> bias;
};

Gradients make_zero_gradients(const ModelGraph& model);

// Backpropagates `upstream` (gradient at the output of layer
// last_layer-1) down to layer first_layer. Parameter gradients are
// accumulated into `grads` when non-null; returns the gradient with
// respect to acts[first_layer]. Batch reductions are chunked in fixed
// sample order, so results do not depend on the worker count.
Tensor4 backward_range(const ModelGraph& model, const ActivationCache& cache,
                       const Tensor4& upstream, int first_layer, int last_layer,
                       Gradients* grads);

Tensor4 backward(const ModelGraph& model, const ActivationCache& cache,
                 const Tensor4& upstream, Gradients* grads);

// Softmax + mean negative log-likelihood over the batch, with the usual
// fused gradient (softmax - onehot)/N with respect to the logits.
struct LossAndGrad {
    double loss = 0.0;
    Tensor4 logit_grad;
};

LossAndGrad softmax_cross_entropy(const Tensor4& logits, std::span<const int> labels);

// Row argmax over channels of an (N, C, 1, 1) tensor; first index wins ties.
std::vector<int> argmax_rows(const Tensor4& logits);

}  // namespace fmce
