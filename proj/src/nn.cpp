#include "fmce/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fmce/parallel.hpp"
#include "fmce/rng.hpp"

namespace fmce {

namespace {
constexpr size_t kBatchChunk = 16;  // fixed; reductions run in chunk order
}

const char* to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::conv3x3: return "conv3x3";
        case LayerKind::maxpool2x2: return "maxpool2x2";
        case LayerKind::relu: return "relu";
        case LayerKind::global_avg_pool: return "global_avg_pool";
        case LayerKind::fully_connected: return "fully_connected";
        case LayerKind::softmax: return "softmax";
    }
    return "unknown";
}

LayerSpec LayerSpec::conv(int in_c, int out_c, int padding) {
    LayerSpec s{LayerKind::conv3x3};
    s.in_channels = in_c;
    s.out_channels = out_c;
    s.padding = padding;
    return s;
}
LayerSpec LayerSpec::maxpool() { return LayerSpec{LayerKind::maxpool2x2}; }
LayerSpec LayerSpec::relu() { return LayerSpec{LayerKind::relu}; }
LayerSpec LayerSpec::gap() { return LayerSpec{LayerKind::global_avg_pool}; }
LayerSpec LayerSpec::fc(int in_f, int out_f) {
    LayerSpec s{LayerKind::fully_connected};
    s.in_features = in_f;
    s.out_features = out_f;
    return s;
}
LayerSpec LayerSpec::softmax() { return LayerSpec{LayerKind::softmax}; }

Shape3 infer_output_shape(const LayerSpec& spec, Shape3 in, int layer_index) {
    const std::string where =
        "layer " + std::to_string(layer_index) + " (" + to_string(spec.kind) + ")";
    switch (spec.kind) {
        case LayerKind::conv3x3: {
            if (spec.in_channels < 1 || spec.out_channels < 1) {
                throw std::invalid_argument(where + ": channel counts must be >= 1");
            }
            if (spec.padding < 0) throw std::invalid_argument(where + ": negative padding");
            if (in.c != spec.in_channels) {
                throw std::invalid_argument(where + ": expects " +
                                            std::to_string(spec.in_channels) +
                                            " input channels, got " + std::to_string(in.c));
            }
            const int oh = in.h + 2 * spec.padding - 2;
            const int ow = in.w + 2 * spec.padding - 2;
            if (oh < 1 || ow < 1) {
                throw std::invalid_argument(where + ": spatial input " + in.str() +
                                            " too small for a 3x3 kernel");
            }
            return {spec.out_channels, oh, ow};
        }
        case LayerKind::maxpool2x2:
            if (in.h < 2 || in.w < 2) {
                throw std::invalid_argument(where + ": cannot halve spatial input " + in.str());
            }
            return {in.c, in.h / 2, in.w / 2};
        case LayerKind::relu:
            return in;
        case LayerKind::global_avg_pool:
            return {in.c, 1, 1};
        case LayerKind::fully_connected:
            if (spec.in_features < 1 || spec.out_features < 1) {
                throw std::invalid_argument(where + ": feature counts must be >= 1");
            }
            if (in.volume() != spec.in_features) {
                throw std::invalid_argument(where + ": expects " +
                                            std::to_string(spec.in_features) +
                                            " flattened inputs, got " + in.str());
            }
            return {spec.out_features, 1, 1};
        case LayerKind::softmax:
            if (in.h != 1 || in.w != 1) {
                throw std::invalid_argument(where + ": wants an (N, C, 1, 1) input, got " +
                                            in.str());
            }
            return in;
    }
    throw std::invalid_argument(where + ": unknown layer kind");
}

ModelGraph build_model(Shape3 input_shape, const std::vector<LayerSpec>& specs,
                       uint64_t rng_seed) {
    ModelGraph model;
    model.input_shape = input_shape;
    model.rng_seed = rng_seed;

    Shape3 shape = input_shape;
    for (size_t i = 0; i < specs.size(); ++i) {
        shape = infer_output_shape(specs[i], shape, static_cast<int>(i));
        model.output_shapes.push_back(shape);
    }

    // one stream for the whole stack, consumed in layer order
    Xoshiro256pp rng(rng_seed);
    auto init_uniform = [&rng](Tensor4& t, int fan_in) {
        const float bound = std::sqrt(1.0f / static_cast<float>(fan_in));
        for (float& x : t.v) x = rng.uniform_float(-bound, bound);
    };

    model.layers.reserve(specs.size());
    for (const auto& spec : specs) {
        Layer layer{spec, {}, {}};
        if (spec.kind == LayerKind::conv3x3) {
            layer.weight = Tensor4(spec.out_channels, spec.in_channels, 3, 3);
            layer.bias = Tensor4(spec.out_channels, 1, 1, 1);
            init_uniform(layer.weight, spec.in_channels * 9);
        } else if (spec.kind == LayerKind::fully_connected) {
            layer.weight = Tensor4(spec.out_features, spec.in_features, 1, 1);
            layer.bias = Tensor4(spec.out_features, 1, 1, 1);
            init_uniform(layer.weight, spec.in_features);
        }
        model.layers.push_back(std::move(layer));
    }
    return model;
}

namespace {

// conv3x3 kernels iterate tap-by-tap over shifted planes: for a fixed
// (ky, kx) the valid output rectangle is known up front, so the hot loops
// carry no bounds checks and stay contiguous in x.
struct TapRect {
    int oy0, oy1, ox0, ox1;  // half-open valid output rectangle
};

TapRect tap_rect(int ky, int kx, int pad, int in_h, int in_w, int out_h, int out_w) {
    TapRect r;
    r.oy0 = std::max(0, pad - ky);
    r.oy1 = std::min(out_h, in_h + pad - ky);
    r.ox0 = std::max(0, pad - kx);
    r.ox1 = std::min(out_w, in_w + pad - kx);
    return r;
}

void conv_forward_sample(const Tensor4& in, const Tensor4& weight, const Tensor4& bias,
                         int pad, int n, Tensor4& out) {
    const int oc_count = out.c, ic_count = in.c;
    for (int oc = 0; oc < oc_count; ++oc) {
        float* out_plane = &out.v[out.index(n, oc, 0, 0)];
        const float b = bias.v[static_cast<size_t>(oc)];
        std::fill(out_plane, out_plane + static_cast<size_t>(out.h) * out.w, b);
        for (int ic = 0; ic < ic_count; ++ic) {
            const float* in_plane = &in.v[in.index(n, ic, 0, 0)];
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const float wv = weight.at(oc, ic, ky, kx);
                    const TapRect r = tap_rect(ky, kx, pad, in.h, in.w, out.h, out.w);
                    for (int oy = r.oy0; oy < r.oy1; ++oy) {
                        const float* src =
                            in_plane + static_cast<size_t>(oy + ky - pad) * in.w + (r.ox0 + kx - pad);
                        float* dst = out_plane + static_cast<size_t>(oy) * out.w + r.ox0;
                        for (int i = 0; i < r.ox1 - r.ox0; ++i) dst[i] += wv * src[i];
                    }
                }
            }
        }
    }
}

Tensor4 conv_forward(const Tensor4& in, const Layer& layer, Shape3 out_shape) {
    Tensor4 out(in.n, out_shape.c, out_shape.h, out_shape.w);
    parallel_chunks(static_cast<size_t>(in.n), kBatchChunk,
                    [&](size_t, size_t lo, size_t hi) {
                        for (size_t n = lo; n < hi; ++n) {
                            conv_forward_sample(in, layer.weight, layer.bias,
                                                layer.spec.padding, static_cast<int>(n), out);
                        }
                    });
    return out;
}

void conv_backward_sample(const Tensor4& in, const Tensor4& grad_out, const Tensor4& weight,
                          int pad, int n, Tensor4& grad_in, Tensor4* dw, Tensor4* db) {
    const int oc_count = grad_out.c, ic_count = in.c;
    for (int oc = 0; oc < oc_count; ++oc) {
        const float* g_plane = &grad_out.v[grad_out.index(n, oc, 0, 0)];
        if (db) {
            float sum = 0.0f;
            const size_t plane = static_cast<size_t>(grad_out.h) * grad_out.w;
            for (size_t i = 0; i < plane; ++i) sum += g_plane[i];
            db->v[static_cast<size_t>(oc)] += sum;
        }
        for (int ic = 0; ic < ic_count; ++ic) {
            const float* in_plane = &in.v[in.index(n, ic, 0, 0)];
            float* gi_plane = &grad_in.v[grad_in.index(n, ic, 0, 0)];
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const TapRect r =
                        tap_rect(ky, kx, pad, in.h, in.w, grad_out.h, grad_out.w);
                    const float wv = weight.at(oc, ic, ky, kx);
                    float dw_acc = 0.0f;
                    for (int oy = r.oy0; oy < r.oy1; ++oy) {
                        const float* g_row = g_plane + static_cast<size_t>(oy) * grad_out.w + r.ox0;
                        const size_t in_off =
                            static_cast<size_t>(oy + ky - pad) * in.w + (r.ox0 + kx - pad);
                        const float* in_row = in_plane + in_off;
                        float* gi_row = gi_plane + in_off;
                        for (int i = 0; i < r.ox1 - r.ox0; ++i) {
                            gi_row[i] += wv * g_row[i];
                            dw_acc += g_row[i] * in_row[i];
                        }
                    }
                    if (dw) dw->at(oc, ic, ky, kx) += dw_acc;
                }
            }
        }
    }
}

Tensor4 conv_backward(const Tensor4& in, const Tensor4& grad_out, const Layer& layer,
                      Tensor4* dw, Tensor4* db) {
    Tensor4 grad_in = Tensor4::zeros_like(in);
    const size_t n_chunks = chunk_count(static_cast<size_t>(in.n), kBatchChunk);

    // per-chunk parameter-gradient buffers, reduced in chunk order below
    std::vector<Tensor4> dw_parts, db_parts;
    if (dw) {
        dw_parts.assign(n_chunks, Tensor4::zeros_like(layer.weight));
        db_parts.assign(n_chunks, Tensor4::zeros_like(layer.bias));
    }

    parallel_chunks(static_cast<size_t>(in.n), kBatchChunk,
                    [&](size_t chunk, size_t lo, size_t hi) {
                        Tensor4* dwp = dw ? &dw_parts[chunk] : nullptr;
                        Tensor4* dbp = dw ? &db_parts[chunk] : nullptr;
                        for (size_t n = lo; n < hi; ++n) {
                            conv_backward_sample(in, grad_out, layer.weight,
                                                 layer.spec.padding, static_cast<int>(n),
                                                 grad_in, dwp, dbp);
                        }
                    });

    if (dw) {
        for (size_t chunk = 0; chunk < n_chunks; ++chunk) {
            for (size_t i = 0; i < dw->size(); ++i) dw->v[i] += dw_parts[chunk].v[i];
            for (size_t i = 0; i < db->size(); ++i) db->v[i] += db_parts[chunk].v[i];
        }
    }
    return grad_in;
}

Tensor4 maxpool_forward(const Tensor4& in, std::vector<uint32_t>* argmax) {
    Tensor4 out(in.n, in.c, in.h / 2, in.w / 2);
    if (argmax) argmax->assign(out.size(), 0);
    for (int n = 0; n < in.n; ++n) {
        for (int c = 0; c < in.c; ++c) {
            for (int oy = 0; oy < out.h; ++oy) {
                for (int ox = 0; ox < out.w; ++ox) {
                    size_t best_idx = in.index(n, c, 2 * oy, 2 * ox);
                    float best = in.v[best_idx];
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dx = 0; dx < 2; ++dx) {
                            const size_t idx = in.index(n, c, 2 * oy + dy, 2 * ox + dx);
                            if (in.v[idx] > best) {  // ties keep the lowest flat index
                                best = in.v[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    const size_t o = out.index(n, c, oy, ox);
                    out.v[o] = best;
                    if (argmax) (*argmax)[o] = static_cast<uint32_t>(best_idx);
                }
            }
        }
    }
    return out;
}

Tensor4 maxpool_backward(const Tensor4& in, const Tensor4& grad_out,
                         const std::vector<uint32_t>& argmax) {
    Tensor4 grad_in = Tensor4::zeros_like(in);
    for (size_t o = 0; o < grad_out.size(); ++o) {
        grad_in.v[argmax[o]] += grad_out.v[o];
    }
    return grad_in;
}

Tensor4 relu_forward(const Tensor4& in) {
    Tensor4 out = in;
    for (float& x : out.v) x = x > 0.0f ? x : 0.0f;
    return out;
}

Tensor4 relu_backward(const Tensor4& in, const Tensor4& grad_out) {
    Tensor4 grad_in = Tensor4::zeros_like(in);
    for (size_t i = 0; i < in.size(); ++i) {
        grad_in.v[i] = in.v[i] > 0.0f ? grad_out.v[i] : 0.0f;
    }
    return grad_in;
}

Tensor4 gap_forward(const Tensor4& in) {
    Tensor4 out(in.n, in.c, 1, 1);
    const size_t plane = static_cast<size_t>(in.h) * in.w;
    for (int n = 0; n < in.n; ++n) {
        for (int c = 0; c < in.c; ++c) {
            const float* p = &in.v[in.index(n, c, 0, 0)];
            float sum = 0.0f;
            for (size_t i = 0; i < plane; ++i) sum += p[i];
            out.at(n, c, 0, 0) = sum / static_cast<float>(plane);
        }
    }
    return out;
}

Tensor4 gap_backward(const Tensor4& in, const Tensor4& grad_out) {
    Tensor4 grad_in = Tensor4::zeros_like(in);
    const size_t plane = static_cast<size_t>(in.h) * in.w;
    for (int n = 0; n < in.n; ++n) {
        for (int c = 0; c < in.c; ++c) {
            const float g = grad_out.at(n, c, 0, 0) / static_cast<float>(plane);
            float* p = &grad_in.v[grad_in.index(n, c, 0, 0)];
            for (size_t i = 0; i < plane; ++i) p[i] = g;
        }
    }
    return grad_in;
}

Tensor4 fc_forward(const Tensor4& in, const Layer& layer) {
    const int in_f = layer.spec.in_features, out_f = layer.spec.out_features;
    Tensor4 out(in.n, out_f, 1, 1);
    for (int n = 0; n < in.n; ++n) {
        const float* x = &in.v[static_cast<size_t>(n) * in_f];
        for (int o = 0; o < out_f; ++o) {
            const float* w = &layer.weight.v[static_cast<size_t>(o) * in_f];
            float sum = layer.bias.v[static_cast<size_t>(o)];
            for (int f = 0; f < in_f; ++f) sum += w[f] * x[f];
            out.at(n, o, 0, 0) = sum;
        }
    }
    return out;
}

Tensor4 fc_backward(const Tensor4& in, const Tensor4& grad_out, const Layer& layer,
                    Tensor4* dw, Tensor4* db) {
    const int in_f = layer.spec.in_features, out_f = layer.spec.out_features;
    Tensor4 grad_in = Tensor4::zeros_like(in);
    for (int n = 0; n < in.n; ++n) {  // fixed sample order
        const float* x = &in.v[static_cast<size_t>(n) * in_f];
        float* gi = &grad_in.v[static_cast<size_t>(n) * in_f];
        for (int o = 0; o < out_f; ++o) {
            const float g = grad_out.at(n, o, 0, 0);
            const float* w = &layer.weight.v[static_cast<size_t>(o) * in_f];
            for (int f = 0; f < in_f; ++f) gi[f] += g * w[f];
            if (dw) {
                float* dwr = &dw->v[static_cast<size_t>(o) * in_f];
                for (int f = 0; f < in_f; ++f) dwr[f] += g * x[f];
                db->v[static_cast<size_t>(o)] += g;
            }
        }
    }
    return grad_in;
}

void softmax_rows(const Tensor4& logits, Tensor4& probs) {
    for (int n = 0; n < logits.n; ++n) {
        const float* x = &logits.v[static_cast<size_t>(n) * logits.c];
        float* p = &probs.v[static_cast<size_t>(n) * logits.c];
        float max_v = x[0];
        for (int c = 1; c < logits.c; ++c) max_v = std::max(max_v, x[c]);
        float sum = 0.0f;
        for (int c = 0; c < logits.c; ++c) {
            p[c] = std::exp(x[c] - max_v);
            sum += p[c];
        }
        for (int c = 0; c < logits.c; ++c) p[c] /= sum;
    }
}

Tensor4 softmax_forward(const Tensor4& in) {
    Tensor4 out = Tensor4::zeros_like(in);
    softmax_rows(in, out);
    return out;
}

Tensor4 softmax_backward(const Tensor4& probs, const Tensor4& grad_out) {
    Tensor4 grad_in = Tensor4::zeros_like(probs);
    for (int n = 0; n < probs.n; ++n) {
        const float* p = &probs.v[static_cast<size_t>(n) * probs.c];
        const float* g = &grad_out.v[static_cast<size_t>(n) * probs.c];
        float dot = 0.0f;
        for (int c = 0; c < probs.c; ++c) dot += g[c] * p[c];
        float* gi = &grad_in.v[static_cast<size_t>(n) * probs.c];
        for (int c = 0; c < probs.c; ++c) gi[c] = p[c] * (g[c] - dot);
    }
    return grad_in;
}

void check_range(const ModelGraph& model, int first_layer, int last_layer) {
    if (first_layer < 0 || last_layer > static_cast<int>(model.layers.size()) ||
        first_layer > last_layer) {
        throw std::invalid_argument("layer range [" + std::to_string(first_layer) + ", " +
                                    std::to_string(last_layer) + ") out of bounds");
    }
}

}  // namespace

Tensor4 forward_range(const ModelGraph& model, const Tensor4& input, int first_layer,
                      int last_layer, ActivationCache* cache) {
    check_range(model, first_layer, last_layer);
    const Shape3 want = model.shape_after(first_layer);
    if (Shape3{input.c, input.h, input.w} != want) {
        throw std::invalid_argument("forward: input shape " + input.shape_str() +
                                    " does not match expected " + want.str() + " at layer " +
                                    std::to_string(first_layer));
    }
    if (cache) {
        cache->first_layer = first_layer;
        cache->acts.clear();
        cache->pool_argmax.assign(model.layers.size(), {});
        cache->acts.push_back(input);
    }

    Tensor4 cur = input;
    for (int i = first_layer; i < last_layer; ++i) {
        const Layer& layer = model.layers[static_cast<size_t>(i)];
        Tensor4 next;
        switch (layer.spec.kind) {
            case LayerKind::conv3x3:
                next = conv_forward(cur, layer, model.output_shapes[static_cast<size_t>(i)]);
                break;
            case LayerKind::maxpool2x2: {
                std::vector<uint32_t> argmax;
                next = maxpool_forward(cur, cache ? &argmax : nullptr);
                if (cache) cache->pool_argmax[static_cast<size_t>(i)] = std::move(argmax);
                break;
            }
            case LayerKind::relu:
                next = relu_forward(cur);
                break;
            case LayerKind::global_avg_pool:
                next = gap_forward(cur);
                break;
            case LayerKind::fully_connected:
                next = fc_forward(cur, layer);
                break;
            case LayerKind::softmax:
                next = softmax_forward(cur);
                break;
        }
        cur = std::move(next);
        if (cache) cache->acts.push_back(cur);
    }
    return cur;
}

Tensor4 forward(const ModelGraph& model, const Tensor4& input, ActivationCache* cache) {
    return forward_range(model, input, 0, static_cast<int>(model.layers.size()), cache);
}

Gradients make_zero_gradients(const ModelGraph& model) {
    Gradients g;
    g.weight.resize(model.layers.size());
    g.bias.resize(model.layers.size());
    for (size_t i = 0; i < model.layers.size(); ++i) {
        if (model.layers[i].spec.has_params()) {
            g.weight[i] = Tensor4::zeros_like(model.layers[i].weight);
            g.bias[i] = Tensor4::zeros_like(model.layers[i].bias);
        }
    }
    return g;
}

Tensor4 backward_range(const ModelGraph& model, const ActivationCache& cache,
                       const Tensor4& upstream, int first_layer, int last_layer,
                       Gradients* grads) {
    check_range(model, first_layer, last_layer);
    const int cached_last = cache.first_layer + static_cast<int>(cache.acts.size()) - 1;
    if (first_layer < cache.first_layer || last_layer > cached_last) {
        throw std::invalid_argument("backward: cache covers layers [" +
                                    std::to_string(cache.first_layer) + ", " +
                                    std::to_string(cached_last) + "), requested [" +
                                    std::to_string(first_layer) + ", " +
                                    std::to_string(last_layer) + ")");
    }

    Tensor4 grad = upstream;
    for (int i = last_layer - 1; i >= first_layer; --i) {
        const Layer& layer = model.layers[static_cast<size_t>(i)];
        const Tensor4& in_act = cache.acts[static_cast<size_t>(i - cache.first_layer)];
        const Tensor4& out_act = cache.acts[static_cast<size_t>(i - cache.first_layer) + 1];
        if (!grad.same_shape(out_act)) {
            throw std::invalid_argument("backward: gradient shape " + grad.shape_str() +
                                        " does not match activation " + out_act.shape_str() +
                                        " at layer " + std::to_string(i) + " (stale cache?)");
        }
        Tensor4* dw = nullptr;
        Tensor4* db = nullptr;
        if (grads && layer.spec.has_params()) {
            dw = &grads->weight[static_cast<size_t>(i)];
            db = &grads->bias[static_cast<size_t>(i)];
        }
        switch (layer.spec.kind) {
            case LayerKind::conv3x3:
                grad = conv_backward(in_act, grad, layer, dw, db);
                break;
            case LayerKind::maxpool2x2:
                grad = maxpool_backward(in_act, grad, cache.pool_argmax[static_cast<size_t>(i)]);
                break;
            case LayerKind::relu:
                grad = relu_backward(in_act, grad);
                break;
            case LayerKind::global_avg_pool:
                grad = gap_backward(in_act, grad);
                break;
            case LayerKind::fully_connected:
                grad = fc_backward(in_act, grad, layer, dw, db);
                break;
            case LayerKind::softmax:
                grad = softmax_backward(out_act, grad);
                break;
        }
    }
    return grad;
}

Tensor4 backward(const ModelGraph& model, const ActivationCache& cache,
                 const Tensor4& upstream, Gradients* grads) {
    return backward_range(model, cache, upstream, 0, static_cast<int>(model.layers.size()),
                          grads);
}

LossAndGrad softmax_cross_entropy(const Tensor4& logits, std::span<const int> labels) {
    if (logits.h != 1 || logits.w != 1) {
        throw std::invalid_argument("softmax_cross_entropy wants (N, classes, 1, 1) logits");
    }
    if (labels.size() != static_cast<size_t>(logits.n)) {
        throw std::invalid_argument("label count does not match batch size");
    }
    const int classes = logits.c;
    for (int label : labels) {
        if (label < 0 || label >= classes) {
            throw std::out_of_range("label " + std::to_string(label) + " outside [0, " +
                                    std::to_string(classes) + ")");
        }
    }

    LossAndGrad result;
    result.logit_grad = Tensor4::zeros_like(logits);
    softmax_rows(logits, result.logit_grad);  // holds probabilities for now

    double total = 0.0;
    const float inv_n = 1.0f / static_cast<float>(logits.n);
    for (int n = 0; n < logits.n; ++n) {
        float* p = &result.logit_grad.v[static_cast<size_t>(n) * classes];
        // -log p computed from the logits for stability: max + log(sum) - x[label]
        const float* x = &logits.v[static_cast<size_t>(n) * classes];
        float max_v = x[0];
        for (int c = 1; c < classes; ++c) max_v = std::max(max_v, x[c]);
        float sum = 0.0f;
        for (int c = 0; c < classes; ++c) sum += std::exp(x[c] - max_v);
        total += static_cast<double>(max_v + std::log(sum) - x[labels[static_cast<size_t>(n)]]);

        p[labels[static_cast<size_t>(n)]] -= 1.0f;
        for (int c = 0; c < classes; ++c) p[c] *= inv_n;
    }
    result.loss = total / logits.n;
    return result;
}

std::vector<int> argmax_rows(const Tensor4& logits) {
    std::vector<int> out(static_cast<size_t>(logits.n));
    for (int n = 0; n < logits.n; ++n) {
        const float* x = &logits.v[static_cast<size_t>(n) * logits.c];
        int best = 0;
        for (int c = 1; c < logits.c; ++c) {
            if (x[c] > x[best]) best = c;
        }
        out[static_cast<size_t>(n)] = best;
    }
    return out;
}

}  // namespace fmce
