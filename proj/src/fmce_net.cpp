#include "fmce/fmce_net.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "fmce/checkpoint.hpp"
#include "fmce/errors.hpp"
#include "fmce/rng.hpp"

namespace fs = std::filesystem;

namespace fmce {

std::vector<LayerSpec> fmce_layer_specs(Shape3 input, int k, const FmceNetConfig& cfg) {
    if (k < 2) throw std::invalid_argument("score count K must be >= 2");
    if (input.c < 2 || input.h < 2 || input.w < 2) {
        throw std::invalid_argument("feature input " + input.str() +
                                    " too small for the convergence-score network");
    }

    std::vector<LayerSpec> specs;
    Shape3 shape = input;

    if (shape.c > cfg.channel_budget) {
        // channel reducer: conv only, spatial size preserved
        specs.push_back(LayerSpec::conv(shape.c, cfg.channel_budget, 1));
        specs.push_back(LayerSpec::relu());
        shape.c = cfg.channel_budget;
    }

    int halvings = 0;
    for (int s = std::min(shape.h, shape.w); s > 2; s /= 2) halvings++;
    const int stages = std::max(halvings, 2);

    for (int stage = 0; stage < stages; ++stage) {
        if (shape.h < 2 || shape.w < 2) {
            if (cfg.allow_single_stage && stage >= 1) break;
            throw std::invalid_argument("feature input " + input.str() +
                                        " is too small to halve twice");
        }
        const int out_c = std::max(shape.c / 2, 1);
        specs.push_back(LayerSpec::conv(shape.c, out_c, 1));
        specs.push_back(LayerSpec::maxpool());
        specs.push_back(LayerSpec::relu());
        shape = {out_c, shape.h / 2, shape.w / 2};
    }

    specs.push_back(LayerSpec::fc(shape.volume(), k));
    specs.push_back(LayerSpec::softmax());
    return specs;
}

FmceModel build_fmce(Shape3 input, int k, uint64_t seed, const FmceNetConfig& cfg) {
    FmceModel model;
    model.k = k;
    model.input_shape = input;
    model.graph = build_model(input, fmce_layer_specs(input, k, cfg), seed);
    model.logits_layer_count = static_cast<int>(model.graph.layers.size()) - 1;
    for (size_t i = 0; i < model.graph.layers.size(); ++i) {
        if (model.graph.layers[i].spec.kind == LayerKind::conv3x3) {
            model.last_conv_layer = static_cast<int>(i);
        }
    }
    model.norm_mean.assign(static_cast<size_t>(input.c), 0.0f);
    model.norm_std.assign(static_cast<size_t>(input.c), 1.0f);
    return model;
}

Shape3 FmceModel::heatmap_shape() const {
    return graph.output_shapes[static_cast<size_t>(last_conv_layer)];
}

namespace {

void apply_normalization(const FmceModel& model, Tensor4& x) {
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    for (int n = 0; n < x.n; ++n) {
        for (int c = 0; c < x.c; ++c) {
            const float mean = model.norm_mean[static_cast<size_t>(c)];
            const float std = model.norm_std[static_cast<size_t>(c)];
            float* p = &x.v[x.index(n, c, 0, 0)];
            for (size_t i = 0; i < plane; ++i) p[i] = (p[i] - mean) / std;
        }
    }
}

void fit_normalization(FmceModel& model, const FmcsDataset& dataset) {
    const int channels = dataset.feature_shape.c;
    const size_t plane =
        static_cast<size_t>(dataset.feature_shape.h) * dataset.feature_shape.w;
    std::vector<double> sum(static_cast<size_t>(channels), 0.0);
    std::vector<double> sum_sq(static_cast<size_t>(channels), 0.0);
    const size_t vol = static_cast<size_t>(dataset.feature_shape.volume());
    for (int idx : dataset.train_indices) {  // fixed sample order
        const float* row = &dataset.features[static_cast<size_t>(idx) * vol];
        for (int c = 0; c < channels; ++c) {
            const float* p = row + static_cast<size_t>(c) * plane;
            for (size_t i = 0; i < plane; ++i) {
                sum[static_cast<size_t>(c)] += p[i];
                sum_sq[static_cast<size_t>(c)] += static_cast<double>(p[i]) * p[i];
            }
        }
    }
    const double n = static_cast<double>(dataset.train_indices.size()) * static_cast<double>(plane);
    for (int c = 0; c < channels; ++c) {
        const double mean = sum[static_cast<size_t>(c)] / n;
        const double var = std::max(0.0, sum_sq[static_cast<size_t>(c)] / n - mean * mean);
        const double std = std::sqrt(var);
        model.norm_mean[static_cast<size_t>(c)] = static_cast<float>(mean);
        // dead channels (constant over the train split) are centered only
        model.norm_std[static_cast<size_t>(c)] = std < 1e-6 ? 1.0f : static_cast<float>(std);
    }
}

}  // namespace

FmceTrainResult train_fmce(const FmcsDataset& dataset, const TrainConfig& cfg,
                           const FmceNetConfig& net_cfg) {
    if (dataset.train_indices.empty()) {
        throw std::invalid_argument("dataset has no train split; call split_dataset first");
    }

    const uint64_t model_seed = derive_seed(cfg.seed, 0);
    const uint64_t shuffle_seed = derive_seed(cfg.seed, 1);

    FmceTrainResult result;
    result.model = build_fmce(dataset.feature_shape, dataset.k, model_seed, net_cfg);
    result.model.dataset_digest = dataset_digest(dataset);
    fit_normalization(result.model, dataset);
    result.loss.run_id = "fmce_net";

    if (cfg.epochs == 0) return result;  // untrained model, chance-level by design

    FmceModel& model = result.model;
    const BatchFiller fill = [&](const std::vector<int>& ids, std::vector<int>& labels) {
        labels.resize(ids.size());
        std::vector<int> rows(ids.size());
        for (size_t i = 0; i < ids.size(); ++i) {
            rows[i] = dataset.train_indices[static_cast<size_t>(ids[i])];
            labels[i] = dataset.meta[static_cast<size_t>(rows[i])].label - 1;
        }
        Tensor4 x = dataset.gather(rows);
        apply_normalization(model, x);
        return x;
    };

    result.loss = run_training(model.graph, model.logits_layer_count,
                               static_cast<int>(dataset.train_indices.size()), fill, cfg,
                               shuffle_seed, "fmce_net");
    return result;
}

std::vector<int> predict(const FmceModel& model, const Tensor4& raw_features) {
    Tensor4 x = raw_features;
    apply_normalization(model, x);
    const Tensor4 logits = forward_range(model.graph, x, 0, model.logits_layer_count, nullptr);
    return argmax_rows(logits);
}

EvalMetrics evaluate(const FmceModel& model, const FmcsDataset& dataset) {
    if (dataset.test_indices.empty()) {
        throw std::invalid_argument("dataset has no test split; call split_dataset first");
    }
    const std::vector<int> preds = predict(model, dataset.gather(dataset.test_indices));
    std::vector<int> labels(dataset.test_indices.size());
    for (size_t i = 0; i < labels.size(); ++i) {
        labels[i] = dataset.meta[static_cast<size_t>(dataset.test_indices[i])].label - 1;
    }
    return compute_metrics(preds, labels, dataset.k);
}

Heatmap grad_cam(const FmceModel& model, std::span<const float> raw_features,
                 int target_score) {
    if (target_score < 1 || target_score > model.k) {
        throw std::out_of_range("target score " + std::to_string(target_score) +
                                " outside [1, " + std::to_string(model.k) + "]");
    }
    const Shape3 in = model.input_shape;
    if (raw_features.size() != static_cast<size_t>(in.volume())) {
        throw std::invalid_argument("feature size " + std::to_string(raw_features.size()) +
                                    " does not match model input " + in.str());
    }

    Tensor4 x(1, in.c, in.h, in.w);
    std::copy(raw_features.begin(), raw_features.end(), x.v.begin());
    apply_normalization(model, x);

    ActivationCache cache;
    forward_range(model.graph, x, 0, model.logits_layer_count, &cache);

    Tensor4 upstream(1, model.k, 1, 1);
    upstream.at(0, target_score - 1, 0, 0) = 1.0f;

    // gradient of the target logit with respect to the last conv output
    const Tensor4 act_grad = backward_range(model.graph, cache, upstream,
                                            model.last_conv_layer + 1,
                                            model.logits_layer_count, nullptr);
    const Tensor4& act = cache.acts[static_cast<size_t>(model.last_conv_layer) + 1];

    const size_t plane = static_cast<size_t>(act.h) * act.w;
    Heatmap map;
    map.h = act.h;
    map.w = act.w;
    map.values.assign(plane, 0.0f);
    for (int c = 0; c < act.c; ++c) {
        const float* g = &act_grad.v[act_grad.index(0, c, 0, 0)];
        float weight = 0.0f;
        for (size_t i = 0; i < plane; ++i) weight += g[i];
        weight /= static_cast<float>(plane);
        const float* a = &act.v[act.index(0, c, 0, 0)];
        for (size_t i = 0; i < plane; ++i) map.values[i] += weight * a[i];
    }
    float max_v = 0.0f;
    for (float& v : map.values) {
        v = v > 0.0f ? v : 0.0f;
        max_v = std::max(max_v, v);
    }
    if (max_v > 0.0f) {
        for (float& v : map.values) v /= max_v;
    }
    return map;
}

void write_pgm(const Heatmap& map, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "P5\n" << map.w << " " << map.h << "\n255\n";
    for (float v : map.values) {
        const int byte = static_cast<int>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
        os.put(static_cast<char>(byte));
    }
    if (!os) throw std::runtime_error("short write on " + path);
}

void save_fmce_model(const FmceModel& model, const std::string& dir) {
    fs::create_directories(dir);
    save_checkpoint(model.graph, (fs::path(dir) / "weights.fmck").string());
    const nlohmann::json meta{
        {"k", model.k},
        {"input_shape", {model.input_shape.c, model.input_shape.h, model.input_shape.w}},
        {"norm_mean", model.norm_mean},
        {"norm_std", model.norm_std},
        {"rng_seed", model.graph.rng_seed},
        {"split_seed", model.split_seed},
        {"dataset_digest", model.dataset_digest},
    };
    std::ofstream os(fs::path(dir) / "model.json", std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write model metadata in " + dir);
    os << meta.dump(2) << "\n";
}

FmceModel load_fmce_model(const std::string& dir, const FmceNetConfig& cfg) {
    std::ifstream is(fs::path(dir) / "model.json");
    if (!is) throw ParseError("missing model metadata: " + dir + "/model.json");
    nlohmann::json meta;
    try {
        is >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(dir + "/model.json: " + e.what());
    }

    const auto shape = meta.at("input_shape").get<std::vector<int>>();
    if (shape.size() != 3) throw ParseError(dir + "/model.json: bad input_shape");
    FmceModel model = build_fmce({shape[0], shape[1], shape[2]}, meta.at("k").get<int>(),
                                 meta.value("rng_seed", uint64_t{0}), cfg);
    model.norm_mean = meta.at("norm_mean").get<std::vector<float>>();
    model.norm_std = meta.at("norm_std").get<std::vector<float>>();
    model.split_seed = meta.value("split_seed", uint64_t{0});
    model.dataset_digest = meta.value("dataset_digest", std::string{});
    if (model.norm_mean.size() != static_cast<size_t>(model.input_shape.c) ||
        model.norm_std.size() != static_cast<size_t>(model.input_shape.c)) {
        throw ParseError(dir + "/model.json: normalization stats do not match input shape");
    }
    load_checkpoint_into(model.graph, (fs::path(dir) / "weights.fmck").string());
    return model;
}

}  // namespace fmce
